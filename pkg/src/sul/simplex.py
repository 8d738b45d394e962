"""Dense two-phase simplex over multiprecision floats.

The feasibility subproblems solved here are small (tens of variables, a few
hundred rows) but need far more headroom than binary64: optima are later
rounded to dyadic rationals and re-verified exactly, so the solver works at
the caller's precision and reports an explicit numerical-failure status
instead of silently returning garbage.

Standard form handled: minimize (or maximize) c.x subject to
A_ub x <= b_ub, A_eq x = b_eq, x >= 0. Upper bounds on variables are passed
as ordinary rows by the caller.

Pivoting uses Dantzig's rule (most negative reduced cost) and switches
permanently to Bland's least-index rule once a long run of degenerate pivots
suggests cycling, which guarantees termination.
"""

from __future__ import annotations

from dataclasses import dataclass

from gmpy2 import mpfr

from .errors import LpNumericalFailure, PreconditionViolated
from .precision import default_bits, to_scalar, working_precision

__all__ = ["LpResult", "solve_lp"]

_DEGENERATE_STALL = 40


@dataclass(frozen=True)
class LpResult:
    status: str  # "optimal" | "infeasible" | "unbounded"
    x: tuple  # structural variable values (empty unless optimal)
    objective: object  # mpfr value of c.x (None unless optimal)
    phase1_objective: object  # mpfr residual infeasibility after phase 1


class _Tableau:
    def __init__(self, n_struct, rows, basis, cost1, cost2, eps):
        self.n_struct = n_struct
        self.rows = rows  # list of lists; last entry of each is the rhs
        self.basis = basis  # basis[i] = column index basic in row i
        self.cost1 = cost1  # phase-1 reduced-cost row (rhs = -objective)
        self.cost2 = cost2  # phase-2 reduced-cost row, kept in sync
        self.eps = eps
        self.blocked = set()  # columns barred from entering (artificials)
        self.bland = False
        self._stall = 0

    @property
    def ncols(self) -> int:
        return len(self.cost1) - 1

    def pivot(self, r: int, col: int) -> None:
        row = self.rows[r]
        piv = row[col]
        inv = 1 / piv
        self.rows[r] = row = [v * inv for v in row]
        for i, target in enumerate(self.rows):
            if target is row:
                continue
            factor = target[col]
            if factor:
                self.rows[i] = [
                    tv - factor * rv if rv else tv for tv, rv in zip(target, row)
                ]
        for cost in (self.cost1, self.cost2):
            factor = cost[col]
            if factor:
                # in place: callers hold references to the cost rows
                cost[:] = [cv - factor * rv if rv else cv for cv, rv in zip(cost, row)]
        self.basis[r] = col

    def _entering(self, cost) -> int:
        if self.bland:
            for j in range(self.ncols):
                if j not in self.blocked and cost[j] < -self.eps:
                    return j
            return -1
        best, best_val = -1, -self.eps
        for j in range(self.ncols):
            if j not in self.blocked and cost[j] < best_val:
                best, best_val = j, cost[j]
        return best

    def _leaving(self, col) -> int:
        best, best_ratio = -1, None
        for i, row in enumerate(self.rows):
            a = row[col]
            if a > self.eps:
                ratio = row[-1] / a
                if (
                    best_ratio is None
                    or ratio < best_ratio
                    or (ratio == best_ratio and self.basis[i] < self.basis[best])
                ):
                    best, best_ratio = i, ratio
        return best

    def run(self, cost, max_iters) -> str:
        for _ in range(max_iters):
            col = self._entering(cost)
            if col < 0:
                return "optimal"
            r = self._leaving(col)
            if r < 0:
                return "unbounded"
            if self.rows[r][-1] <= self.eps:
                self._stall += 1
                if self._stall >= _DEGENERATE_STALL:
                    self.bland = True
            else:
                self._stall = 0
            self.pivot(r, col)
        raise LpNumericalFailure("simplex iteration limit exceeded")


def _as_rows(a, width, name):
    rows = []
    for row in a or []:
        row = [to_scalar(v) for v in row]
        if len(row) != width:
            raise PreconditionViolated(f"{name} row width {len(row)} != {width}")
        rows.append(row)
    return rows


def solve_lp(c, a_ub=None, b_ub=None, a_eq=None, b_eq=None, *, bits=None, maximize=False):
    """Solve the LP at `bits` of working precision.

    Returns an LpResult. Raises LpNumericalFailure when the phase-1 optimum
    falls between the feasibility and infeasibility thresholds (the answer
    would depend on roundoff) or when iteration limits are hit.
    """
    bits = default_bits() if bits is None else int(bits)
    with working_precision(bits):
        c = [to_scalar(v) for v in c]
        n = len(c)
        if maximize:
            c = [-v for v in c]
        ub_rows = _as_rows(a_ub, n, "a_ub")
        eq_rows = _as_rows(a_eq, n, "a_eq")
        ub_rhs = [to_scalar(v) for v in (b_ub or [])]
        eq_rhs = [to_scalar(v) for v in (b_eq or [])]
        if len(ub_rhs) != len(ub_rows) or len(eq_rhs) != len(eq_rows):
            raise PreconditionViolated("rhs length does not match constraint rows")

        n_slack = len(ub_rows)
        m = len(ub_rows) + len(eq_rows)
        zero = mpfr(0)
        eps = mpfr(2) ** -(bits // 2)

        # Column layout: structurals, slacks, artificials, rhs.
        art_cols = []
        tableau_rows = []
        basis = []
        pending = []  # (row_index,) of rows needing an artificial
        for i, (row, rhs) in enumerate(zip(ub_rows, ub_rhs)):
            slack = [zero] * n_slack
            slack[i] = mpfr(1)
            if rhs < 0:
                row = [-v for v in row]
                slack[i] = mpfr(-1)
                rhs = -rhs
            tableau_rows.append(row + slack + [rhs])
            if slack[i] > 0:
                basis.append(n + i)
            else:
                basis.append(-1)
                pending.append(len(tableau_rows) - 1)
        for row, rhs in zip(eq_rows, eq_rhs):
            if rhs < 0:
                row = [-v for v in row]
                rhs = -rhs
            tableau_rows.append(row + [zero] * n_slack + [rhs])
            basis.append(-1)
            pending.append(len(tableau_rows) - 1)

        n_art = len(pending)
        base_cols = n + n_slack
        for j, i in enumerate(pending):
            col = base_cols + j
            art_cols.append(col)
            basis[i] = col
        for i, row in enumerate(tableau_rows):
            art = [zero] * n_art
            if basis[i] >= base_cols:
                art[basis[i] - base_cols] = mpfr(1)
            row[-1:-1] = art  # insert before rhs

        ncols = base_cols + n_art
        cost1 = [zero] * ncols + [zero]
        for col in art_cols:
            cost1[col] = mpfr(1)
        cost2 = [v for v in c] + [zero] * (n_slack + n_art) + [zero]
        tab = _Tableau(n, tableau_rows, basis, cost1, cost2, eps)
        # Make the phase-1 reduced costs consistent with the artificial basis.
        for i, row in enumerate(tableau_rows):
            if basis[i] >= base_cols:
                for j, v in enumerate(row):
                    cost1[j] -= v

        max_iters = 200 * (m + ncols) + 2000
        if n_art:
            status = tab.run(cost1, max_iters)
            if status == "unbounded":
                raise LpNumericalFailure("phase 1 reported unbounded")
            p1 = -cost1[-1]
            infeasibility_floor = mpfr(2) ** -(bits // 4)
            if p1 > eps:
                if p1 < infeasibility_floor:
                    raise LpNumericalFailure(
                        "phase-1 optimum is in the ambiguous band; raise the precision"
                    )
                return LpResult("infeasible", (), None, p1)
            # Pivot lingering artificials out of the basis, or drop their rows.
            for i in range(len(tab.rows) - 1, -1, -1):
                if tab.basis[i] < base_cols:
                    continue
                entry = next(
                    (j for j in range(base_cols) if abs(tab.rows[i][j]) > eps),
                    None,
                )
                if entry is not None:
                    tab.pivot(i, entry)
                else:
                    del tab.rows[i]
                    del tab.basis[i]
            tab.blocked = set(art_cols)
        else:
            p1 = zero

        tab._stall = 0
        status = tab.run(cost2, max_iters)
        if status == "unbounded":
            return LpResult("unbounded", (), None, p1)
        x = [zero] * n
        for i, col in enumerate(tab.basis):
            if col < n:
                x[col] = tab.rows[i][-1]
        objective = -cost2[-1]
        if maximize:
            objective = -objective
        return LpResult("optimal", tuple(x), objective, p1)
