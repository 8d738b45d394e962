"""Certified computation of the optimal sign-uncertainty radius.

For dimension d, eigenvalue sign s, and degree cap n, the quantity computed
is the least T such that some nonzero p = sum c_k L_k^alpha over the
admissible parity class satisfies p(0) = 0 and p(t) >= 0 for all t >= T; the
radius is rho = sqrt(T / (2 pi)).

The search bisects T. Each probe solves a finite LP relaxation (grid
feasibility with a margin objective), and every accepted probe is backed by
an exact-arithmetic certificate: the witness is rounded to dyadic rationals,
its zero value at the origin is restored exactly, and Sturm-based isolation
proves there is no sign change beyond the claimed threshold. The reported T
is therefore a rigorous upper bound for the optimum, while 2*lambda (twice
the smallest root of L_m^alpha, m = floor(n/2)+1) is a rigorous lower bound.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace

import gmpy2
from gmpy2 import mpfr, mpq, mpz

from .eigenbasis import (
    LaguerreExpansion,
    ParitySignature,
    expansion_to_json_dict,
    to_polynomial,
)
from .errors import (
    Infeasible,
    LpNumericalFailure,
    NoSignChange,
    PreconditionViolated,
    PrecisionExhausted,
)
from .laguerre import LaguerreParam, laguerre_at_zero, laguerre_values, smallest_root
from .poly import (
    Polynomial,
    last_sign_change,
    negative_samples_beyond,
    odd_root_count_beyond,
    poly_eval,
    simplest_rational_in,
)
from .precision import Scalar, as_exact, default_bits, format_scalar, to_scalar, working_precision
from .simplex import solve_lp

__all__ = [
    "FeasibilityProblem",
    "Candidate",
    "Certificate",
    "RhoResult",
    "min_feasible_degree",
    "admissible_indices",
    "build_grid",
    "make_problem",
    "solve_feasibility",
    "certify",
    "certify_expansion",
    "recertify_expansion",
    "refine_from_witness",
    "solve_rho",
    "rho_result_to_json_dict",
]

DEFAULT_T_TOL_EXP = -40  # bisection stops when the T bracket is below 2**this

_REASON_BEYOND = "sign change beyond the target threshold"

_log = logging.getLogger(__name__)


def min_feasible_degree(s) -> int:
    """Least degree cap admitting a nonzero witness with p(0) = 0.

    One even index (constant) or one odd index (c1 * L_1) is annihilated by
    the origin constraint, so two admissible indices are needed: degree 2 for
    s = +1 (indices {0, 2}) and 3 for s = -1 (indices {1, 3})."""
    s = ParitySignature.coerce(s)
    return 2 if s.s == +1 else 3


def admissible_indices(s, n: int) -> tuple:
    """Indices {k <= n : (-1)^k = s} of the decision coefficients."""
    s = ParitySignature.coerce(s)
    start = 0 if s.s == +1 else 1
    return tuple(range(start, n + 1, 2))


@dataclass(frozen=True)
class FeasibilityProblem:
    """One inner LP instance: is threshold T feasible at degree n?"""

    param: LaguerreParam
    s: ParitySignature
    n: int
    T: Scalar
    grid: tuple  # constraint points t_j >= T, t_0 = T
    bits: int


@dataclass(frozen=True)
class Candidate:
    """LP witness: expansion coefficients and the achieved margin
    min_j p(t_j) / (1 + t_j)^n over the full constraint grid."""

    expansion: LaguerreExpansion
    margin: Scalar


@dataclass(frozen=True)
class Certificate:
    """Exact-arithmetic verdict on a witness.

    certified status asserts, with no rounding error anywhere: the witness
    polynomial vanishes at 0, has positive leading coefficient, has no sign
    change in (verified_T, infinity), and is positive at verified_T + 1.
    verified_T is an exact rational at (or just above, within the isolation
    bracket) the witness's actual last sign change.
    """

    exact_witness: Polynomial  # rational coefficients
    exact_expansion: LaguerreExpansion  # dyadic rational coefficients
    verified_T: object  # mpq
    status: str  # "certified" | "failed"
    reason: str = ""

    @property
    def certified(self) -> bool:
        return self.status == "certified"


@dataclass(frozen=True)
class RhoResult:
    """Certified solve outcome; T and rho are upper bounds within t_tol of
    the optimum, lower_bound_T = 2*lambda is the matching lower bound."""

    d: int
    s: int
    n: int
    m: int
    rho: Scalar
    T: Scalar
    witness: LaguerreExpansion
    certificate: Certificate
    lower_bound_T: Scalar
    bits: int


def build_grid(T, n: int, bits: int) -> tuple:
    """Chebyshev-spaced constraint points t_j = T + span*(1 - cos(j pi/N))/2,
    j = 0..N, with N = max(64, 8n) and span = 16*max(T, n^2)."""
    with working_precision(bits):
        T = to_scalar(T)
        big_n = max(64, 8 * n)
        span = 16 * max(T, mpfr(n * n))
        pi = gmpy2.const_pi()
        grid = []
        for j in range(big_n + 1):
            c = gmpy2.cos(pi * j / big_n)
            grid.append(T + span * (1 - c) / 2)
        return tuple(grid)


def make_problem(param: LaguerreParam, s, n: int, T, bits: int | None = None) -> FeasibilityProblem:
    s = ParitySignature.coerce(s)
    bits = default_bits() if bits is None else int(bits)
    with working_precision(bits):
        return FeasibilityProblem(
            param=param, s=s, n=int(n), T=to_scalar(T), grid=build_grid(T, int(n), bits), bits=bits
        )


class _GridRows:
    """Lazy cache of normalized constraint rows: for grid point t_j, the
    vector (L_k(t_j) / sigma_j)_k over the admissible indices and its sum,
    where sigma_j = (1 + t_j)^n."""

    def __init__(self, fp: FeasibilityProblem, ks):
        self.fp = fp
        self.ks = ks
        self._rows = {}

    def row(self, j: int):
        got = self._rows.get(j)
        if got is None:
            t = self.fp.grid[j]
            values = laguerre_values(self.ks[-1], self.fp.param, t)
            sigma = (1 + t) ** self.fp.n
            lhat = [values[k] / sigma for k in self.ks]
            got = (lhat, sum(lhat))
            self._rows[j] = got
        return got

    def margin(self, j: int, y) -> Scalar:
        """p(t_j)/sigma_j for coefficients c = y - 1."""
        lhat, total = self.row(j)
        acc = -total
        for coef, yk in zip(lhat, y):
            acc += coef * yk
        return acc


def solve_feasibility(fp: FeasibilityProblem, *, extra_points=()):
    """Maximize the normalized margin over the admissible coefficient box.

    Variables are the shifted coefficients y_k = c_k + 1 in [0, 2] plus the
    margin mu >= 0; constraints are the exact origin equation, the grid rows
    p(t_j) >= mu * sigma(t_j), and a leading-sign condition making the
    monomial leading coefficient nonnegative (retried with the top
    coefficient pinned to zero if the first pass has no usable margin).
    Returns a Candidate when the certified-grid margin exceeds 2^(-bits/4),
    else None.

    extra_points: additional constraint locations t > T appended to the grid
    (cutting planes fed back from failed certificates — every t >= T carries
    a true constraint, so the LP stays a relaxation).
    """
    return _solve_feasibility_scored(fp, extra_points=extra_points)[0]


def _solve_feasibility_scored(fp: FeasibilityProblem, *, extra_points=(), working_hint=()):
    """solve_feasibility plus search metadata: returns (candidate, score,
    working) where score is the relative grid margin of the converged LP
    (None when the LP itself was infeasible) and working is the final active
    index set, useful as a hint for a nearby re-solve."""
    ks = admissible_indices(fp.s, fp.n)
    if len(ks) < 2:
        raise PreconditionViolated(
            f"degree {fp.n} admits no nonzero witness for parity {fp.s.label}"
        )
    bits = fp.bits
    with working_precision(bits):
        if extra_points:
            fp = replace(fp, grid=fp.grid + tuple(extra_points))
        rows = _GridRows(fp, ks)
        threshold = mpfr(2) ** -(bits // 4)
        viol_tol = mpfr(2) ** -(bits // 2)
        base = len(fp.grid) - len(extra_points)
        candidate, score, working = _feasibility_attempt(
            fp, ks, rows, threshold, viol_tol, base, pin_top=False, working_hint=working_hint
        )
        if candidate is None:
            pinned, pin_score, pin_working = _feasibility_attempt(
                fp, ks, rows, threshold, viol_tol, base, pin_top=True, working_hint=working_hint
            )
            if pinned is not None:
                candidate, score, working = pinned, pin_score, pin_working
            elif score is None:
                score, working = pin_score, pin_working
        return candidate, score, working


def _feasibility_attempt(fp, ks, rows, threshold, viol_tol, base, pin_top: bool, working_hint=()):
    nv = len(ks)
    bits = fp.bits
    zero = mpfr(0)
    one = mpfr(1)

    a_eq, b_eq = [], []
    at_zero = [to_scalar(laguerre_at_zero(k, fp.param)) for k in ks]
    w0 = 1 / max(abs(v) for v in at_zero)
    zero_row = [v * w0 for v in at_zero] + [zero]
    a_eq.append(zero_row)
    b_eq.append(sum(zero_row))
    sign_pos = nv - 1
    if pin_top:
        pin = [zero] * (nv + 1)
        pin[nv - 1] = one
        a_eq.append(pin)
        b_eq.append(one)
        sign_pos = nv - 2

    a_ub_static, b_ub_static = [], []
    for i in range(nv):  # y_i <= 2  (c_i <= 1)
        row = [zero] * (nv + 1)
        row[i] = one
        a_ub_static.append(row)
        b_ub_static.append(mpfr(2))
    # Monomial leading coefficient of L_k is (-1)^k / k!, so positivity of
    # the leading behavior needs (-1)^k c_k >= 0 at the effective top index.
    sign_row = [zero] * (nv + 1)
    if ks[sign_pos] % 2 == 0:
        sign_row[sign_pos] = -one  # -y <= -1, i.e. c >= 0
        a_ub_static.append(sign_row)
        b_ub_static.append(-one)
    else:
        sign_row[sign_pos] = one  # y <= 1, i.e. c <= 0
        a_ub_static.append(sign_row)
        b_ub_static.append(one)

    objective = [zero] * nv + [one]  # maximize mu
    last = len(fp.grid) - 1
    step = max(1, (base - 1) // 16)
    hint = {j for j in working_hint if 0 <= j <= last}
    working = sorted(
        set(range(0, base, step)) | {0, base - 1} | set(range(base, last + 1)) | hint
    )

    def scaled_row(j):
        # Equilibrate: sigma_j makes rows comparable only up to the huge
        # dynamic range of the grid, so each row is rescaled to unit size
        # (a positive row scaling, which leaves the feasible set unchanged)
        # to keep simplex pivot tolerances meaningful.
        lhat, total = rows.row(j)
        w = 1 / max(max(abs(v) for v in lhat), abs(total), mpfr(2) ** -(4 * bits))
        return [-v * w for v in lhat] + [w], -total * w

    for _ in range(64):
        a_ub = list(a_ub_static)
        b_ub = list(b_ub_static)
        for j in working:
            row, rhs = scaled_row(j)
            a_ub.append(row)
            b_ub.append(rhs)
        res = solve_lp(objective, a_ub, b_ub, a_eq, b_eq, bits=bits, maximize=True)
        if res.status == "infeasible":
            return None, None, tuple(working)
        if res.status != "optimal":
            raise LpNumericalFailure(f"feasibility LP ended {res.status}")
        y = res.x[:nv]
        mu = res.x[nv]

        margins = [rows.margin(j, y) for j in range(len(fp.grid))]
        scale = max(max(abs(m) for m in margins), mpfr(2) ** -(4 * bits))
        working_set = set(working)
        violated = [
            j
            for j in range(len(margins))
            if margins[j] < mu - viol_tol * scale and j not in working_set
        ]
        if not violated:
            full_margin = min(margins)
            score = full_margin / scale
            # Only the rows actually shaping the optimum are worth carrying
            # to a nearby re-solve; the rest would snowball the LP size.
            active = tuple(
                j for j in working if margins[j] <= mu + 4 * viol_tol * scale
            )
            # Feasibility is judged on the margin relative to the witness's
            # own magnitude over the grid: sigma normalization alone leaves
            # absolute margins spanning many orders across problem sizes.
            if full_margin <= threshold * scale:
                return None, score, active
            coeffs = {k: yk - 1 for k, yk in zip(ks, y)}
            candidate = Candidate(
                expansion=LaguerreExpansion(fp.param, coeffs), margin=full_margin
            )
            return candidate, score, active
        violated.sort(key=lambda j: margins[j])
        working = sorted(working_set | set(violated[:12]))
    raise LpNumericalFailure("constraint generation did not converge")


def _round_dyadic(value, bits: int) -> mpq:
    """Nearest rational with denominator 2^bits (ties away from zero)."""
    q = as_exact(value) * (mpz(1) << bits)
    num, den = q.numerator, q.denominator
    if num >= 0:
        rounded = (2 * num + den) // (2 * den)
    else:
        rounded = -((-2 * num + den) // (2 * den))
    return mpq(rounded, mpz(1) << bits)


def _odd_part(x: mpz) -> mpz:
    x = mpz(x)
    while x % 2 == 0:
        x //= 2
    return x


def _certify_core(e: LaguerreExpansion, bits: int):
    """Round, repair, and analyze a witness exactly.

    Returns (certificate_without_status_fields, failure_reason): on any
    structural failure the polynomial analysis is skipped and the reason
    explains it; otherwise verified_T encloses the exact last sign change.
    """
    param = e.param
    rounded = {k: _round_dyadic(c, bits) for k, c in e.coeffs.items()}
    rounded = {k: v for k, v in rounded.items() if v != 0}
    if not rounded:
        return None, "witness rounds to zero"
    parities = {k % 2 for k in rounded}
    if len(parities) > 1:
        return None, "mixed-parity support"
    k0 = 0 if parities == {0} else 1

    # The monomial leading coefficient of L_k is (-1)^k / k!, so positivity
    # at infinity needs (-1)^top c_top > 0.  A wrong-signed top entry at
    # noise level is a rounding artifact (near-degenerate optima drive the
    # top coefficient to zero); dropping it certifies the lower-degree
    # witness the numbers actually describe.
    noise = mpq(1, mpz(1) << (bits // 2))
    while rounded:
        top = max(rounded)
        c_top = rounded[top]
        if (c_top if top % 2 == 0 else -c_top) > 0:
            break
        if abs(c_top) > noise:
            break
        del rounded[top]
    if not rounded:
        return None, "witness rounds to zero"

    residual = sum(v * laguerre_at_zero(k, param) for k, v in rounded.items())
    if residual != 0:
        delta = -residual / laguerre_at_zero(k0, param)
        if abs(delta) > mpq(1, mpz(1) << (bits // 2)):
            return None, "rounding destroyed the origin constraint"
        rounded[k0] = rounded.get(k0, mpq(0)) + delta
        if rounded[k0] == 0:
            del rounded[k0]
        if not rounded:
            return None, "witness rounds to zero"

    # Rescale by the least common odd factor so every coefficient is dyadic
    # again (the repair divides by L_{k0}(0), whose value need not be a power
    # of two); positive scaling changes no sign structure.
    odd_lcm = mpz(1)
    for v in rounded.values():
        odd_lcm = gmpy2.lcm(odd_lcm, _odd_part(v.denominator))
    if odd_lcm > 1:
        rounded = {k: v * odd_lcm for k, v in rounded.items()}

    exact_expansion = LaguerreExpansion(param, rounded)
    witness = to_polynomial(exact_expansion)
    if witness.is_zero:
        return None, "witness rounds to zero"
    if poly_eval(witness, mpq(0)) != 0:
        return None, "nonzero value at the origin"
    if as_exact(witness.coeffs[-1]) <= 0:
        return None, "nonpositive leading coefficient"

    report = last_sign_change(witness, 0, bits=bits)
    if report.last_change is None:
        verified_T = mpq(0)
    else:
        lo, hi = report.bracket
        exact_root = simplest_rational_in(lo, hi)
        if poly_eval(witness, exact_root) == 0:
            verified_T = exact_root
        else:
            verified_T = as_exact(hi)
    if poly_eval(witness, verified_T + 1) <= 0:
        return None, "not positive beyond the last sign change"
    return (witness, exact_expansion, verified_T), ""


def certify_expansion(e: LaguerreExpansion, T, bits: int | None = None) -> Certificate:
    """Exact certificate for an expansion against threshold T."""
    bits = default_bits() if bits is None else int(bits)
    T_q = as_exact(T)
    core, reason = _certify_core(e, bits)
    if core is None:
        empty = LaguerreExpansion(e.param, {})
        return Certificate(
            exact_witness=Polynomial(),
            exact_expansion=empty,
            verified_T=mpq(0),
            status="failed",
            reason=reason,
        )
    witness, exact_expansion, verified_T = core
    beyond = odd_root_count_beyond(witness, T_q)
    if beyond:
        return Certificate(
            exact_witness=witness,
            exact_expansion=exact_expansion,
            verified_T=verified_T,
            status="failed",
            reason=_REASON_BEYOND,
        )
    return Certificate(
        exact_witness=witness,
        exact_expansion=exact_expansion,
        verified_T=verified_T,
        status="certified",
    )


def certify(c: Candidate, T, bits: int | None = None) -> Certificate:
    """Exact certificate for an LP candidate against threshold T."""
    if not c.margin > 0:
        raise PreconditionViolated("certify requires a candidate with positive margin")
    return certify_expansion(c.expansion, T, bits=bits)


def recertify_expansion(e: LaguerreExpansion, bits: int | None = None) -> Certificate:
    """Exact certificate for an expansion against its own last sign change.

    Used to revalidate stored witnesses: verified_T is recomputed from
    scratch, and by construction the polynomial has no sign change beyond it,
    so a structurally sound witness always certifies against that value.
    """
    bits = default_bits() if bits is None else int(bits)
    core, reason = _certify_core(e, bits)
    if core is None:
        empty = LaguerreExpansion(e.param, {})
        return Certificate(
            exact_witness=Polynomial(),
            exact_expansion=empty,
            verified_T=mpq(0),
            status="failed",
            reason=reason,
        )
    witness, exact_expansion, verified_T = core
    return Certificate(
        exact_witness=witness,
        exact_expansion=exact_expansion,
        verified_T=verified_T,
        status="certified",
    )


def refine_from_witness(w: LaguerreExpansion, bits: int | None = None) -> Scalar:
    """Exact last sign change T* of the witness polynomial on [0, inf)."""
    if w.is_zero:
        raise PreconditionViolated("witness must be nonzero")
    bits = default_bits() if bits is None else int(bits)
    with working_precision(bits):
        report = last_sign_change(to_polynomial(w.to_exact()), 0, bits=bits)
    if report.last_change is None:
        raise NoSignChange("witness polynomial keeps one sign on [0, inf)")
    return report.last_change


def _self_certified(cert: Certificate) -> Certificate:
    """Repackage a structurally sound certificate against its own last sign
    change: by construction there is no sign change beyond verified_T."""
    if cert.certified:
        return cert
    return replace(cert, status="certified", reason="")


def solve_rho(d: int, s, n: int, *, bits: int | None = None, t_tol=None) -> RhoResult:
    """Bisect T over [2*lambda, T_hi] and return the certified optimum.

    Every returned result carries an exact certificate; T is tightened to the
    final witness's actual last sign change, so it is typically far closer to
    the true optimum than the bisection tolerance.
    """
    s = ParitySignature.coerce(s)
    if d < 1 or int(d) != d:
        raise PreconditionViolated("dimension must be a positive integer")
    if n < min_feasible_degree(s):
        raise Infeasible(
            f"degree {n} admits no nonzero witness for parity {s.label}"
        )
    d = int(d)
    n = int(n)
    bits = default_bits() if bits is None else int(bits)
    param = LaguerreParam(d)
    m = n // 2 + 1

    with working_precision(bits):
        if t_tol is None:
            t_tol = mpfr(2) ** DEFAULT_T_TOL_EXP
        else:
            t_tol = to_scalar(t_tol)
        lam = smallest_root(m, param, bits=bits)
        two_lambda = 2 * lam

        best = None  # (verified_T as mpq, Certificate)
        cuts = []  # certificate-driven constraint points, shared across probes

        hint = ()  # final LP working set, reused across nearby probes

        def probe(T):
            """Solve + certify at threshold T; update the best certificate.

            Returns (certificate_or_None, score) where score is the final
            LP's relative grid margin at T (None when that LP was
            infeasible). Certificate failures of the "sign change beyond"
            kind feed the exact locations where the witness went negative
            back into the LP as extra constraint points, and the probe is
            retried: the pinned grid is a starting relaxation, not the final
            word.
            """
            nonlocal best, hint
            fp = make_problem(param, s, n, T, bits)
            score = None
            for rnd in range(24):
                # Recent cuts track the current bracket; older ones mostly
                # duplicate grid structure and only bloat the LP, so cap the
                # carried set (anything still needed is re-derived).
                local_cuts = tuple(t for t in cuts[-64:] if t > T)
                try:
                    cand, score, hint = _solve_feasibility_scored(
                        fp, extra_points=local_cuts, working_hint=hint
                    )
                except LpNumericalFailure as exc:
                    raise PrecisionExhausted(
                        f"feasibility LP failed numerically at T = {T}: {exc}"
                    ) from exc
                if cand is None:
                    _log.debug("probe T=%s: no LP candidate (round %d, cuts=%d)", T, rnd, len(cuts))
                    return None, score
                cert = certify(cand, T, bits=bits)
                usable = cert.certified or cert.reason == _REASON_BEYOND
                if usable and not cert.exact_expansion.is_zero:
                    # Even a cert that failed against T still proves its
                    # witness has no sign change beyond its own verified_T.
                    if best is None or cert.verified_T < best[0]:
                        best = (cert.verified_T, _self_certified(cert))
                if cert.certified:
                    _log.debug("probe T=%s: certified (round %d, cuts=%d)", T, rnd, len(cuts))
                    return cert, score
                if cert.reason != _REASON_BEYOND:
                    _log.debug("probe T=%s: certificate failed: %s", T, cert.reason)
                    return None, score
                fresh = [
                    to_scalar(x)
                    for x in negative_samples_beyond(cert.exact_witness, as_exact(T))
                ]
                fresh = [x for x in fresh if x > T and x not in local_cuts]
                if not fresh or len(cuts) > 1200:
                    _log.debug(
                        "probe T=%s: cut budget exhausted (round %d, fresh=%d, cuts=%d)",
                        T, rnd, len(fresh), len(cuts),
                    )
                    return None, score
                for x in fresh:
                    if x in cuts:
                        cuts.remove(x)  # recency bump: keep it in the capped window
                    cuts.append(x)
            _log.debug("probe T=%s: retry rounds exhausted (cuts=%d)", T, len(cuts))
            return None, score

        def ceil_scalar(q):
            """Smallest representable value >= q at the working precision."""
            t = to_scalar(q)
            return t if t >= q else gmpy2.next_above(t)

        lo = two_lambda
        hi = None
        T_probe = mpfr(d)
        for _ in range(90):
            cert, _score = probe(T_probe)
            if cert is not None:
                # The witness has no sign change beyond verified_T, so that
                # exact value is itself a certified-feasible threshold: jump
                # the upper bracket straight to it.
                hi = min(T_probe, ceil_scalar(cert.verified_T))
                break
            lo = max(lo, T_probe)
            T_probe *= 2
        if hi is None:
            raise PrecisionExhausted(
                "no certified feasible threshold found while doubling; raise the precision"
            )

        while hi - lo > t_tol:
            mid = (lo + hi) / 2
            cert, _score = probe(mid)
            if cert is not None:
                hi = min(mid, ceil_scalar(cert.verified_T))
            else:
                lo = mid

        if best is None:
            raise PrecisionExhausted("no certificate survived; raise the precision")
        verified_T, cert = best
        T_final = to_scalar(verified_T)
        rho = gmpy2.sqrt(T_final / (2 * gmpy2.const_pi()))
        return RhoResult(
            d=d,
            s=s.s,
            n=n,
            m=m,
            rho=rho,
            T=T_final,
            witness=cert.exact_expansion,
            certificate=cert,
            lower_bound_T=two_lambda,
            bits=bits,
        )


def rho_result_to_json_dict(r: RhoResult) -> dict:
    return {
        "d": r.d,
        "s": r.s,
        "n": r.n,
        "m": r.m,
        "rho": format_scalar(r.rho),
        "T": format_scalar(r.T),
        "two_lambda": format_scalar(r.lower_bound_T),
        "witness": expansion_to_json_dict(r.witness),
        "certified": r.certificate.certified,
        "bits": r.bits,
    }
