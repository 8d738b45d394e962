"""Generalized Laguerre polynomials, certified roots, and Gauss quadrature.

The parameter is alpha = d/2 - 1 for an ambient dimension d >= 1, stored as
the exact integer d - 2 (twice alpha). Root finding never calls a general
eigensolver: float64 bisection on the tridiagonal inertia count (the negative
pivots of the LDL^T of J - xI form a Sturm count for L_m) isolates each root,
Newton iteration at working precision polishes it, and inertia counts at full
precision certify the result. Quadrature weights come from the Golub-Welsch
relation evaluated through the orthonormal three-term recurrence, and every
rule must pass the moment-system validation before it is released.
"""

from __future__ import annotations

import functools
import threading
from dataclasses import dataclass

import gmpy2
import numpy as np
from gmpy2 import mpfr, mpq, mpz

from .errors import MomentMismatch, PrecisionExhausted, PreconditionViolated
from .poly import Polynomial
from .precision import Scalar, default_bits, gamma_half_integer, working_precision

__all__ = [
    "LaguerreParam",
    "QuadratureRule",
    "laguerre_poly",
    "laguerre_at_zero",
    "laguerre_values",
    "smallest_root",
    "smallest_roots_batch",
    "gauss_laguerre_rule",
    "moment",
    "roots_below",
]

_GUARD_BITS = 64


@dataclass(frozen=True)
class LaguerreParam:
    """Dimension parameter; alpha = d/2 - 1 is kept exact via twice_alpha."""

    d: int

    def __post_init__(self):
        if not isinstance(self.d, int) or isinstance(self.d, bool) or self.d < 1:
            raise PreconditionViolated(f"dimension must be a positive integer, got {self.d!r}")

    @property
    def twice_alpha(self) -> int:
        return self.d - 2

    @property
    def alpha_q(self) -> mpq:
        return mpq(self.d - 2, 2)

    def alpha_scalar(self) -> Scalar:
        """alpha at the ambient precision (exact: a half-integer is dyadic)."""
        return mpfr(self.d - 2) / 2


@functools.lru_cache(maxsize=None)
def _laguerre_coeffs(k: int, d: int) -> tuple:
    """Exact monomial coefficients of L_k^alpha as rationals."""
    if k == 0:
        return (mpq(1),)
    if k == 1:
        return (mpq(d, 2), mpq(-1))
    prev = _laguerre_coeffs(k - 1, d)
    prev2 = _laguerre_coeffs(k - 2, d)
    alpha = mpq(d - 2, 2)
    big_a = 2 * k - 1 + alpha
    big_b = k - 1 + alpha
    out = [mpq(0)] * (k + 1)
    for j, c in enumerate(prev):
        out[j] += big_a * c
        out[j + 1] -= c
    for j, c in enumerate(prev2):
        out[j] -= big_b * c
    return tuple(c / k for c in out)


def laguerre_poly(k: int, param: LaguerreParam) -> Polynomial:
    """L_k^alpha in the monomial basis, with exact rational coefficients."""
    if k < 0:
        raise PreconditionViolated("degree index must be nonnegative")
    return Polynomial(_laguerre_coeffs(k, param.d))


@functools.lru_cache(maxsize=None)
def _laguerre_at_zero_q(k: int, d: int) -> mpq:
    alpha = mpq(d - 2, 2)
    acc = mpq(1)
    for i in range(1, k + 1):
        acc *= (alpha + i) / i
    return acc


def laguerre_at_zero(k: int, param: LaguerreParam) -> mpq:
    """L_k^alpha(0) = binomial(k + alpha, k), as an exact rational product."""
    if k < 0:
        raise PreconditionViolated("degree index must be nonnegative")
    return _laguerre_at_zero_q(k, param.d)


def laguerre_values(kmax: int, param: LaguerreParam, t) -> list:
    """[L_0(t), ..., L_kmax(t)] by the three-term recurrence, ambient precision."""
    alpha = param.alpha_scalar()
    t = mpfr(t)
    vals = [mpfr(1)]
    if kmax >= 1:
        vals.append(1 + alpha - t)
    for k in range(2, kmax + 1):
        vals.append(((2 * k - 1 + alpha - t) * vals[k - 1] - (k - 1 + alpha) * vals[k - 2]) / k)
    return vals


def _value_pair(m: int, alpha, t):
    """(L_m(t), L_{m-1}(t)) by the recurrence, in the ambient context."""
    v_prev = mpfr(1)
    if m == 0:
        return v_prev, None
    v = 1 + alpha - t
    for k in range(2, m + 1):
        v, v_prev = ((2 * k - 1 + alpha - t) * v - (k - 1 + alpha) * v_prev) / k, v
    return v, v_prev


def moment(j: int, param: LaguerreParam, bits: int | None = None) -> Scalar:
    """Integral of u^j against e^{-u} u^alpha du on [0, inf): Gamma(alpha + j + 1)."""
    if j < 0:
        raise PreconditionViolated("moment order must be nonnegative")
    bits = default_bits() if bits is None else bits
    return gamma_half_integer(param.d + 2 * j, bits)


# ---------------------------------------------------------------------------
# root counting (tridiagonal inertia = Sturm counts for L_m)
# ---------------------------------------------------------------------------


def roots_below(x, m: int, param: LaguerreParam, bits: int | None = None) -> int:
    """Number of roots of L_m^alpha strictly below x (ties count as below).

    Negative-pivot count of the LDL^T factorization of J - xI, where J is the
    Jacobi matrix of the orthonormal recurrence; its leading principal minors
    form a Sturm sequence for the characteristic polynomial.
    """
    bits = default_bits() if bits is None else bits
    with working_precision(bits):
        x = mpfr(x)
        alpha = param.alpha_scalar()
        tiny = -(mpfr(2) ** (-4 * bits))
        q = (alpha + 1) - x
        count = 1 if q <= 0 else 0
        for i in range(2, m + 1):
            if q == 0:
                q = tiny
            q = (2 * i - 1 + alpha) - x - ((i - 1) * (i - 1 + alpha)) / q
            if q <= 0:
                count += 1
    return count


def _float_counts(m: int, alphas, xs):
    """Vectorized float64 inertia counts; alphas and xs are same-shape arrays."""
    q = (alphas + 1.0) - xs
    q = np.where(q == 0.0, -1e-300, q)
    count = (q < 0).astype(np.int64)
    for i in range(2, m + 1):
        q = (2 * i - 1 + alphas) - xs - ((i - 1) * (i - 1 + alphas)) / q
        q = np.where(q == 0.0, -1e-300, q)
        count += q < 0
    return count


def _float_brackets_smallest(m: int, alphas):
    """Float64 bisection brackets for the least root, one per alpha."""
    lo = np.zeros_like(alphas)
    hi = alphas + 1.0  # the least eigenvalue never exceeds the first diagonal entry
    for _ in range(90):
        mid = 0.5 * (lo + hi)
        hit = _float_counts(m, alphas, mid) >= 1
        hi = np.where(hit, mid, hi)
        lo = np.where(hit, lo, mid)
    return lo, hi


def _float_brackets_all(m: int, alpha_f: float):
    """Float64 bisection brackets for all m roots of L_m at one alpha."""
    i = np.arange(1, m + 1, dtype=np.float64)
    diag = 2 * i - 1 + alpha_f
    off = np.sqrt(i[:-1] * (i[:-1] + alpha_f)) if m > 1 else np.zeros(0)
    radius = np.zeros(m)
    if m > 1:
        radius[:-1] += off
        radius[1:] += off
    ub = float(np.max(diag + radius)) + 1.0
    alphas = np.full(m, alpha_f)
    targets = np.arange(1, m + 1)
    lo = np.zeros(m)
    hi = np.full(m, ub)
    for _ in range(90):
        mid = 0.5 * (lo + hi)
        hit = _float_counts(m, alphas, mid) >= targets
        hi = np.where(hit, mid, hi)
        lo = np.where(hit, lo, mid)
    return lo, hi


def _polish_root(m: int, param: LaguerreParam, target: int, lo, hi, bits: int) -> Scalar:
    """Newton-polish the `target`-th smallest root of L_m inside [lo, hi].

    Runs with guard bits; falls back to certified inertia bisection whenever a
    Newton step leaves the bracket. Returns the value rounded to `bits`.
    """
    work = bits + _GUARD_BITS
    with working_precision(work):
        alpha = param.alpha_scalar()
        lo = mpfr(lo)
        hi = mpfr(hi)
        if not lo < hi:
            pad = abs(hi) * (mpfr(2) ** -40) + mpfr(2) ** -1000
            lo, hi = lo - pad, hi + pad
        x = (lo + hi) / 2
        tol = mpfr(2) ** (-bits - 8)
        for _ in range(200):
            value, value_prev = _value_pair(m, alpha, x)
            deriv = (m * value - (m + alpha) * value_prev) / x if x != 0 else mpfr(0)
            step_ok = deriv != 0 and gmpy2.is_finite(deriv)
            if step_ok:
                delta = value / deriv
                xn = x - delta
            if not step_ok or not (lo < xn < hi):
                mid = (lo + hi) / 2
                if roots_below(mid, m, param, work) >= target:
                    hi = mid
                else:
                    lo = mid
                x = (lo + hi) / 2
                if (hi - lo) <= abs(x) * tol:
                    break
                continue
            x = xn
            if abs(delta) <= abs(x) * tol:
                break
    with working_precision(bits):
        return mpfr(x)


def _certify_smallest(root: Scalar, m: int, param: LaguerreParam, bits: int) -> bool:
    with working_precision(bits):
        eps = abs(root) * (mpfr(2) ** (-(bits // 2)))
        if eps == 0:
            return False
        above = roots_below(root + eps, m, param, bits)
        below = roots_below(root - eps, m, param, bits)
    return above == 1 and below == 0


def smallest_root(m: int, param: LaguerreParam, bits: int | None = None) -> Scalar:
    """Least root of L_m^alpha, Newton-refined and certified by inertia counts.

    The certificate demands exactly one root below root + eps and none below
    root - eps at eps = root * 2^(-bits/2); a failure falls back to full
    precision bisection and, if that too fails, raises PrecisionExhausted.
    """
    if m < 1:
        raise PreconditionViolated("m must be a positive integer")
    bits = default_bits() if bits is None else bits
    alpha_f = (param.d - 2) / 2.0
    lo_arr, hi_arr = _float_brackets_smallest(m, np.array([alpha_f]))
    pad = max(abs(float(hi_arr[0])), 1e-280) * 1e-9
    root = _polish_root(m, param, 1, max(float(lo_arr[0]) - pad, 0.0), float(hi_arr[0]) + pad, bits)
    if _certify_smallest(root, m, param, bits):
        return root
    # Certified-bisection fallback over the whole admissible range.
    with working_precision(bits + _GUARD_BITS):
        root = _polish_root(m, param, 1, mpfr(0), param.alpha_scalar() + 1, bits)
    if _certify_smallest(root, m, param, bits):
        return root
    raise PrecisionExhausted(
        f"could not certify the least root of L_{m} at d={param.d} with {bits} bits"
    )


def smallest_roots_batch(m: int, dims, bits: int | None = None) -> list:
    """smallest_root for one m across many dimensions, sharing the float64
    isolation pass. Returns the certified roots in the order of `dims`."""
    bits = default_bits() if bits is None else bits
    dims = list(dims)
    alphas = np.array([(d - 2) / 2.0 for d in dims])
    lo_arr, hi_arr = _float_brackets_smallest(m, alphas)
    out = []
    for d, lo, hi in zip(dims, lo_arr, hi_arr):
        param = LaguerreParam(d)
        pad = max(abs(float(hi)), 1e-280) * 1e-9
        root = _polish_root(m, param, 1, max(float(lo) - pad, 0.0), float(hi) + pad, bits)
        if not _certify_smallest(root, m, param, bits):
            root = smallest_root(m, param, bits)
        out.append(root)
    return out


# ---------------------------------------------------------------------------
# quadrature rules
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class QuadratureRule:
    """Gauss rule for e^{-u} u^alpha du: nodes are the roots of L_m^alpha."""

    param: LaguerreParam
    m: int
    bits: int
    nodes: tuple
    weights: tuple

    def integrate_poly_values(self, values) -> Scalar:
        """Sum w_i * values[i] for precomputed integrand values at the nodes."""
        acc = mpfr(0)
        for w, v in zip(self.weights, values):
            acc += w * v
        return acc


_rule_cache: dict = {}
_rule_lock = threading.Lock()


def _build_rule(m: int, param: LaguerreParam, bits: int) -> QuadratureRule:
    lo_arr, hi_arr = _float_brackets_all(m, (param.d - 2) / 2.0)
    nodes = []
    for idx in range(m):
        pad = max(abs(float(hi_arr[idx])), 1e-280) * 1e-9
        lo = max(float(lo_arr[idx]) - pad, 0.0)
        hi = float(hi_arr[idx]) + pad
        nodes.append(_polish_root(m, param, idx + 1, lo, hi, bits + _GUARD_BITS))

    work = bits + _GUARD_BITS
    with working_precision(work):
        alpha = param.alpha_scalar()
        mu0 = gamma_half_integer(param.d, work)
        b = [gmpy2.sqrt(mpfr(k) * (k + alpha)) for k in range(1, m)]
        p0 = 1 / gmpy2.sqrt(mu0)
        weights = []
        for u in nodes:
            val_prev = p0
            total = p0 * p0
            if m > 1:
                val = (u - (alpha + 1)) * p0 / b[0]
                total += val * val
                for k in range(2, m):
                    val, val_prev = ((u - (2 * k - 1 + alpha)) * val - b[k - 2] * val_prev) / b[k - 1], val
                    total += val * val
            weights.append(1 / total)

    with working_precision(bits):
        rule = QuadratureRule(
            param=param,
            m=m,
            bits=bits,
            nodes=tuple(mpfr(u) for u in nodes),
            weights=tuple(mpfr(w) for w in weights),
        )
    _validate_rule(rule)
    return rule


def _validate_rule(rule: QuadratureRule) -> None:
    """Mandatory checks: node ordering/positivity, weight positivity, and the
    full moment system through degree 2m-1."""
    m, param, bits = rule.m, rule.param, rule.bits
    prev = mpfr(0)
    for u in rule.nodes:
        if not (gmpy2.is_finite(u) and u > prev):
            raise MomentMismatch(f"nodes of the m={m}, d={param.d} rule are not sorted positive")
        prev = u
    if any(not (gmpy2.is_finite(w) and w > 0) for w in rule.weights):
        raise MomentMismatch(f"nonpositive weight in the m={m}, d={param.d} rule")

    work = bits + _GUARD_BITS
    loose = mpfr(2) ** (-(bits // 4))
    tight = mpfr(2) ** (-(bits // 2))
    with working_precision(work):
        powers = [mpfr(1)] * m
        for j in range(2 * m):
            total = mpfr(0)
            for i in range(m):
                total += rule.weights[i] * powers[i]
                powers[i] *= rule.nodes[i]
            expected = moment(j, param, work)
            rel = abs(total - expected) / expected
            if rel > (tight if j == 0 else loose):
                raise MomentMismatch(
                    f"moment {j} of the m={m}, d={param.d} rule is off by a relative {rel:.3e}"
                )


def gauss_laguerre_rule(m: int, param: LaguerreParam, bits: int | None = None) -> QuadratureRule:
    """Certified m-point Gauss rule for e^{-u} u^alpha du (memoized per process)."""
    if m < 1:
        raise PreconditionViolated("m must be a positive integer")
    bits = default_bits() if bits is None else bits
    key = (m, param.d, bits)
    rule = _rule_cache.get(key)
    if rule is not None:
        return rule
    rule = _build_rule(m, param, bits)
    with _rule_lock:
        return _rule_cache.setdefault(key, rule)
