"""Closed-form bounds, identities, and the asymptotic ratio scan.

Four ingredients tie the optimizer's output back to provable statements:

* a Gauss-quadrature identity satisfied by every admissible witness whose
  Fourier transform vanishes at the origin,
* the lower bound T >= 2*lambda with lambda the smallest root of
  L_m^alpha (checked per result by ``theorem_main_check``),
* an explicit algebraic lower bound for that smallest root
  (``lambda_lower_bound``), and
* the scaling picture: rho/sqrt(d/(2*pi)) -> 1 when the degree grows
  sublinearly in d, with an explicit linear-degree lower-bound coefficient
  (``linear_degree_rho_bound``), explored numerically by
  ``asymptotic_scan`` under a pluggable degree policy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import gmpy2
from gmpy2 import mpfr, mpq

from .eigenbasis import (
    LaguerreExpansion,
    ParitySignature,
    hat_value_at_zero,
    to_polynomial,
)
from .errors import PreconditionViolated
from .laguerre import LaguerreParam, gauss_laguerre_rule, laguerre_at_zero, smallest_root
from .optimizer import RhoResult, min_feasible_degree, refine_from_witness, solve_rho
from .poly import poly_eval
from .precision import Scalar, as_exact, default_bits, to_scalar, working_precision

__all__ = [
    "DegreePolicy",
    "AsymptoticRow",
    "quadrature_identity_check",
    "theorem_main_check",
    "lambda_lower_bound",
    "linear_degree_rho_bound",
    "asymptotic_scan",
]


def quadrature_identity_check(e: LaguerreExpansion, bits: int | None = None) -> Scalar:
    """Relative residual of the quadrature identity sum_i w_i p(2 u_i) = 0.

    The rule has m = floor(deg(p)/2) + 1 points, enough to integrate p
    against the Laguerre weight exactly, and the identity holds whenever
    f_hat(0) = 0; the returned value is
    |sum w_i p(2 u_i)| / (sum w_i |p(2 u_i)| + 1).

    Raises PreconditionViolated when f_hat(0) is not zero to relative
    2^(-bits/4): the identity is a statement about mean-zero functions.
    """
    bits = default_bits() if bits is None else int(bits)
    if e.is_zero:
        raise PreconditionViolated("expansion must be nonzero")
    with working_precision(bits):
        exact = e.to_exact()
        hat0 = hat_value_at_zero(exact)
        scale = sum(
            abs(c) * laguerre_at_zero(k, e.param) for k, c in exact.coeffs.items()
        )
        tol = mpq(1, 1 << (bits // 4))
        if abs(hat0) > tol * max(scale, 1):
            raise PreconditionViolated(
                "the quadrature identity applies only when f_hat(0) = 0"
            )
        p = to_polynomial(exact)
        m = p.degree // 2 + 1
        rule = gauss_laguerre_rule(m, e.param, bits=bits)
        signed = mpfr(0)
        total = mpfr(0)
        for u, w in zip(rule.nodes, rule.weights):
            value = to_scalar(poly_eval(p, as_exact(2 * u)))
            signed += w * value
            total += w * abs(value)
        return abs(signed) / (total + 1)


def theorem_main_check(r: RhoResult) -> bool:
    """Does the result's witness respect the 2*lambda lower bound?

    True iff the exact last sign change of the witness is at least
    2 * smallest_root(floor(n/2)+1, d) - 2^(-bits/4). A False return is a
    soundness bug in the optimizer, never an expected outcome.
    """
    bits = r.bits
    with working_precision(bits):
        t_star = refine_from_witness(r.witness, bits=bits)
        m = r.n // 2 + 1
        lam = smallest_root(m, LaguerreParam(r.d), bits=bits)
        slack = mpfr(2) ** -(bits // 4)
        return bool(t_star >= 2 * lam - slack)


def lambda_lower_bound(m: int, d: int) -> Scalar:
    """Algebraic lower bound for the smallest root of L_m^{d/2-1}.

    Returns 2m + d/2 - 3 - sqrt(1 + 4(m-1)(m + d/2 - 2)); may be
    nonpositive for small d, in which case it is vacuous (the root is
    always positive).
    """
    if not isinstance(m, int) or isinstance(m, bool) or m < 1:
        raise PreconditionViolated(f"m must be a positive integer, got {m!r}")
    if not isinstance(d, int) or isinstance(d, bool) or d < 1:
        raise PreconditionViolated(f"dimension must be a positive integer, got {d!r}")
    half_d = mpfr(d) / 2
    radicand = mpfr(1 + 4 * (m - 1) * mpq(2 * m + d - 4, 2))
    return 2 * m + half_d - 3 - gmpy2.sqrt(radicand)


def linear_degree_rho_bound(c) -> Scalar:
    """Coefficient of sqrt(d) in the radius lower bound at degree n ~ c*d.

    Returns sqrt((c + 1/2 - sqrt(c(c+1))) / pi). As c -> 0 this recovers
    sqrt(1/(2*pi)), the sublinear-degree rate.
    """
    c = to_scalar(c)
    if not c > 0:
        raise PreconditionViolated("the degree-rate constant c must be positive")
    return gmpy2.sqrt((c + mpfr(1) / 2 - gmpy2.sqrt(c * (c + 1))) / gmpy2.const_pi())


@dataclass(frozen=True)
class DegreePolicy:
    """Maps dimension to polynomial degree for an asymptotic scan.

    kind is one of "fixed" (constant degree ``value``), "sqrt"
    (n = floor(sqrt(d))), or "linear" (n = floor(value * d)).
    """

    kind: str
    value: object = None

    def __post_init__(self):
        if self.kind == "fixed":
            n = self.value
            # Degrees below the per-parity feasibility floor construct fine;
            # scans reject them per sign (an infeasible request, not a
            # malformed policy).
            if not isinstance(n, int) or isinstance(n, bool) or n < 0:
                raise PreconditionViolated(
                    f"fixed policy needs a nonnegative integer degree, got {n!r}"
                )
        elif self.kind == "sqrt":
            if self.value is not None:
                raise PreconditionViolated("sqrt policy takes no parameter")
        elif self.kind == "linear":
            try:
                c = mpq(self.value)
            except (TypeError, ValueError) as exc:
                raise PreconditionViolated(
                    f"linear policy needs a rational rate, got {self.value!r}"
                ) from exc
            if not c > 0:
                raise PreconditionViolated("linear policy rate must be positive")
            object.__setattr__(self, "value", c)
        else:
            raise PreconditionViolated(f"unknown degree policy {self.kind!r}")

    @classmethod
    def fixed(cls, n: int) -> "DegreePolicy":
        return cls(kind="fixed", value=n)

    @classmethod
    def sqrt(cls) -> "DegreePolicy":
        return cls(kind="sqrt")

    @classmethod
    def linear(cls, c) -> "DegreePolicy":
        return cls(kind="linear", value=c)

    @classmethod
    def parse(cls, text: str) -> "DegreePolicy":
        """Parse "fixed:N", "sqrt", or "linear:C" (C decimal or fraction)."""
        if text == "sqrt":
            return cls.sqrt()
        head, sep, tail = text.partition(":")
        if head == "fixed" and sep:
            try:
                return cls.fixed(int(tail))
            except ValueError as exc:
                raise PreconditionViolated(f"bad fixed degree {tail!r}") from exc
        if head == "linear" and sep:
            try:
                rate = mpq(tail)
            except (TypeError, ValueError) as exc:
                raise PreconditionViolated(f"bad linear rate {tail!r}") from exc
            return cls.linear(rate)
        raise PreconditionViolated(f"unknown degree policy {text!r}")

    def degree_for(self, d: int) -> int:
        if self.kind == "fixed":
            return int(self.value)
        if self.kind == "sqrt":
            return math.isqrt(int(d))
        return int(mpq(self.value) * d)  # floor: mpq -> int truncates toward zero

    @property
    def label(self) -> str:
        if self.kind == "fixed":
            return f"fixed:{self.value}"
        if self.kind == "sqrt":
            return "sqrt"
        c = mpq(self.value)
        if c.denominator == 1:
            return f"linear:{c.numerator}"
        return f"linear:{c.numerator}/{c.denominator}"


@dataclass(frozen=True)
class AsymptoticRow:
    """One dimension's sandwich data: lower_ratio = sqrt(2*lambda/d) and
    upper_ratio = rho / sqrt(d/(2*pi)) bracket the limiting constant 1."""

    d: int
    s: int
    n: int
    m: int
    lam: Scalar
    lower_ratio: Scalar
    upper_ratio: Scalar
    result: RhoResult


def asymptotic_scan(dims, policy: DegreePolicy, s, *, bits: int | None = None) -> list:
    """Run the radius computation across dimensions under a degree policy.

    For each d (in input order): n = policy.degree_for(d),
    m = floor(n/2)+1, lambda = smallest_root(m, d), and the certified
    radius; returns AsymptoticRow entries. Rows are independent and pure;
    errors from the underlying solve propagate.
    """
    s = ParitySignature.coerce(s)
    bits = default_bits() if bits is None else int(bits)
    rows = []
    for d in dims:
        d = int(d)
        n = policy.degree_for(d)
        if n < min_feasible_degree(s):
            raise PreconditionViolated(
                f"policy {policy.label} gives degree {n} at d = {d}, below the "
                f"minimum {min_feasible_degree(s)} for parity {s.label}"
            )
        with working_precision(bits):
            param = LaguerreParam(d)
            m = n // 2 + 1
            lam = smallest_root(m, param, bits=bits)
            result = solve_rho(d, s, n, bits=bits)
            lower_ratio = gmpy2.sqrt(2 * lam / d)
            upper_ratio = result.rho / gmpy2.sqrt(mpfr(d) / (2 * gmpy2.const_pi()))
            rows.append(
                AsymptoticRow(
                    d=d,
                    s=s.s,
                    n=n,
                    m=m,
                    lam=lam,
                    lower_ratio=lower_ratio,
                    upper_ratio=upper_ratio,
                    result=result,
                )
            )
    return rows
