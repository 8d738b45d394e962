"""Radial eigenfunctions f(x) = p(2*pi*|x|^2) e^{-pi*|x|^2} in Laguerre form.

An expansion stores the coefficients c_k of p = sum c_k L_k^alpha. On this
basis the Fourier transform acts diagonally, c_k -> (-1)^k c_k, so parity-s
supported expansions are exact eigenfunctions with eigenvalue s and the
transform costs nothing numerically.
"""

from __future__ import annotations

from dataclasses import dataclass

import gmpy2
from gmpy2 import mpfr

from .errors import PreconditionViolated
from .laguerre import LaguerreParam, laguerre_at_zero, laguerre_poly, laguerre_values
from .poly import Polynomial
from .precision import Scalar, as_exact, exact_decimal, parse_decimal

__all__ = [
    "ParitySignature",
    "LaguerreExpansion",
    "to_polynomial",
    "expansion_from_polynomial",
    "fourier",
    "value_at_zero",
    "hat_value_at_zero",
    "eval_radial",
    "expansion_to_json_dict",
    "expansion_from_json_dict",
]


@dataclass(frozen=True)
class ParitySignature:
    """Eigenvalue sign s: expansions supported on {k : (-1)^k = s} satisfy
    f_hat = s * f."""

    s: int

    def __post_init__(self):
        if self.s not in (+1, -1):
            raise PreconditionViolated(f"parity signature must be +1 or -1, got {self.s!r}")

    @classmethod
    def coerce(cls, value) -> "ParitySignature":
        if isinstance(value, ParitySignature):
            return value
        if value in (+1, -1):
            return cls(int(value))
        if isinstance(value, str):
            name = value.strip().lower()
            if name in ("plus", "+", "+1", "1", "even"):
                return cls(+1)
            if name in ("minus", "-", "-1", "odd"):
                return cls(-1)
        raise PreconditionViolated(f"cannot interpret {value!r} as a parity signature")

    def admits(self, k: int) -> bool:
        return (k % 2 == 0) == (self.s == +1)

    @property
    def label(self) -> str:
        return "plus" if self.s == +1 else "minus"


class LaguerreExpansion:
    """Sparse coefficient map k -> c_k over a fixed dimension parameter."""

    __slots__ = ("param", "coeffs")

    def __init__(self, param: LaguerreParam, coeffs: dict):
        cleaned = {}
        for k, c in coeffs.items():
            k = int(k)
            if k < 0:
                raise PreconditionViolated("expansion indices must be nonnegative")
            if c == 0:
                continue
            cleaned[k] = c
        object.__setattr__(self, "param", param)
        object.__setattr__(self, "coeffs", dict(sorted(cleaned.items())))

    def __setattr__(self, name, value):
        raise AttributeError("LaguerreExpansion is immutable")

    @property
    def degree(self) -> int:
        """Largest supported index (-1 when the expansion is zero)."""
        return max(self.coeffs) if self.coeffs else -1

    @property
    def is_zero(self) -> bool:
        return not self.coeffs

    @property
    def parity(self):
        """+1 or -1 when supported on a single parity class, else None."""
        if self.is_zero:
            return None
        parities = {k % 2 for k in self.coeffs}
        if parities == {0}:
            return +1
        if parities == {1}:
            return -1
        return None

    def map_coeffs(self, fn) -> "LaguerreExpansion":
        return LaguerreExpansion(self.param, {k: fn(k, c) for k, c in self.coeffs.items()})

    def to_exact(self) -> "LaguerreExpansion":
        return self.map_coeffs(lambda k, c: as_exact(c))

    def __eq__(self, other):
        return (
            isinstance(other, LaguerreExpansion)
            and self.param == other.param
            and self.coeffs == other.coeffs
        )

    def __repr__(self):
        return f"LaguerreExpansion(d={self.param.d}, coeffs={self.coeffs!r})"


def to_polynomial(e: LaguerreExpansion) -> Polynomial:
    """p = sum c_k L_k^alpha in the monomial basis (variable t = 2*pi*|x|^2).

    Laguerre coefficients are exact rationals, so the result is exact whenever
    the expansion coefficients are exact; mixed inputs follow scalar coercion.
    """
    acc = Polynomial()
    for k, c in e.coeffs.items():
        acc = acc + laguerre_poly(k, e.param).scale(c)
    return acc


def expansion_from_polynomial(p: Polynomial, param: LaguerreParam) -> LaguerreExpansion:
    """Inverse of to_polynomial by exact triangular back-substitution."""
    rest = p.to_exact()
    coeffs = {}
    while not rest.is_zero:
        k = rest.degree
        lead_k = as_exact(laguerre_poly(k, param).coeffs[-1])
        c = as_exact(rest.coeffs[-1]) / lead_k
        coeffs[k] = c
        rest = rest - laguerre_poly(k, param).scale(c)
        if not rest.is_zero and rest.degree >= k:
            raise PreconditionViolated("back-substitution failed to reduce the degree")
    return LaguerreExpansion(param, coeffs)


def fourier(e: LaguerreExpansion) -> LaguerreExpansion:
    """The Fourier transform on this basis: c_k -> (-1)^k c_k, exactly."""
    return e.map_coeffs(lambda k, c: -c if k % 2 else c)


def value_at_zero(e: LaguerreExpansion):
    """f(0) = p(0) = sum c_k L_k^alpha(0); exact for exact coefficients."""
    acc = 0
    for k, c in e.coeffs.items():
        acc += c * laguerre_at_zero(k, e.param)
    return acc


def hat_value_at_zero(e: LaguerreExpansion):
    """f_hat(0) = sum (-1)^k c_k L_k^alpha(0) = value_at_zero(fourier(e))."""
    acc = 0
    for k, c in e.coeffs.items():
        term = c * laguerre_at_zero(k, e.param)
        acc += -term if k % 2 else term
    return acc


def eval_radial(e: LaguerreExpansion, r) -> Scalar:
    """p(2*pi*r^2) * exp(-pi*r^2) at the ambient precision."""
    r = mpfr(r)
    if r < 0:
        raise PreconditionViolated("radius must be nonnegative")
    pi = gmpy2.const_pi()
    t = 2 * pi * r * r
    if e.is_zero:
        return mpfr(0)
    values = laguerre_values(e.degree, e.param, t)
    acc = mpfr(0)
    for k, c in e.coeffs.items():
        acc += c * values[k]
    return acc * gmpy2.exp(-pi * r * r)


def expansion_to_json_dict(e: LaguerreExpansion) -> dict:
    """JSON form {"d": int, "coeffs": {"k": decimal-string}} with exact decimal
    strings (binary-precision coefficients have finite decimal expansions)."""
    return {
        "d": e.param.d,
        "coeffs": {str(k): exact_decimal(as_exact(c)) for k, c in e.coeffs.items()},
    }


def expansion_from_json_dict(obj: dict) -> LaguerreExpansion:
    if not isinstance(obj, dict) or "d" not in obj or "coeffs" not in obj:
        raise PreconditionViolated("malformed expansion object")
    param = LaguerreParam(int(obj["d"]))
    coeffs = {int(k): parse_decimal(v) for k, v in obj["coeffs"].items()}
    return LaguerreExpansion(param, coeffs)
