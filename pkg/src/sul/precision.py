"""Working-precision scalars.

Everything numeric in this package runs on MPFR floats (via gmpy2) inside an
explicit precision context, plus exact GMP rationals where exactness matters.
MPFR is deterministic and correctly rounded, so identical inputs at identical
bit counts give bit-identical results on every platform.
"""

from __future__ import annotations

import functools
import os

import gmpy2
from gmpy2 import mpfr, mpq, mpz

from .errors import PreconditionViolated

Scalar = mpfr
Rational = mpq

DEFAULT_BITS = 256
SIG_DIGITS = 30

_BITS_ENV = "SUL_BITS"


def default_bits() -> int:
    """Package default precision, overridable through the SUL_BITS variable."""
    raw = os.environ.get(_BITS_ENV)
    if raw is None:
        return DEFAULT_BITS
    bits = int(raw)
    if bits < 8:
        raise PreconditionViolated(f"{_BITS_ENV} must be at least 8, got {bits}")
    return bits


def working_precision(bits: int):
    """Context manager installing a thread-local MPFR context at `bits`."""
    if bits < 2:
        raise PreconditionViolated(f"precision must be at least 2 bits, got {bits}")
    return gmpy2.context(precision=bits)


def to_scalar(x, bits: int | None = None) -> Scalar:
    """Convert int/str/float/mpq/mpfr to an mpfr, rounding at `bits` if given."""
    if bits is None:
        return mpfr(x)
    with working_precision(bits):
        return mpfr(x)


def as_exact(x) -> Rational:
    """Exact rational value of x. mpfr inputs convert losslessly (dyadic)."""
    if isinstance(x, mpq):
        return x
    if isinstance(x, mpfr):
        if not gmpy2.is_finite(x):
            raise PreconditionViolated("cannot convert a non-finite scalar to a rational")
        return mpq(x)
    return mpq(x)


@functools.lru_cache(maxsize=None)
def gamma_half_integer(twice_arg: int, bits: int = DEFAULT_BITS) -> Scalar:
    """Gamma(twice_arg / 2) by upward recursion from Gamma(1) = 1, Gamma(1/2) = sqrt(pi).

    twice_arg must be a positive integer. Even arguments give exact factorials;
    odd arguments accumulate the half-integer product exactly and multiply by
    sqrt(pi) once, so the result is correctly rounded up to two final roundings.
    """
    if not isinstance(twice_arg, int) or isinstance(twice_arg, bool):
        raise PreconditionViolated("twice_arg must be an int")
    if twice_arg < 1:
        raise PreconditionViolated(f"gamma argument {twice_arg}/2 is not positive")
    with working_precision(bits):
        if twice_arg % 2 == 0:
            n = twice_arg // 2
            acc = mpz(1)
            for j in range(2, n):
                acc *= j
            return mpfr(acc)
        acc = mpq(1)
        x = mpq(1, 2)
        while x < mpq(twice_arg, 2):
            acc *= x
            x += 1
        return mpfr(acc) * gmpy2.sqrt(gmpy2.const_pi())


def format_scalar(x, sig: int = SIG_DIGITS) -> str:
    """Deterministic decimal rendering with `sig` significant digits."""
    if not isinstance(x, mpfr):
        # Convert exact inputs with enough headroom that all printed digits
        # are correct; mpfr(x) at ambient precision would truncate them.
        with working_precision(max(DEFAULT_BITS, 4 * sig + 16)):
            x = mpfr(x)
    return format(x, f".{sig}g")


def exact_decimal(x) -> str:
    """Exact finite decimal string for a dyadic (or 10-smooth) rational.

    Round-trips losslessly through parse_decimal. Raises ValueError when the
    denominator has a prime factor other than 2 or 5 (no finite expansion).
    """
    q = as_exact(x)
    num = int(q.numerator)
    den = int(q.denominator)
    e2 = 0
    while den % 2 == 0:
        den //= 2
        e2 += 1
    e5 = 0
    while den % 5 == 0:
        den //= 5
        e5 += 1
    if den != 1:
        raise ValueError("value has no finite decimal expansion")
    shift = max(e2, e5)
    scaled = num * 5 ** (shift - e5) * 2 ** (shift - e2)
    sign = "-" if scaled < 0 else ""
    digits = str(abs(scaled))
    if shift == 0:
        return sign + digits
    if len(digits) <= shift:
        digits = digits.rjust(shift + 1, "0")
    whole, frac = digits[:-shift], digits[-shift:]
    frac = frac.rstrip("0")
    return sign + whole + ("." + frac if frac else "")


def parse_decimal(text: str) -> Rational:
    """Exact rational value of a decimal string like '-12.375e-2'."""
    s = text.strip()
    if not s:
        raise ValueError("empty decimal string")
    sign = 1
    if s[0] in "+-":
        if s[0] == "-":
            sign = -1
        s = s[1:]
    mant, sep, exp_part = s.partition("e") if "e" in s else s.partition("E")
    if sep and not exp_part:
        raise ValueError(f"malformed decimal string: {text!r}")
    try:
        exp = int(exp_part) if exp_part else 0
    except ValueError:
        raise ValueError(f"malformed decimal string: {text!r}") from None
    whole, dot, frac = mant.partition(".")
    if not (whole or frac) or not (whole + frac).isdigit():
        raise ValueError(f"malformed decimal string: {text!r}")
    digits = int(whole + frac) if (whole + frac) else 0
    scale = exp - len(frac)
    q = mpq(digits)
    if scale >= 0:
        q *= mpz(10) ** scale
    else:
        q /= mpz(10) ** (-scale)
    return sign * q
