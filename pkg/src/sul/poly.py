"""Dense univariate polynomials and exact sign analysis.

Evaluation is Horner at the ambient precision. All root counting runs over
exact integers: any finite binary-float coefficient converts losslessly to a
rational, so Sturm chains, root isolation, and sign-change certificates carry
no rounding error at all. Chains use pseudo-remainders scaled by positive
constants, with content removed at every step to keep coefficients small.
"""

from __future__ import annotations

from dataclasses import dataclass

import gmpy2
from gmpy2 import mpfr, mpq, mpz

from .errors import NotSquarefree, PreconditionViolated
from .precision import Scalar, as_exact

__all__ = [
    "Polynomial",
    "SturmChain",
    "SignChangeReport",
    "poly_eval",
    "sturm_count",
    "last_sign_change",
    "odd_root_count_beyond",
    "negative_samples_beyond",
    "simplest_rational_in",
]


class Polynomial:
    """Immutable dense polynomial; coeffs[k] multiplies t**k."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs=()):
        cs = list(coeffs)
        while cs and cs[-1] == 0:
            cs.pop()
        object.__setattr__(self, "coeffs", tuple(cs))

    def __setattr__(self, name, value):
        raise AttributeError("Polynomial is immutable")

    @property
    def degree(self) -> int:
        """Degree, with -1 for the zero polynomial."""
        return len(self.coeffs) - 1

    @property
    def is_zero(self) -> bool:
        return not self.coeffs

    def __call__(self, t):
        return poly_eval(self, t)

    def __eq__(self, other):
        return isinstance(other, Polynomial) and self.coeffs == other.coeffs

    def __hash__(self):
        return hash(self.coeffs)

    def __repr__(self):
        return f"Polynomial({list(self.coeffs)!r})"

    def __neg__(self):
        return Polynomial([-c for c in self.coeffs])

    def __add__(self, other):
        a, b = self.coeffs, other.coeffs
        if len(a) < len(b):
            a, b = b, a
        out = list(a)
        for i, c in enumerate(b):
            out[i] = out[i] + c
        return Polynomial(out)

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, Polynomial):
            if self.is_zero or other.is_zero:
                return Polynomial()
            out = [0] * (len(self.coeffs) + len(other.coeffs) - 1)
            for i, a in enumerate(self.coeffs):
                for j, b in enumerate(other.coeffs):
                    out[i + j] += a * b
            return Polynomial(out)
        return self.scale(other)

    __rmul__ = __mul__

    def scale(self, factor):
        return Polynomial([factor * c for c in self.coeffs])

    def derivative(self) -> "Polynomial":
        return Polynomial([i * c for i, c in enumerate(self.coeffs)][1:])

    def to_exact(self) -> "Polynomial":
        """Same polynomial with all coefficients as exact rationals."""
        return Polynomial([as_exact(c) for c in self.coeffs])


def poly_eval(p: Polynomial, t):
    """p(t) by Horner's scheme; exact when both p and t are exact."""
    acc = 0
    for c in reversed(p.coeffs):
        acc = acc * t + c
    return acc


# ---------------------------------------------------------------------------
# exact integer-coefficient machinery
# ---------------------------------------------------------------------------


def _trim(ints):
    while ints and ints[-1] == 0:
        ints.pop()
    return ints


def _primitive(ints):
    ints = _trim(list(ints))
    if not ints:
        return ints
    g = mpz(0)
    for c in ints:
        g = gmpy2.gcd(g, c)
    if g > 1:
        ints = [c // g for c in ints]
    return ints


def _to_int_coeffs(p: Polynomial):
    """Primitive integer coefficients sharing p's roots and signs, up to a
    positive constant factor."""
    qs = [as_exact(c) for c in p.coeffs]
    den = mpz(1)
    for q in qs:
        den = gmpy2.lcm(den, q.denominator)
    ints = [mpz(q.numerator * (den // q.denominator)) for q in qs]
    return _primitive(ints)


def _derivative_int(ints):
    return [i * c for i, c in enumerate(ints)][1:]


def _sign_at(ints, x: mpq) -> int:
    """Sign of the integer polynomial at the exact rational x (all-integer Horner)."""
    if not ints:
        return 0
    u = mpz(x.numerator)
    v = mpz(x.denominator)
    acc = ints[-1]
    vp = mpz(1)
    for i in range(len(ints) - 2, -1, -1):
        vp *= v
        acc = acc * u + ints[i] * vp
    return int(gmpy2.sign(acc))


def _prem_positive(f, g):
    """Pseudo-remainder of f by g, with the implied multiplier on f positive."""
    dg = len(g) - 1
    lg = g[-1]
    r = list(f)
    steps = 0
    while len(r) - 1 >= dg and r:
        k = len(r) - 1 - dg
        lr = r[-1]
        new = [lg * c for c in r[:-1]]
        for i in range(dg):
            new[k + i] -= lr * g[i]
        r = _trim(new)
        steps += 1
    if lg < 0 and steps % 2:
        r = [-c for c in r]
    return r


def _gcd_int(a, b):
    """Primitive gcd of integer polynomials by a pseudo-remainder sequence."""
    a = _primitive(list(a))
    b = _primitive(list(b))
    if len(a) < len(b):
        a, b = b, a
    while b:
        a, b = b, _primitive(_prem_positive(a, b))
    return a


def _divexact_int(f, g):
    """Quotient f/g of integer polynomials when g divides f exactly."""
    rem = [mpq(c) for c in f]
    quo = [mpq(0)] * (len(f) - len(g) + 1)
    dg = len(g) - 1
    lg = mpq(g[-1])
    for k in range(len(f) - len(g), -1, -1):
        c = rem[dg + k] / lg
        quo[k] = c
        if c:
            for i in range(dg + 1):
                rem[k + i] -= c * g[i]
    if any(rem):
        raise PreconditionViolated("inexact polynomial division")
    return _trim([mpz(c.numerator) for c in quo])


def _radical_int(ints):
    """Squarefree part: ints / gcd(ints, ints')."""
    if len(ints) <= 2:
        return list(ints)
    g = _gcd_int(ints, _derivative_int(ints))
    if len(g) <= 1:
        return list(ints)
    return _primitive(_divexact_int(ints, g))


def _multiplicity_at(ints, r: mpq) -> int:
    """Multiplicity of r as a root, by repeated exact synthetic division."""
    qs = [mpq(c) for c in ints]
    mult = 0
    while len(qs) > 1:
        n = len(qs) - 1
        quo = [mpq(0)] * n
        quo[n - 1] = qs[n]
        for i in range(n - 1, 0, -1):
            quo[i - 1] = qs[i] + r * quo[i]
        if qs[0] + r * quo[0] != 0:
            break
        qs = quo
        mult += 1
    return mult


# ---------------------------------------------------------------------------
# Sturm chains
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SturmChain:
    """Sturm sequence of a polynomial: source, derivative, negated remainders.

    Elements are primitive integer polynomials (positive rescaling preserves
    every sign), so all counts derived from the chain are exact. The chain of
    a squarefree source ends in a nonzero constant; otherwise it ends in
    gcd(source, source').
    """

    source: Polynomial
    elements: tuple

    @classmethod
    def build(cls, p: Polynomial) -> "SturmChain":
        ints = _to_int_coeffs(p)
        if not ints:
            raise PreconditionViolated("cannot build a Sturm chain for the zero polynomial")
        chain = [ints]
        if len(ints) > 1:
            chain.append(_primitive(_derivative_int(ints)))
            while len(chain[-1]) > 1:
                r = _prem_positive(chain[-2], chain[-1])
                if not r:
                    break
                chain.append(_primitive([-c for c in r]))
        return cls(source=p, elements=tuple(tuple(c) for c in chain))

    @property
    def gcd_degree(self) -> int:
        """Degree of gcd(source, source'); zero exactly when source is squarefree."""
        if len(self.elements) < 2:
            return 0
        return len(self.elements[-1]) - 1

    def variations_at(self, x) -> int:
        """Sign variations of the chain at the exact rational point x (zeros skipped)."""
        x = as_exact(x)
        prev = 0
        count = 0
        for ints in self.elements:
            s = _sign_at(list(ints), x)
            if s != 0:
                if prev != 0 and s != prev:
                    count += 1
                prev = s
        return count

    def variations_at_pos_inf(self) -> int:
        prev = 0
        count = 0
        for ints in self.elements:
            s = int(gmpy2.sign(ints[-1])) if ints else 0
            if s != 0:
                if prev != 0 and s != prev:
                    count += 1
                prev = s
        return count

    def count_open_closed(self, a, b) -> int:
        """Number of distinct real roots of source in (a, b]."""
        return self.variations_at(a) - self.variations_at(b)

    def count_beyond(self, a) -> int:
        """Number of distinct real roots of source in (a, +inf)."""
        return self.variations_at(a) - self.variations_at_pos_inf()


def sturm_count(p: Polynomial, a, b) -> int:
    """Distinct real roots of a squarefree p in (a, b]."""
    if p.is_zero:
        raise PreconditionViolated("sturm_count requires a nonzero polynomial")
    a = as_exact(a)
    b = as_exact(b)
    if not a < b:
        raise PreconditionViolated("sturm_count requires a < b")
    if p.degree == 0:
        return 0
    chain = SturmChain.build(p)
    if chain.gcd_degree > 0:
        raise NotSquarefree("polynomial has a repeated root; divide out gcd(p, p') first")
    return chain.count_open_closed(a, b)


# ---------------------------------------------------------------------------
# root isolation and the last sign change
# ---------------------------------------------------------------------------


def _cauchy_upper_bound(ints) -> mpq:
    """Every real root is strictly below this rational bound."""
    lead = abs(ints[-1])
    top = max(abs(c) for c in ints)
    return 1 + mpq(top, lead)


def _isolate_above(g_ints, chain: SturmChain, low: mpq):
    """Disjoint brackets for every root of squarefree g in (low, +inf).

    Returns (lo, hi, exact) triples in increasing order. Each bracket holds
    exactly one root, strictly inside (lo, hi); g(hi) != 0 always, and
    g(lo) != 0 except possibly for the first bracket when low itself is a
    root of g. exact is the root when a bisection point hit it head-on.
    """
    hi0 = _cauchy_upper_bound(g_ints)
    if hi0 <= low:
        hi0 = low + 1
    while _sign_at(g_ints, hi0) == 0:
        hi0 += 1

    out = []

    def split(lo, v_lo, hi, v_hi):
        n = v_lo - v_hi
        if n == 0:
            return
        if n == 1:
            out.append((lo, hi, None))
            return
        mid = (lo + hi) / 2
        if _sign_at(g_ints, mid) == 0:
            delta = (hi - lo) / 4
            while True:
                a, b = mid - delta, mid + delta
                if _sign_at(g_ints, a) != 0 and _sign_at(g_ints, b) != 0:
                    v_a = chain.variations_at(a)
                    v_b = chain.variations_at(b)
                    if v_a - v_b == 1:
                        break
                delta /= 2
            split(lo, v_lo, a, v_a)
            out.append((a, b, mid))
            split(b, v_b, hi, v_hi)
        else:
            v_mid = chain.variations_at(mid)
            split(lo, v_lo, mid, v_mid)
            split(mid, v_mid, hi, v_hi)

    split(low, chain.variations_at(low), hi0, chain.variations_at(hi0))
    return out


def _refine_bracket(g_ints, lo, hi, stop):
    """Shrink a one-root bracket of squarefree g by sign bisection until
    stop(lo, hi) holds. g must be nonzero with opposite signs at lo and hi."""
    s_lo = _sign_at(g_ints, lo)
    while not stop(lo, hi):
        mid = (lo + hi) / 2
        s_mid = _sign_at(g_ints, mid)
        if s_mid == 0:
            # Landed exactly on the root: take a symmetric sub-bracket.
            width = (hi - lo) / 8
            while _sign_at(g_ints, mid - width) == 0 or _sign_at(g_ints, mid + width) == 0:
                width /= 2
            lo, hi = mid - width, mid + width
            s_lo = _sign_at(g_ints, lo)
            if stop(lo, hi):
                break
            continue
        if s_mid == s_lo:
            lo = mid
        else:
            hi = mid
    return lo, hi


@dataclass(frozen=True)
class SignChangeReport:
    """Outcome of a last-sign-change scan on [start, +inf).

    last_change is the largest odd-multiplicity real root at or beyond the
    cut, refined to the requested precision (None when the polynomial keeps
    one sign there). bracket is an exact rational enclosure certifying it:
    the source has strictly opposite nonzero signs at its endpoints.
    total_real_roots_beyond_from counts distinct real roots in [start, +inf)
    of any multiplicity.
    """

    last_change: Scalar | None
    total_real_roots_beyond_from: int
    bracket: tuple | None = None


def _flip_analysis(ints, start_q: mpq):
    """Shared isolation step: multiplicity at the cut, squarefree part, its
    chain, one-root brackets beyond the cut, and per-bracket sign flips of
    the full polynomial (flip <=> odd multiplicity)."""
    mult_at_start = _multiplicity_at(ints, start_q)
    g = _radical_int(ints)
    chain = SturmChain.build(Polynomial(g))
    brackets = _isolate_above(g, chain, start_q)

    flips = []
    if brackets:
        lo0 = brackets[0][0]
        if _sign_at(g, lo0) == 0:
            # The cut is itself a root of p. Move the first bracket's lo to a
            # non-root point strictly between the cut and the first root beyond.
            lo, hi, exact = brackets[0]
            x = (lo + (exact if exact is not None else hi)) / 2
            while _sign_at(g, x) == 0 or chain.variations_at(lo) - chain.variations_at(x) != 0:
                x = (lo + x) / 2
            brackets[0] = (x, hi, exact)
        # Between consecutive roots, each bracket's hi is a valid sample point:
        # g(hi) != 0 and hi lies strictly before the next bracket's root.
        prev_sign = _sign_at(ints, brackets[0][0])
        for lo, hi, _ in brackets:
            s_after = _sign_at(ints, hi)
            assert prev_sign != 0 and s_after != 0
            flips.append(prev_sign != s_after)
            prev_sign = s_after
    return mult_at_start, g, chain, brackets, flips


def odd_root_count_beyond(p: Polynomial, cut) -> int:
    """Number of points strictly beyond the cut where p changes sign.

    Counts odd-multiplicity real roots in (cut, +inf), exactly; a sign change
    at the cut itself does not count. Zero and constant polynomials have no
    sign changes.
    """
    cut_q = as_exact(cut)
    if p.is_zero or p.degree == 0:
        return 0
    ints = _to_int_coeffs(p)
    _, _, _, _, flips = _flip_analysis(ints, cut_q)
    return sum(flips)


def negative_samples_beyond(p: Polynomial, cut) -> list:
    """Exact rational points in (cut, +inf) where p is strictly negative,
    a few per maximal negative region (empty when p >= 0 beyond the cut).

    The sign of p is constant between consecutive real roots, so sampling
    between each adjacent root pair covers every region; several samples per
    region pin the region down faster when fed back as constraints.
    """
    cut_q = as_exact(cut)
    if p.is_zero or p.degree == 0:
        return []
    ints = _to_int_coeffs(p)
    _, _, _, brackets, _ = _flip_analysis(ints, cut_q)
    if not brackets:
        return []
    out = []
    if _sign_at(ints, brackets[0][0]) < 0:
        out.append(brackets[0][0])
    for i, (_, hi, _) in enumerate(brackets):
        if _sign_at(ints, hi) < 0:
            out.append(hi)
            if i + 1 < len(brackets) and brackets[i + 1][0] > hi:
                nxt = brackets[i + 1][0]
                out.append((hi + nxt) / 2)
                out.append(nxt)
    return [x for x in out if _sign_at(ints, x) < 0]


def simplest_rational_in(lo, hi) -> mpq:
    """The rational with the smallest denominator (ties: smallest magnitude)
    in the closed interval [lo, hi], via the continued-fraction walk."""
    lo = as_exact(lo)
    hi = as_exact(hi)
    if hi < lo:
        raise PreconditionViolated("simplest_rational_in requires lo <= hi")
    negate = False
    if hi < 0:
        lo, hi, negate = -hi, -lo, True
    elif lo <= 0:
        return mpq(0)
    prefix = []
    while True:
        i = lo.numerator // lo.denominator
        if lo == i:
            prefix.append(i)
            break
        if hi >= i + 1:
            prefix.append(i + 1)
            break
        prefix.append(i)
        lo, hi = 1 / (hi - i), 1 / (lo - i)
    value = mpq(prefix[-1])
    for i in reversed(prefix[:-1]):
        value = i + 1 / value
    return -value if negate else value


def last_sign_change(p: Polynomial, start, bits: int | None = None) -> SignChangeReport:
    """Largest point x* >= start where p changes sign, exactly certified.

    Isolation runs on the squarefree part; sign flips of p itself are read
    off samples between consecutive roots, so only odd-multiplicity roots
    register. Returns last_change=None when p has constant sign on
    [start, +inf); the zero polynomial yields an empty report.
    """
    if bits is None:
        bits = gmpy2.get_context().precision
    start_q = as_exact(start)
    if p.is_zero:
        return SignChangeReport(last_change=None, total_real_roots_beyond_from=0)
    ints = _to_int_coeffs(p)
    if len(ints) == 1:
        return SignChangeReport(last_change=None, total_real_roots_beyond_from=0)

    mult_at_start, g, chain, brackets, flips = _flip_analysis(ints, start_q)
    total = len(brackets) + (1 if mult_at_start > 0 else 0)

    chosen = None
    for i in range(len(brackets) - 1, -1, -1):
        if flips[i]:
            chosen = i
            break

    if chosen is None:
        if mult_at_start % 2 == 1:
            # The only sign change on the ray is at the cut itself. Certify a
            # symmetric bracket containing no other root of p.
            delta = mpq(1)
            while (
                _sign_at(g, start_q - delta) == 0
                or _sign_at(g, start_q + delta) == 0
                or chain.count_open_closed(start_q - delta, start_q + delta) != 1
            ):
                delta /= 2
            with gmpy2.context(precision=bits):
                loc = mpfr(start_q)
            return SignChangeReport(
                last_change=loc,
                total_real_roots_beyond_from=total,
                bracket=(start_q - delta, start_q + delta),
            )
        return SignChangeReport(last_change=None, total_real_roots_beyond_from=total)

    lo, hi, _ = brackets[chosen]

    def tight(a, b):
        scale = max(abs(b), mpq(1))
        return (b - a) * (mpz(2) ** (bits + 4)) <= scale

    lo, hi = _refine_bracket(g, lo, hi, tight)
    assert _sign_at(ints, lo) * _sign_at(ints, hi) == -1
    with gmpy2.context(precision=bits):
        loc = mpfr((lo + hi) / 2)
    return SignChangeReport(
        last_change=loc,
        total_real_roots_beyond_from=total,
        bracket=(lo, hi),
    )
