"""Laguerre layer: exact polynomials, certified roots, quadrature rules."""

import gmpy2
import pytest
from gmpy2 import mpfr, mpq
from hypothesis import given, settings, strategies as st

from sul.errors import PreconditionViolated
from sul.laguerre import (
    LaguerreParam,
    gauss_laguerre_rule,
    laguerre_at_zero,
    laguerre_poly,
    laguerre_values,
    moment,
    roots_below,
    smallest_root,
    smallest_roots_batch,
)
from sul.poly import poly_eval
from sul.precision import to_scalar, working_precision
from sul.theory import lambda_lower_bound


def test_param_basic_quantities():
    p = LaguerreParam(2)
    assert p.alpha_q == 0
    assert p.twice_alpha == 0
    p = LaguerreParam(1)
    assert p.alpha_q == mpq(-1, 2)
    p = LaguerreParam(12)
    assert p.alpha_q == 5
    with pytest.raises(PreconditionViolated):
        LaguerreParam(0)


def test_laguerre_poly_small_cases():
    # alpha = 0 (d = 2): L_0 = 1, L_1 = 1 - t, L_2 = 1 - 2t + t^2/2
    p = LaguerreParam(2)
    assert laguerre_poly(0, p).coeffs == (1,)
    assert laguerre_poly(1, p).coeffs == (1, -1)
    assert laguerre_poly(2, p).coeffs == (1, -2, mpq(1, 2))
    # alpha = 1/2 (d = 3): L_1 = 3/2 - t
    assert laguerre_poly(1, LaguerreParam(3)).coeffs == (mpq(3, 2), -1)


def test_laguerre_at_zero_is_binomial():
    # L_k^alpha(0) = C(k + alpha, k)
    p = LaguerreParam(2)  # alpha = 0
    for k in range(8):
        assert laguerre_at_zero(k, p) == 1
    p = LaguerreParam(4)  # alpha = 1
    for k in range(8):
        assert laguerre_at_zero(k, p) == k + 1
    p = LaguerreParam(6)  # alpha = 2
    for k in range(8):
        assert laguerre_at_zero(k, p) == (k + 1) * (k + 2) // 2
    assert laguerre_poly(5, p)(mpq(0)) == laguerre_at_zero(5, p)


def test_laguerre_recurrence_matches_exact_polys():
    param = LaguerreParam(5)
    with working_precision(192):
        t = mpfr(7) / 3
        vals = laguerre_values(6, param, t)
        for k in range(7):
            exact = poly_eval(laguerre_poly(k, param), mpq(7, 3))
            assert abs(vals[k] - to_scalar(exact)) < mpfr(2) ** -160


def test_moment_values():
    # d = 2, alpha = 0: moments are j!
    p = LaguerreParam(2)
    with working_precision(256):
        for j, want in [(0, 1), (1, 1), (2, 2), (3, 6), (4, 24)]:
            assert abs(moment(j, p, 256) - want) < mpfr(2) ** -240
        # d = 1, alpha = -1/2: mu_0 = Gamma(1/2) = sqrt(pi)
        sqrt_pi = gmpy2.sqrt(gmpy2.const_pi())
        assert abs(moment(0, LaguerreParam(1), 256) - sqrt_pi) < mpfr(2) ** -240


def test_smallest_root_known_closed_forms():
    with working_precision(256):
        # m = 1: L_1 = 1 + alpha - t, root = 1 + alpha = d/2
        for d in (1, 2, 3, 8, 24):
            got = smallest_root(1, LaguerreParam(d), bits=256)
            assert abs(got - mpq(d, 2)) < mpfr(2) ** -250, d
        # m = 2, d = 2: L_2 = 1 - 2t + t^2/2, smallest root = 2 - sqrt(2)
        got = smallest_root(2, LaguerreParam(2), bits=256)
        want = 2 - gmpy2.sqrt(mpfr(2))
        assert abs(got - want) < mpfr(2) ** -250


def test_smallest_root_is_actual_root_and_least():
    with working_precision(256):
        for m, d in [(3, 2), (5, 1), (7, 12), (4, 3)]:
            param = LaguerreParam(d)
            root = smallest_root(m, param, bits=256)
            value = poly_eval(laguerre_poly(m, param), root)
            scale = max(abs(c) for c in laguerre_poly(m, param).coeffs)
            assert abs(to_scalar(value)) < to_scalar(scale) * mpfr(2) ** -200
            assert roots_below(root * (1 - mpfr(2) ** -100), m, param, 256) == 0


def test_roots_below_counts():
    param = LaguerreParam(2)
    with working_precision(128):
        # L_2 roots at 2 +- sqrt(2) ~ 0.586, 3.414
        assert roots_below(mpfr("0.5"), 2, param, 128) == 0
        assert roots_below(mpfr("1.0"), 2, param, 128) == 1
        assert roots_below(mpfr("4.0"), 2, param, 128) == 2


def test_smallest_roots_batch_matches_single():
    dims = [1, 2, 3, 12, 100]
    with working_precision(192):
        batch = smallest_roots_batch(6, dims, bits=192)
        for d, got in zip(dims, batch):
            single = smallest_root(6, LaguerreParam(d), bits=192)
            assert got == single, d


def test_smallest_root_respects_algebraic_lower_bound():
    with working_precision(128):
        for m in (1, 2, 5, 10, 30):
            for d in (1, 2, 3, 12, 100):
                lam = smallest_root(m, LaguerreParam(d), bits=128)
                assert lam > lambda_lower_bound(m, d), (m, d)


def test_smallest_root_decreasing_in_m():
    with working_precision(128):
        for d in (2, 12, 100):
            roots = [smallest_root(m, LaguerreParam(d), bits=128) for m in range(1, 31)]
            assert all(a > b for a, b in zip(roots, roots[1:])), d


def test_gauss_rule_integrates_polynomials_exactly():
    """An m-point rule must reproduce moments through degree 2m-1."""
    with working_precision(256):
        for m, d in [(1, 2), (3, 1), (5, 12), (8, 3)]:
            param = LaguerreParam(d)
            rule = gauss_laguerre_rule(m, param, 256)
            assert len(rule.nodes) == m
            assert all(w > 0 for w in rule.weights)
            for j in range(2 * m):
                quad = sum(w * u**j for u, w in zip(rule.nodes, rule.weights))
                exact = moment(j, param, 256)
                assert abs(quad - exact) < abs(exact) * mpfr(2) ** -200, (m, d, j)


def test_gauss_rule_nodes_are_roots():
    with working_precision(192):
        param = LaguerreParam(3)
        rule = gauss_laguerre_rule(4, param, 192)
        lp = laguerre_poly(4, param)
        for u in rule.nodes:
            assert abs(to_scalar(poly_eval(lp, u))) < mpfr(2) ** -150


def test_gauss_rule_memoized():
    param = LaguerreParam(7)
    a = gauss_laguerre_rule(3, param, 128)
    b = gauss_laguerre_rule(3, param, 128)
    assert a is b


@given(
    m=st.integers(min_value=1, max_value=12),
    d=st.integers(min_value=1, max_value=60),
)
@settings(max_examples=40, deadline=None)
def test_smallest_root_between_algebraic_bounds(m, d):
    """Root sits strictly above the closed-form lower bound and below the
    mean of the roots, m * alpha_mean = m + alpha (sum of roots / m)."""
    with working_precision(128):
        lam = smallest_root(m, LaguerreParam(d), bits=128)
        assert lam > lambda_lower_bound(m, d)
        if m > 1:
            mean = m + mpq(d, 2) - 1  # trace of the Jacobi matrix / m
            assert lam < mean
