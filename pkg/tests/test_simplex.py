"""LP solver: hand-checkable cases, scipy cross-checks, failure modes."""

import gmpy2
import numpy as np
import pytest
from gmpy2 import mpfr
from hypothesis import given, settings, strategies as st
from scipy.optimize import linprog

from sul.errors import PreconditionViolated
from sul.precision import working_precision
from sul.simplex import solve_lp


def test_tiny_minimization():
    # min -x - 2y s.t. x + y <= 4, x <= 3; optimum at (0, 4), value -8
    res = solve_lp([-1, -2], a_ub=[[1, 1], [1, 0]], b_ub=[4, 3], bits=128)
    assert res.status == "optimal"
    with working_precision(128):
        assert abs(res.objective - (-8)) < mpfr(2) ** -100
        assert abs(res.x[0] - 0) < mpfr(2) ** -100
        assert abs(res.x[1] - 4) < mpfr(2) ** -100


def test_equality_constraints():
    # min x + y s.t. x + 2y = 4, x, y >= 0 -> (0, 2), value 2
    res = solve_lp([1, 1], a_eq=[[1, 2]], b_eq=[4], bits=128)
    assert res.status == "optimal"
    with working_precision(128):
        assert abs(res.objective - 2) < mpfr(2) ** -100


def test_maximize_flag():
    # max x + y s.t. x + y <= 7 -> 7
    res = solve_lp([1, 1], a_ub=[[1, 1]], b_ub=[7], bits=128, maximize=True)
    assert res.status == "optimal"
    with working_precision(128):
        assert abs(res.objective - 7) < mpfr(2) ** -100


def test_infeasible_detected():
    # x <= -1 with x >= 0 is infeasible
    res = solve_lp([1], a_ub=[[1]], b_ub=[-1], bits=128)
    assert res.status == "infeasible"


def test_unbounded_detected():
    # min -x with no upper bound
    res = solve_lp([-1], a_ub=[[0]], b_ub=[1], bits=128)
    assert res.status == "unbounded"


def test_negative_rhs_handled():
    # x >= 2 written as -x <= -2; min x -> 2
    res = solve_lp([1], a_ub=[[-1]], b_ub=[-2], bits=128)
    assert res.status == "optimal"
    with working_precision(128):
        assert abs(res.objective - 2) < mpfr(2) ** -100


def test_degenerate_problem_terminates():
    # Classic degeneracy: many redundant constraints through one vertex.
    a = [[1, 0], [1, 0], [1, 0], [0, 1], [1, 1]]
    b = [1, 1, 1, 1, 2]
    res = solve_lp([-1, -1], a_ub=a, b_ub=b, bits=128)
    assert res.status == "optimal"
    with working_precision(128):
        assert abs(res.objective - (-2)) < mpfr(2) ** -100


def test_row_width_validation():
    with pytest.raises(PreconditionViolated):
        solve_lp([1, 2], a_ub=[[1]], b_ub=[1], bits=64)
    with pytest.raises(PreconditionViolated):
        solve_lp([1], a_ub=[[1]], b_ub=[1, 2], bits=64)


def _random_lp(rng, n, m):
    """Bounded-feasible random LP: box constraints keep it bounded, and the
    origin is always feasible (b >= 0)."""
    a = rng.integers(-4, 5, size=(m, n)).tolist()
    b = rng.integers(1, 9, size=m).tolist()
    box = [[1 if j == i else 0 for j in range(n)] for i in range(n)]
    a_ub = a + box
    b_ub = b + [7] * n
    c = rng.integers(-5, 6, size=n).tolist()
    return c, a_ub, b_ub


@pytest.mark.parametrize("seed", range(12))
def test_cross_check_against_scipy(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 6))
    m = int(rng.integers(1, 7))
    c, a_ub, b_ub = _random_lp(rng, n, m)
    ours = solve_lp(c, a_ub=a_ub, b_ub=b_ub, bits=192)
    ref = linprog(c, A_ub=a_ub, b_ub=b_ub, bounds=(0, None), method="highs")
    assert ours.status == "optimal"
    assert ref.status == 0
    assert float(ours.objective) == pytest.approx(ref.fun, abs=1e-9)
    # our reported point must be feasible and achieve the objective
    x = [float(v) for v in ours.x]
    for row, rhs in zip(a_ub, b_ub):
        assert sum(r * v for r, v in zip(row, x)) <= rhs + 1e-9
    assert all(v >= -1e-12 for v in x)
    assert sum(ci * v for ci, v in zip(c, x)) == pytest.approx(ref.fun, abs=1e-9)


@given(
    seed=st.integers(min_value=100, max_value=10000),
)
@settings(max_examples=15, deadline=None)
def test_cross_check_property(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 5))
    m = int(rng.integers(1, 5))
    c, a_ub, b_ub = _random_lp(rng, n, m)
    ours = solve_lp(c, a_ub=a_ub, b_ub=b_ub, bits=160)
    ref = linprog(c, A_ub=a_ub, b_ub=b_ub, bounds=(0, None), method="highs")
    assert ours.status == "optimal" and ref.status == 0
    assert float(ours.objective) == pytest.approx(ref.fun, abs=1e-9)


def test_solution_precision_tracks_bits():
    """The same LP solved at higher precision gives a sharper optimum for a
    problem whose solution is not exactly representable in binary."""
    # min -x s.t. 3x <= 1 -> x = 1/3
    res = solve_lp([-1], a_ub=[[3]], b_ub=[1], bits=256)
    assert res.status == "optimal"
    with working_precision(256):
        third = mpfr(1) / 3
        assert abs(res.x[0] - third) < mpfr(2) ** -250
