"""Certified radius solver: closed-form oracles, certificates, invariants."""

import gmpy2
import pytest
from gmpy2 import mpfr, mpq

from sul.eigenbasis import LaguerreExpansion, expansion_from_polynomial, to_polynomial
from sul.errors import Infeasible, PreconditionViolated
from sul.laguerre import LaguerreParam
from sul.optimizer import (
    admissible_indices,
    build_grid,
    certify_expansion,
    make_problem,
    min_feasible_degree,
    recertify_expansion,
    refine_from_witness,
    rho_result_to_json_dict,
    solve_feasibility,
    solve_rho,
)
from sul.poly import Polynomial
from sul.precision import as_exact, to_scalar, working_precision

BITS = 256


@pytest.fixture(scope="module")
def solved():
    """Shared solve results, keyed by (d, s, n)."""
    cache = {}

    def get(d, s, n, bits=BITS):
        key = (d, s, n, bits)
        if key not in cache:
            cache[key] = solve_rho(d, s, n, bits=bits)
        return cache[key]

    return get


# ------------------------------------------------------------ structure


def test_min_feasible_degree():
    assert min_feasible_degree(+1) == 2
    assert min_feasible_degree(-1) == 3
    assert min_feasible_degree("plus") == 2
    assert min_feasible_degree("minus") == 3


def test_admissible_indices():
    assert admissible_indices(+1, 2) == (0, 2)
    assert admissible_indices(+1, 5) == (0, 2, 4)
    assert admissible_indices(-1, 5) == (1, 3, 5)
    assert admissible_indices(-1, 3) == (1, 3)


def test_build_grid_shape():
    grid = build_grid(mpfr(5), 4, 128)
    assert len(grid) == 65  # max(64, 32) + 1
    assert grid[0] == 5
    assert all(a < b for a, b in zip(grid, grid[1:]))
    with working_precision(128):
        span = 16 * mpfr(16)  # 16 * max(T, n^2) with n^2 = 16 > T = 5
        assert abs(grid[-1] - (5 + span)) < mpfr(2) ** -100
    big = build_grid(mpfr(1), 10, 128)
    assert len(big) == 81  # 8 * 10 + 1


def test_solve_rho_rejects_bad_cells():
    with pytest.raises(Infeasible):
        solve_rho(1, -1, 1, bits=128)
    with pytest.raises(Infeasible):
        solve_rho(4, +1, 1, bits=128)
    with pytest.raises(PreconditionViolated):
        solve_rho(0, +1, 2, bits=128)


# ------------------------------------------------------------ oracles


@pytest.mark.parametrize("d", [2, 4, 8, 12, 24, 100])
def test_quadratic_optimum_is_d_plus_2(d, solved):
    """Degree-2 even witnesses: the least threshold is exactly d + 2."""
    r = solved(d, +1, 2)
    assert r.certificate.certified
    # the certificate pins T to an exact rational; for this family it is
    # exactly the integer d + 2
    assert r.certificate.verified_T == d + 2
    assert r.T == d + 2
    with working_precision(BITS):
        want_rho = gmpy2.sqrt(mpfr(d + 2) / (2 * gmpy2.const_pi()))
        assert abs(r.rho - want_rho) < mpfr(2) ** -250


@pytest.mark.parametrize("d", [1, 8, 24])
def test_cubic_odd_optimum_closed_form(d, solved):
    """Degree-3 odd witnesses: T* solves a quadratic in closed form."""
    r = solved(d, -1, 3)
    with working_precision(BITS):
        a = mpq(d, 2) - 1  # alpha
        want = (3 * (a + 3) + gmpy2.sqrt(to_scalar((a + 3) * (a + 11)))) / 2
        assert abs(r.T - want) < mpfr(2) ** -200
        assert r.certificate.certified


def test_lower_bound_stored_and_respected(solved):
    r = solved(12, +1, 6)
    assert r.certificate.certified
    t_star = refine_from_witness(r.witness, bits=r.bits)
    with working_precision(BITS):
        assert t_star >= r.lower_bound_T - mpfr(2) ** -(BITS // 4)
        # T is the witness's actual last sign change
        assert abs(t_star - r.T) < mpfr(2) ** -200


# ------------------------------------------------------------ certificates


def test_certificate_is_exact_and_tight(solved):
    r = solved(2, +1, 4)
    cert = r.certificate
    assert cert.certified
    # exact witness vanishes at the origin
    assert cert.exact_witness(mpq(0)) == 0
    # positive leading coefficient
    assert cert.exact_witness.coeffs[-1] > 0
    # verified_T is a root location: sign changes across it
    eps = mpq(1, mpq(2) ** 80)
    below = cert.exact_witness(cert.verified_T - eps)
    above = cert.exact_witness(cert.verified_T + eps)
    assert above > 0
    assert below < 0 or cert.exact_witness(cert.verified_T) == 0


def test_certify_expansion_scaling_invariance(solved):
    """Scaling a witness by a positive rational leaves verified_T unchanged."""
    r = solved(2, +1, 4)
    w = r.witness
    for factor in [mpq(3), mpq(1, 7), mpq(22, 7)]:
        scaled = LaguerreExpansion(
            w.param, {k: c * factor for k, c in w.coeffs.items()}
        )
        cert = recertify_expansion(scaled, bits=BITS)
        assert cert.certified
        assert cert.verified_T == r.certificate.verified_T


def test_certify_expansion_flags_sign_change_beyond():
    """A hand-built witness with a sign change above T must not certify."""
    param = LaguerreParam(2)
    # L_2 - L_0 = t^2/2 - 2t = (1/2) t (t - 4): parity-pure even, p(0) = 0,
    # negative on (0, 4)
    e = LaguerreExpansion(param, {0: mpq(-1), 2: mpq(1)})
    cert = certify_expansion(e, T=2, bits=128)
    assert not cert.certified
    assert "sign change" in cert.reason
    cert4 = certify_expansion(e, T=4, bits=128)
    assert cert4.certified
    assert cert4.verified_T == 4


def test_certify_rejects_wrong_parity_mixture():
    param = LaguerreParam(2)
    e = LaguerreExpansion(param, {0: mpq(1), 1: mpq(-1)})
    cert = certify_expansion(e, T=5, bits=128)
    assert not cert.certified
    assert "parity" in cert.reason or "origin" in cert.reason or cert.reason


def test_refine_from_witness_exact_location():
    param = LaguerreParam(2)
    # p(t) = t (t - 7/2)
    e = expansion_from_polynomial(Polynomial([0, mpq(-7, 2), 1]), param)
    with working_precision(160):
        t_star = refine_from_witness(e, bits=160)
        assert abs(t_star - mpq(7, 2)) < mpfr(2) ** -120


def test_recertify_matches_original(solved):
    r = solved(12, +1, 6)
    again = recertify_expansion(r.witness, bits=r.bits)
    assert again.certified
    assert again.verified_T == r.certificate.verified_T
    assert again.exact_expansion == r.witness


# ------------------------------------------------------------ feasibility LP


def test_feasibility_above_and_below_optimum():
    param = LaguerreParam(2)
    # optimum for (2, +1, 2) is T = 4
    feasible = solve_feasibility(make_problem(param, +1, 2, mpfr(8), 128))
    assert feasible is not None
    assert feasible.margin > 0
    infeasible = solve_feasibility(make_problem(param, +1, 2, mpfr(2), 128))
    assert infeasible is None


def test_feasible_candidate_certifies():
    param = LaguerreParam(4)
    fp = make_problem(param, +1, 2, mpfr(9), BITS)
    cand = solve_feasibility(fp)
    assert cand is not None
    cert = certify_expansion(cand.expansion, T=mpfr(9), bits=BITS)
    assert cert.certified
    assert cert.verified_T <= as_exact(mpfr(9))


# ------------------------------------------------------------ determinism


def test_solve_rho_deterministic():
    a = solve_rho(2, +1, 4, bits=192)
    b = solve_rho(2, +1, 4, bits=192)
    assert a.T == b.T
    assert a.rho == b.rho
    assert a.witness == b.witness
    assert a.certificate.verified_T == b.certificate.verified_T


def test_json_dict_shape(solved):
    r = solved(2, +1, 4)
    obj = rho_result_to_json_dict(r)
    assert set(obj) == {
        "d",
        "s",
        "n",
        "m",
        "rho",
        "T",
        "two_lambda",
        "witness",
        "certified",
        "bits",
    }
    assert obj["certified"] is True
    assert obj["d"] == 2 and obj["s"] == 1 and obj["n"] == 4
    assert obj["m"] == 3 and obj["bits"] == BITS


# ------------------------------------------------------------ monotonicity


def test_rho_monotone_in_degree_d2(solved):
    """Admissible sets are nested in n, so rho cannot increase (within the
    bisection tolerance)."""
    tol = 1e-10
    even = [solved(2, +1, n).rho for n in (2, 4, 6)]
    assert all(float(a) >= float(b) - tol for a, b in zip(even, even[1:]))
    odd = [solved(2, -1, n).rho for n in (3, 5, 7)]
    assert all(float(a) >= float(b) - tol for a, b in zip(odd, odd[1:]))


def test_rho_monotone_in_degree_d12(solved):
    tol = 1e-10
    vals = [solved(12, +1, n).rho for n in (2, 3, 4, 5)]
    assert all(float(a) >= float(b) - tol for a, b in zip(vals, vals[1:]))


def test_parity_plateau_even_odd(solved):
    """For s = +1, an odd n adds no admissible index over n-1, so rho is
    equal up to the certificate tolerance."""
    r4 = solved(12, +1, 4)
    r5 = solved(12, +1, 5)
    assert float(abs(r4.rho - r5.rho)) < 1e-9
