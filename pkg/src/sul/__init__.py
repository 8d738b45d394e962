"""sul: a sign-uncertainty laboratory.

Certified computation of the least sign-change radius for eigenfunctions of
the Fourier transform of the form p(2*pi*|x|^2) * exp(-pi*|x|^2), together
with the quadrature, Laguerre-root, and asymptotic checks that surround it.
"""

__version__ = "0.1.0"

from .errors import (
    Infeasible,
    LpNumericalFailure,
    MomentMismatch,
    NoSignChange,
    NotSquarefree,
    PrecisionExhausted,
    PreconditionViolated,
    SulError,
)
from .precision import (
    DEFAULT_BITS,
    Rational,
    Scalar,
    default_bits,
    exact_decimal,
    format_scalar,
    gamma_half_integer,
    parse_decimal,
    to_scalar,
    working_precision,
)
from .poly import (
    Polynomial,
    SignChangeReport,
    SturmChain,
    last_sign_change,
    odd_root_count_beyond,
    poly_eval,
    simplest_rational_in,
    sturm_count,
)
from .laguerre import (
    LaguerreParam,
    QuadratureRule,
    gauss_laguerre_rule,
    laguerre_at_zero,
    laguerre_poly,
    laguerre_values,
    moment,
    roots_below,
    smallest_root,
    smallest_roots_batch,
)
from .eigenbasis import (
    LaguerreExpansion,
    ParitySignature,
    eval_radial,
    expansion_from_json_dict,
    expansion_from_polynomial,
    expansion_to_json_dict,
    fourier,
    hat_value_at_zero,
    to_polynomial,
    value_at_zero,
)
from .simplex import LpResult, solve_lp
from .optimizer import (
    Candidate,
    Certificate,
    FeasibilityProblem,
    RhoResult,
    admissible_indices,
    build_grid,
    certify,
    certify_expansion,
    make_problem,
    min_feasible_degree,
    recertify_expansion,
    refine_from_witness,
    rho_result_to_json_dict,
    solve_feasibility,
    solve_rho,
)
from .theory import (
    AsymptoticRow,
    DegreePolicy,
    asymptotic_scan,
    lambda_lower_bound,
    linear_degree_rho_bound,
    quadrature_identity_check,
    theorem_main_check,
)
from .manifest import RunManifest, build_manifest, manifest_to_dict
from .cache import cache_dir, cache_key, load_result, rebuild_result, store_result

__all__ = [
    "__version__",
    "SulError",
    "NotSquarefree",
    "NoSignChange",
    "MomentMismatch",
    "LpNumericalFailure",
    "Infeasible",
    "PrecisionExhausted",
    "PreconditionViolated",
    "DEFAULT_BITS",
    "Scalar",
    "Rational",
    "default_bits",
    "working_precision",
    "to_scalar",
    "format_scalar",
    "exact_decimal",
    "parse_decimal",
    "gamma_half_integer",
    "Polynomial",
    "SturmChain",
    "SignChangeReport",
    "poly_eval",
    "sturm_count",
    "last_sign_change",
    "odd_root_count_beyond",
    "simplest_rational_in",
    "LaguerreParam",
    "QuadratureRule",
    "gauss_laguerre_rule",
    "laguerre_poly",
    "laguerre_at_zero",
    "laguerre_values",
    "moment",
    "roots_below",
    "smallest_root",
    "smallest_roots_batch",
    "LaguerreExpansion",
    "ParitySignature",
    "to_polynomial",
    "expansion_from_polynomial",
    "fourier",
    "value_at_zero",
    "hat_value_at_zero",
    "eval_radial",
    "expansion_to_json_dict",
    "expansion_from_json_dict",
    "LpResult",
    "solve_lp",
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
    "DegreePolicy",
    "AsymptoticRow",
    "asymptotic_scan",
    "quadrature_identity_check",
    "theorem_main_check",
    "lambda_lower_bound",
    "linear_degree_rho_bound",
    "RunManifest",
    "build_manifest",
    "manifest_to_dict",
    "cache_dir",
    "cache_key",
    "load_result",
    "store_result",
    "rebuild_result",
]
