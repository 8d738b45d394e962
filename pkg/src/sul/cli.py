"""Command-line tools for the sign-uncertainty laboratory.

Subcommands:

  rho       certified optimal radius for one (dimension, parity, degree) cell
  scan      radius sweep across dimensions under a degree policy, CSV output
  verify    re-check a stored result file in exact arithmetic
  bounds    closed-form bound evaluations (root lower bound, linear-degree
            radius coefficient)
  laguerre  quadrature nodes and weights, for debugging

Exit codes: 0 success/certified, 1 malformed flags or invalid request,
2 infeasible (no nonzero witness exists for the requested cell),
3 precision exhausted or certification failure that survived a retry,
4 verification failure (a stored result file fails its recheck).

Environment: SUL_BITS sets the default working precision, SUL_CACHE_DIR the
result cache location (default ./.sul-cache).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import gmpy2
from gmpy2 import mpfr

from .cache import load_result, store_result
from .eigenbasis import (
    expansion_from_json_dict,
    to_polynomial,
    value_at_zero,
)
from .errors import (
    Infeasible,
    PrecisionExhausted,
    PreconditionViolated,
    SulError,
)
from .laguerre import LaguerreParam, gauss_laguerre_rule, smallest_root
from .manifest import (
    MANIFEST_KEY,
    build_manifest,
    manifest_csv_line,
    manifest_to_dict,
)
from .optimizer import (
    DEFAULT_T_TOL_EXP,
    admissible_indices,
    min_feasible_degree,
    refine_from_witness,
    rho_result_to_json_dict,
    solve_rho,
)
from .precision import (
    SIG_DIGITS,
    as_exact,
    default_bits,
    exact_decimal,
    format_scalar,
    parse_decimal,
    to_scalar,
    working_precision,
)
from .theory import (
    DegreePolicy,
    lambda_lower_bound,
    linear_degree_rho_bound,
    quadrature_identity_check,
)

_SIGNS = {"plus": 1, "minus": -1}

CSV_COLUMNS = (
    "d",
    "s",
    "n",
    "m",
    "lambda",
    "two_lambda",
    "T",
    "rho",
    "lower_ratio",
    "upper_ratio",
    "certified",
)


class _Parser(argparse.ArgumentParser):
    """argparse with exit code 1 (not 2) on malformed flags."""

    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(1)


def _resolve_bits(args) -> int:
    bits = args.bits if getattr(args, "bits", None) else default_bits()
    if bits < 8:
        raise PreconditionViolated(f"precision must be at least 8 bits, got {bits}")
    return int(bits)


def _resolve_t_tol(args, bits: int):
    """Resolve --t-tol to (mpfr at bits, canonical decimal text)."""
    with working_precision(bits):
        if getattr(args, "t_tol", None) is None:
            t_tol = mpfr(2) ** DEFAULT_T_TOL_EXP
        else:
            t_tol = to_scalar(parse_decimal(args.t_tol))
        if not t_tol > 0:
            raise PreconditionViolated("--t-tol must be positive")
    return t_tol, exact_decimal(as_exact(t_tol))


def _parse_dims(text: str) -> list:
    """Dimension list from 'start:stop:step' or a comma list like '2,8,24'."""
    text = text.strip()
    try:
        if ":" in text:
            parts = [int(x) for x in text.split(":")]
            if len(parts) != 3:
                raise ValueError("ranges take exactly start:stop:step")
            start, stop, step = parts
            if step <= 0 or start < 1 or stop < start:
                raise ValueError("range must satisfy 1 <= start <= stop, step > 0")
            return list(range(start, stop + 1, step))
        dims = [int(x) for x in text.split(",") if x.strip()]
        if not dims or any(x < 1 for x in dims):
            raise ValueError("dimensions must be positive integers")
        return dims
    except ValueError as exc:
        raise PreconditionViolated(f"bad --dims value {text!r}: {exc}") from None


def _cached_solve(d: int, s: int, n: int, bits: int, t_tol, t_tol_text: str):
    """Cache-aware solve; revalidated hits are served, misses are stored."""
    r = load_result(d, s, n, bits, t_tol_text)
    if r is None:
        r = solve_rho(d, s, n, bits=bits, t_tol=t_tol)
        store_result(r, t_tol_text)
    return r


# ---------------------------------------------------------------- rho


def cmd_rho(args, argv) -> int:
    bits = _resolve_bits(args)
    t_tol, t_tol_text = _resolve_t_tol(args, bits)
    s = _SIGNS[args.sign]
    r = _cached_solve(args.dim, s, args.degree, bits, t_tol, t_tol_text)
    print(f"rho = {format_scalar(r.rho)}")
    print(f"T = {format_scalar(r.T)}")
    print(f"two_lambda = {format_scalar(r.lower_bound_T)}")
    print(f"certified = {'true' if r.certificate.certified else 'false'}")
    if args.json:
        manifest = build_manifest(
            argv,
            bits,
            {"t_tol": t_tol_text},
            {
                "command": "rho",
                "d": args.dim,
                "s": s,
                "n": args.degree,
                "bits": bits,
                "t_tol": t_tol_text,
            },
        )
        payload = rho_result_to_json_dict(r)
        payload[MANIFEST_KEY] = manifest_to_dict(manifest)
        Path(args.json).write_text(
            json.dumps(payload, sort_keys=True, indent=2) + "\n", encoding="utf-8"
        )
    return 0 if r.certificate.certified else 3


# ---------------------------------------------------------------- scan


def _row_fields(r) -> dict:
    """CSV row for one result; every value derives deterministically from
    the witness and (d, s, n, bits), so cached and fresh runs emit the same
    bytes."""
    with working_precision(r.bits):
        lam = smallest_root(r.m, LaguerreParam(r.d), bits=r.bits)
        lower = gmpy2.sqrt(2 * lam / r.d)
        upper = r.rho / gmpy2.sqrt(mpfr(r.d) / (2 * gmpy2.const_pi()))
    return {
        "d": str(r.d),
        "s": str(r.s),
        "n": str(r.n),
        "m": str(r.m),
        "lambda": format_scalar(lam),
        "two_lambda": format_scalar(r.lower_bound_T),
        "T": format_scalar(r.T),
        "rho": format_scalar(r.rho),
        "lower_ratio": format_scalar(lower),
        "upper_ratio": format_scalar(upper),
        "certified": "true" if r.certificate.certified else "false",
    }


def _scan_worker(task):
    """One scan cell. Module-level so process pools can pickle it.

    Returns (index, row_dict_or_None, error_or_None); a certification retry
    at doubled precision happens here before the cell is declared failed.
    """
    idx, d, s, n, bits, t_tol_text = task
    try:
        r = load_result(d, s, n, bits, t_tol_text)
        if r is None:
            t_tol_q = parse_decimal(t_tol_text)
            try:
                r = solve_rho(d, s, n, bits=bits, t_tol=t_tol_q)
            except PrecisionExhausted:
                r = solve_rho(d, s, n, bits=2 * bits, t_tol=t_tol_q)
            store_result(r, t_tol_text)
        return idx, _row_fields(r), None
    except Infeasible as exc:
        return idx, None, ("infeasible", str(exc))
    except SulError as exc:
        return idx, None, ("certification", str(exc))


def cmd_scan(args, argv) -> int:
    bits = _resolve_bits(args)
    _, t_tol_text = _resolve_t_tol(args, bits)
    s = _SIGNS[args.sign]
    dims = _parse_dims(args.dims)
    policy = DegreePolicy.parse(args.policy)

    floor = min_feasible_degree(s)
    degrees = [(d, policy.degree_for(d)) for d in dims]
    bad = [(d, n) for d, n in degrees if n < floor]
    if bad:
        d, n = bad[0]
        print(
            f"infeasible: policy {policy.label} gives degree {n} at d = {d}, "
            f"below the minimum {floor} for sign {args.sign}",
            file=sys.stderr,
        )
        return 2

    tasks = [
        (i, d, s, n, bits, t_tol_text) for i, (d, n) in enumerate(degrees)
    ]
    jobs = args.jobs if args.jobs else (os.cpu_count() or 1)
    if jobs <= 1 or len(tasks) <= 1:
        outcomes = [_scan_worker(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(_scan_worker, tasks))

    rows = {}
    failures = []
    for idx, row, err in outcomes:
        if err is not None:
            failures.append((dims[idx], err))
        else:
            rows[idx] = row
    if failures:
        for d, (kind, detail) in failures:
            print(f"{kind} at d = {d}: {detail}", file=sys.stderr)
        return 2 if any(k == "infeasible" for _, (k, _) in failures) else 3

    manifest = build_manifest(
        argv,
        bits,
        {"t_tol": t_tol_text},
        {
            "command": "scan",
            "dims": dims,
            "policy": policy.label,
            "sign": s,
            "bits": bits,
            "t_tol": t_tol_text,
        },
    )
    lines = [manifest_csv_line(manifest), ",".join(CSV_COLUMNS)]
    for i in range(len(tasks)):
        lines.append(",".join(rows[i][c] for c in CSV_COLUMNS))
    Path(args.csv).write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(f"wrote {len(tasks)} rows to {args.csv}")
    return 0


# ---------------------------------------------------------------- verify


def cmd_verify(args, argv) -> int:
    path = Path(args.result)
    checks = []

    def check(name: str, ok: bool, detail: str = "") -> bool:
        checks.append((name, bool(ok), detail))
        return bool(ok)

    def emit() -> int:
        good = True
        for name, ok, detail in checks:
            mark = "ok  " if ok else "FAIL"
            suffix = f"  ({detail})" if detail and not ok else ""
            print(f"{mark} {name}{suffix}")
            good = good and ok
        print("verification " + ("passed" if good else "failed"))
        return 0 if good else 4

    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, ValueError) as exc:
        check("readable-result-file", False, str(exc))
        return emit()

    try:
        d = int(payload["d"])
        s = int(payload["s"])
        n = int(payload["n"])
        m = int(payload["m"])
        bits = int(payload["bits"])
        certified = payload["certified"]
        T_q = parse_decimal(payload["T"])
        rho_q = parse_decimal(payload["rho"])
        two_lambda_q = parse_decimal(payload["two_lambda"])
        witness = expansion_from_json_dict(payload["witness"])
    except (KeyError, ValueError, TypeError, SulError) as exc:
        check("well-formed-fields", False, str(exc))
        return emit()

    check(
        "well-formed-fields",
        s in (1, -1) and d >= 1 and bits >= 8 and m == n // 2 + 1
        and witness.param.d == d,
        "d/s/n/m/bits consistent",
    )
    check("certified-flag", certified is True, "stored flag must be true")
    check("witness-nonzero", not witness.is_zero)
    check(
        "witness-support",
        set(witness.coeffs) <= set(admissible_indices(s, n)) if s in (1, -1) else False,
        "indices match parity and degree",
    )
    if not all(ok for _, ok, _ in checks):
        return emit()

    exact = witness.to_exact()
    p = to_polynomial(exact)
    check("vanishes-at-origin", value_at_zero(exact) == 0, "p(0) must be 0 exactly")
    check("positive-leading", bool(p.coeffs) and p.coeffs[-1] > 0)
    if not all(ok for _, ok, _ in checks):
        return emit()

    try:
        with working_precision(bits):
            slack = mpfr(2) ** -(bits // 4)
            tol = max(mpfr(10) ** (2 - SIG_DIGITS), slack)
            t_star = refine_from_witness(witness, bits=bits)
            T_s = to_scalar(T_q)
            check(
                "threshold-matches-witness",
                abs(T_s - t_star) <= tol * max(mpfr(1), t_star),
                f"stored T vs recomputed sign change {format_scalar(t_star)}",
            )
            two_pi = 2 * gmpy2.const_pi()
            check(
                "radius-matches-threshold",
                abs(to_scalar(rho_q) ** 2 * two_pi - T_s) <= tol * max(mpfr(1), T_s),
                "2*pi*rho^2 must equal T",
            )
            lam = smallest_root(m, witness.param, bits=bits)
            check(
                "lower-bound-recomputed",
                abs(to_scalar(two_lambda_q) - 2 * lam) <= tol * max(mpfr(1), 2 * lam),
                f"stored two_lambda vs recomputed {format_scalar(2 * lam)}",
            )
            check(
                "main-theorem-inequality",
                t_star >= 2 * lam - slack,
                "last sign change must sit at or above 2*lambda",
            )
            residual = quadrature_identity_check(witness, bits=bits)
            check(
                "quadrature-identity",
                residual <= slack,
                f"residual {format_scalar(residual)}",
            )
    except SulError as exc:
        check("exact-recheck", False, str(exc))
    return emit()


# ---------------------------------------------------------------- bounds


def cmd_bounds(args, argv) -> int:
    if (args.m is None) != (args.dim is None):
        print("bounds: --m and --dim must be given together", file=sys.stderr)
        return 1
    if args.m is None and args.c is None:
        print("bounds: nothing to do (give --m/--dim and/or --c)", file=sys.stderr)
        return 1
    bits = _resolve_bits(args)
    with working_precision(bits):
        if args.m is not None:
            value = lambda_lower_bound(args.m, args.dim)
            print(
                f"lambda_lower_bound(m={args.m}, d={args.dim}) = "
                f"{format_scalar(value)}"
            )
        if args.c is not None:
            c_q = parse_decimal(args.c)
            value = linear_degree_rho_bound(c_q)
            print(f"linear_degree_rho_bound(c={args.c}) = {format_scalar(value)}")
    return 0


# ---------------------------------------------------------------- laguerre


def cmd_laguerre(args, argv) -> int:
    bits = _resolve_bits(args)
    rule = gauss_laguerre_rule(args.m, LaguerreParam(args.dim), bits)
    print(f"m = {args.m}  d = {args.dim}  bits = {bits}")
    for i, (u, w) in enumerate(zip(rule.nodes, rule.weights)):
        print(f"{i}: node = {format_scalar(u)}  weight = {format_scalar(w)}")
    return 0


# ---------------------------------------------------------------- driver


def build_parser() -> _Parser:
    parser = _Parser(prog="sul", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="subcommand", parser_class=_Parser)

    p_rho = sub.add_parser("rho", help="certified radius for one cell")
    p_rho.add_argument("--dim", type=int, required=True, help="dimension d >= 1")
    p_rho.add_argument(
        "--sign", choices=sorted(_SIGNS), required=True, help="eigenfunction parity"
    )
    p_rho.add_argument("--degree", type=int, required=True, help="polynomial degree n")
    p_rho.add_argument("--bits", type=int, help="working precision (default SUL_BITS or 256)")
    p_rho.add_argument("--t-tol", help="bisection tolerance on T, decimal string")
    p_rho.add_argument("--json", help="also write the result as JSON to this path")
    p_rho.set_defaults(func=cmd_rho)

    p_scan = sub.add_parser("scan", help="sweep dimensions under a degree policy")
    p_scan.add_argument(
        "--dims", required=True, help="dimensions: start:stop:step or comma list"
    )
    p_scan.add_argument(
        "--policy",
        required=True,
        help="degree policy: fixed:N, sqrt, or linear:C",
    )
    p_scan.add_argument("--sign", choices=sorted(_SIGNS), required=True)
    p_scan.add_argument("--csv", required=True, help="output CSV path")
    p_scan.add_argument("--bits", type=int)
    p_scan.add_argument("--t-tol", help="bisection tolerance on T, decimal string")
    p_scan.add_argument(
        "--jobs", type=int, help="worker processes (default: number of CPUs)"
    )
    p_scan.set_defaults(func=cmd_scan)

    p_verify = sub.add_parser("verify", help="recheck a stored result file")
    p_verify.add_argument("--result", required=True, help="path to a result JSON file")
    p_verify.set_defaults(func=cmd_verify)

    p_bounds = sub.add_parser("bounds", help="closed-form bound evaluations")
    p_bounds.add_argument("--m", type=int, help="quadrature size for the root bound")
    p_bounds.add_argument("--dim", type=int, help="dimension for the root bound")
    p_bounds.add_argument("--c", help="slope for the linear-degree radius bound")
    p_bounds.add_argument("--bits", type=int)
    p_bounds.set_defaults(func=cmd_bounds)

    p_lag = sub.add_parser("laguerre", help="print quadrature nodes and weights")
    p_lag.add_argument("--m", type=int, required=True)
    p_lag.add_argument("--dim", type=int, required=True)
    p_lag.add_argument("--bits", type=int)
    p_lag.set_defaults(func=cmd_laguerre)

    return parser


def main(argv=None) -> int:
    if argv is None:
        argv = sys.argv[1:]
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # our error() override, or -h
        code = exc.code
        return 0 if code is None else int(code)
    if not getattr(args, "func", None):
        parser.print_usage(sys.stderr)
        return 1
    try:
        return args.func(args, ["sul", *list(argv)])
    except Infeasible as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return 2
    except PrecisionExhausted as exc:
        print(f"precision exhausted: {exc}", file=sys.stderr)
        return 3
    except (PreconditionViolated, ValueError) as exc:
        print(f"invalid request: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
