"""On-disk cache of certified solve results.

Entries are keyed by (d, s, n, bits, t_tol) and written atomically (temp file
plus rename in the same directory), so concurrent writers can never leave a
torn file behind.  A cache hit is never trusted blindly: the stored witness
is re-certified from scratch in exact arithmetic and the whole payload is
re-derived from it; any discrepancy — a tampered threshold, a corrupted
coefficient, a truncated file — makes the entry poisoned, and poisoned
entries are recomputed, never served.

The cache directory defaults to ./.sul-cache and can be moved with the
SUL_CACHE_DIR environment variable.
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
from pathlib import Path

import gmpy2

from .errors import SulError
from .laguerre import smallest_root
from .eigenbasis import LaguerreExpansion, expansion_from_json_dict
from .optimizer import (
    RhoResult,
    admissible_indices,
    recertify_expansion,
    rho_result_to_json_dict,
)
from .precision import to_scalar, working_precision

CACHE_ENV = "SUL_CACHE_DIR"
DEFAULT_CACHE_DIR = ".sul-cache"


def cache_dir(directory=None) -> Path:
    """Resolve the cache directory (argument > environment > default)."""
    if directory is not None:
        return Path(directory)
    return Path(os.environ.get(CACHE_ENV, DEFAULT_CACHE_DIR))


def cache_key(d: int, s: int, n: int, bits: int, t_tol_text: str) -> str:
    """Stable file name for one (d, s, n, bits, t_tol) cell."""
    tag = hashlib.sha256(t_tol_text.encode("utf-8")).hexdigest()[:16]
    sign = "p" if s > 0 else "m"
    return f"rho-d{d}-s{sign}-n{n}-b{bits}-t{tag}.json"


def _entry_path(d, s, n, bits, t_tol_text, directory=None) -> Path:
    return cache_dir(directory) / cache_key(d, s, n, bits, t_tol_text)


def rebuild_result(witness: LaguerreExpansion, *, d: int, s: int, n: int, bits: int):
    """Re-derive a full result from a stored witness, or None if unsound.

    Mirrors the tail of the solver exactly — same precision context, same
    operations — so a rebuilt result serializes byte-identically to the
    fresh solve that produced the witness.
    """
    if witness.param.d != d or witness.is_zero:
        return None
    allowed = set(admissible_indices(s, n))
    if not set(witness.coeffs) <= allowed:
        return None
    m = n // 2 + 1
    with working_precision(bits):
        cert = recertify_expansion(witness, bits)
        if not cert.certified:
            return None
        lam = smallest_root(m, witness.param, bits=bits)
        two_lambda = 2 * lam
        T_final = to_scalar(cert.verified_T)
        rho = gmpy2.sqrt(T_final / (2 * gmpy2.const_pi()))
    return RhoResult(
        d=d,
        s=s,
        n=n,
        m=m,
        rho=rho,
        T=T_final,
        witness=cert.exact_expansion,
        certificate=cert,
        lower_bound_T=two_lambda,
        bits=bits,
    )


def load_result(d: int, s: int, n: int, bits: int, t_tol_text: str, directory=None):
    """Return a revalidated cached result, or None when absent or poisoned."""
    path = _entry_path(d, s, n, bits, t_tol_text, directory)
    try:
        raw = path.read_text(encoding="utf-8")
    except OSError:
        return None
    try:
        payload = json.loads(raw)
        stored_key = (
            int(payload["d"]),
            int(payload["s"]),
            int(payload["n"]),
            int(payload["bits"]),
        )
        if stored_key != (d, s, n, bits):
            return None
        witness = expansion_from_json_dict(payload["witness"])
        rebuilt = rebuild_result(witness, d=d, s=s, n=n, bits=bits)
    except (KeyError, ValueError, TypeError, ArithmeticError, SulError):
        return None
    if rebuilt is None:
        return None
    # Every stored field must match what the witness actually proves.
    if rho_result_to_json_dict(rebuilt) != payload:
        return None
    return rebuilt


def store_result(r: RhoResult, t_tol_text: str, directory=None) -> Path:
    """Atomically persist a result under its cache key; returns the path."""
    path = _entry_path(r.d, r.s, r.n, r.bits, t_tol_text, directory)
    path.parent.mkdir(parents=True, exist_ok=True)
    body = json.dumps(rho_result_to_json_dict(r), sort_keys=True, indent=2) + "\n"
    fd, tmp = tempfile.mkstemp(dir=str(path.parent), prefix=path.name + ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as handle:
            handle.write(body)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise
    return path
