"""Run provenance records.

Every artifact the command-line tools emit (JSON result files, scan CSVs)
embeds a manifest describing exactly how it was produced: the command line,
the working precision, the tolerances in force, the package version, a UTC
timestamp, and a hash of the resolved inputs.  Two runs with the same
manifest (timestamp aside) must produce byte-identical payloads; the tests
hold the tools to that.
"""

from __future__ import annotations

import hashlib
import json
import shlex
from dataclasses import dataclass
from datetime import datetime, timezone

from .errors import PreconditionViolated

try:  # installed package metadata; fall back for source-tree imports
    from importlib.metadata import PackageNotFoundError, version as _pkg_version

    try:
        CODE_VERSION = _pkg_version("sul")
    except PackageNotFoundError:  # pragma: no cover
        CODE_VERSION = "0.0.0"
except ImportError:  # pragma: no cover
    CODE_VERSION = "0.0.0"

MANIFEST_KEY = "manifest"
_CSV_PREFIX = "# manifest: "


def canonical_json(obj) -> str:
    """Compact, sorted-keys JSON used for hashing and embedding."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def input_digest(inputs: dict) -> str:
    """SHA-256 hex digest of the canonical form of the resolved inputs."""
    return hashlib.sha256(canonical_json(inputs).encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class RunManifest:
    """Provenance for one tool invocation."""

    command: str  # shell-quoted command line
    bits: int  # working precision in bits
    tolerances: dict  # name -> decimal-string tolerance
    code_version: str
    timestamp: str  # ISO-8601, UTC
    input_hash: str  # digest of the resolved inputs


def build_manifest(argv, bits: int, tolerances: dict, inputs: dict) -> RunManifest:
    """Assemble a manifest for a run invoked with `argv` (list of tokens)."""
    command = argv if isinstance(argv, str) else shlex.join(str(a) for a in argv)
    return RunManifest(
        command=command,
        bits=int(bits),
        tolerances={str(k): str(v) for k, v in tolerances.items()},
        code_version=CODE_VERSION,
        timestamp=datetime.now(timezone.utc).isoformat(timespec="seconds"),
        input_hash=input_digest(inputs),
    )


def manifest_to_dict(m: RunManifest) -> dict:
    return {
        "command": m.command,
        "bits": m.bits,
        "tolerances": dict(m.tolerances),
        "code_version": m.code_version,
        "timestamp": m.timestamp,
        "input_hash": m.input_hash,
    }


def manifest_csv_line(m: RunManifest) -> str:
    """The comment line carrying the manifest at the top of a scan CSV."""
    return _CSV_PREFIX + canonical_json(manifest_to_dict(m))


def split_manifest_csv(text: str) -> tuple[dict, str]:
    """Split a scan CSV into (manifest dict, body text after the first line).

    The body together with the manifest-minus-timestamp is the deterministic
    payload: consecutive identical runs must agree on both byte for byte.
    """
    first, sep, body = text.partition("\n")
    if not first.startswith(_CSV_PREFIX) or not sep:
        raise PreconditionViolated("file does not start with a manifest line")
    return json.loads(first[len(_CSV_PREFIX):]), body


def payload_fingerprint(d: dict) -> dict:
    """Manifest dict with the timestamp removed, for run-to-run comparison."""
    out = dict(d)
    out.pop("timestamp", None)
    return out
