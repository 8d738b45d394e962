"""Provenance manifests and the certify-on-load result cache."""

import hashlib
import json
import os

import pytest
from gmpy2 import mpq

from sul.cache import (
    CACHE_ENV,
    DEFAULT_CACHE_DIR,
    cache_dir,
    cache_key,
    load_result,
    rebuild_result,
    store_result,
)
from sul.eigenbasis import LaguerreExpansion
from sul.errors import PreconditionViolated
from sul.laguerre import LaguerreParam
from sul.manifest import (
    build_manifest,
    canonical_json,
    input_digest,
    manifest_csv_line,
    manifest_to_dict,
    payload_fingerprint,
    split_manifest_csv,
)
from sul.optimizer import rho_result_to_json_dict, solve_rho

BITS = 192
T_TOL_TEXT = "2^-64"


@pytest.fixture(scope="module")
def solved():
    return solve_rho(2, +1, 2, bits=BITS)


# ---------------------------------------------------------------- manifest


def test_canonical_json_is_sorted_and_compact():
    assert canonical_json({"b": 1, "a": [2, 3]}) == '{"a":[2,3],"b":1}'


def test_input_digest_ignores_key_order_but_not_values():
    a = input_digest({"x": 1, "y": "z"})
    b = input_digest({"y": "z", "x": 1})
    c = input_digest({"x": 2, "y": "z"})
    assert a == b != c
    assert a == hashlib.sha256(b'{"x":1,"y":"z"}').hexdigest()


def test_build_manifest_fields():
    m = build_manifest(
        ["sul", "rho", "--dim", "2", "--note", "two words"],
        256,
        {"t_tol": "1e-30"},
        {"d": 2},
    )
    assert m.command == "sul rho --dim 2 --note 'two words'"
    assert m.bits == 256
    assert m.tolerances == {"t_tol": "1e-30"}
    assert m.input_hash == input_digest({"d": 2})
    # ISO-8601 UTC timestamp, second resolution
    assert m.timestamp.endswith("+00:00") and "T" in m.timestamp
    d = manifest_to_dict(m)
    assert set(d) == {
        "command",
        "bits",
        "tolerances",
        "code_version",
        "timestamp",
        "input_hash",
    }


def test_build_manifest_accepts_preformatted_command():
    m = build_manifest("sul scan", 128, {}, {})
    assert m.command == "sul scan"


def test_manifest_csv_line_round_trip():
    m = build_manifest(["sul", "scan"], 128, {"t_tol": "2^-64"}, {"dims": [2, 4]})
    text = manifest_csv_line(m) + "\nh1,h2\n1,2\n"
    header, body = split_manifest_csv(text)
    assert header == manifest_to_dict(m)
    assert body == "h1,h2\n1,2\n"


def test_split_manifest_csv_rejects_missing_manifest():
    with pytest.raises(PreconditionViolated):
        split_manifest_csv("h1,h2\n1,2\n")
    with pytest.raises(PreconditionViolated):
        split_manifest_csv("# manifest: {}")  # no newline after the line


def test_payload_fingerprint_drops_only_timestamp():
    m1 = build_manifest(["sul", "scan"], 128, {}, {"dims": [2]})
    m2 = build_manifest(["sul", "scan"], 128, {}, {"dims": [2]})
    f1 = payload_fingerprint(manifest_to_dict(m1))
    f2 = payload_fingerprint(manifest_to_dict(m2))
    assert f1 == f2
    assert "timestamp" not in f1
    assert f1["command"] == "sul scan"


# ------------------------------------------------------------------- cache


def test_cache_dir_resolution(monkeypatch, tmp_path):
    monkeypatch.delenv(CACHE_ENV, raising=False)
    assert str(cache_dir()) == DEFAULT_CACHE_DIR
    monkeypatch.setenv(CACHE_ENV, str(tmp_path / "env-cache"))
    assert cache_dir() == tmp_path / "env-cache"
    # explicit argument wins over the environment
    assert cache_dir(tmp_path / "arg-cache") == tmp_path / "arg-cache"


def test_cache_key_shape():
    key = cache_key(2, +1, 2, 256, T_TOL_TEXT)
    assert key.startswith("rho-d2-sp-n2-b256-t") and key.endswith(".json")
    tag = key[len("rho-d2-sp-n2-b256-t"):-len(".json")]
    assert len(tag) == 16 and all(c in "0123456789abcdef" for c in tag)
    assert cache_key(2, -1, 3, 256, T_TOL_TEXT).startswith("rho-d2-sm-n3-")
    assert cache_key(2, +1, 2, 256, "1e-30") != key  # tolerance text matters


def test_store_load_round_trip(tmp_path, solved):
    path = store_result(solved, T_TOL_TEXT, directory=tmp_path)
    assert path.parent == tmp_path
    assert path.name == cache_key(2, +1, 2, BITS, T_TOL_TEXT)
    # atomic write leaves no temp droppings
    assert list(tmp_path.glob("*.tmp")) == []
    loaded = load_result(2, +1, 2, BITS, T_TOL_TEXT, directory=tmp_path)
    assert loaded is not None
    assert rho_result_to_json_dict(loaded) == rho_result_to_json_dict(solved)


def test_load_missing_entry_returns_none(tmp_path):
    assert load_result(2, +1, 2, BITS, T_TOL_TEXT, directory=tmp_path) is None
    assert (
        load_result(2, +1, 2, BITS, T_TOL_TEXT, directory=tmp_path / "absent")
        is None
    )


def test_load_rejects_tampered_threshold(tmp_path, solved):
    path = store_result(solved, T_TOL_TEXT, directory=tmp_path)
    payload = json.loads(path.read_text())
    payload["T"] = "3.5"
    payload["rho"] = "0.75"
    path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")
    assert load_result(2, +1, 2, BITS, T_TOL_TEXT, directory=tmp_path) is None


def test_load_rejects_corrupted_witness(tmp_path, solved):
    path = store_result(solved, T_TOL_TEXT, directory=tmp_path)
    payload = json.loads(path.read_text())
    coeffs = payload["witness"]["coeffs"]
    key = sorted(coeffs)[0]
    coeffs[key] = coeffs[key] + "1"  # decimal string: appending a digit shifts the value
    path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")
    assert load_result(2, +1, 2, BITS, T_TOL_TEXT, directory=tmp_path) is None


def test_load_rejects_truncated_file(tmp_path, solved):
    path = store_result(solved, T_TOL_TEXT, directory=tmp_path)
    text = path.read_text()
    path.write_text(text[: len(text) // 2])
    assert load_result(2, +1, 2, BITS, T_TOL_TEXT, directory=tmp_path) is None


def test_load_rejects_key_payload_mismatch(tmp_path, solved):
    """An entry renamed to another cell's key must not be served there."""
    store_result(solved, T_TOL_TEXT, directory=tmp_path)
    src = tmp_path / cache_key(2, +1, 2, BITS, T_TOL_TEXT)
    dst = tmp_path / cache_key(4, +1, 2, BITS, T_TOL_TEXT)
    os.rename(src, dst)
    assert load_result(4, +1, 2, BITS, T_TOL_TEXT, directory=tmp_path) is None


def test_rebuild_result_round_trip(solved):
    rebuilt = rebuild_result(solved.witness, d=2, s=+1, n=2, bits=BITS)
    assert rebuilt is not None
    assert rho_result_to_json_dict(rebuilt) == rho_result_to_json_dict(solved)


def test_rebuild_result_rejects_structural_problems(solved):
    param = LaguerreParam(2)
    # dimension mismatch
    assert rebuild_result(solved.witness, d=3, s=+1, n=2, bits=BITS) is None
    # zero witness
    assert rebuild_result(LaguerreExpansion(param, {}), d=2, s=+1, n=2, bits=BITS) is None
    # support outside the admissible index set (k=2 is not allowed at n=2, s=-1)
    assert rebuild_result(solved.witness, d=2, s=-1, n=2, bits=BITS) is None
    # witness that cannot certify: f(0) != 0
    bad = LaguerreExpansion(param, {0: mpq(1)})
    assert rebuild_result(bad, d=2, s=+1, n=2, bits=BITS) is None
