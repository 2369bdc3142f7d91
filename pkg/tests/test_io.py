import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qcav.io import CodeSpec, ModelSpec, SpecError, decode_complex, decode_ket, encode_ket, parse_code, \
    preset_model
from qcav.noise import build_pairwise_model

finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)
pair = st.tuples(finite, finite).map(list)


def _flat_numbers(obj):
    if isinstance(obj, dict):
        for v in obj.values():
            yield from _flat_numbers(v)
    elif isinstance(obj, list):
        for v in obj:
            yield from _flat_numbers(v)
    elif isinstance(obj, (int, float)) and not isinstance(obj, bool):
        yield obj


def _roundtrip(spec_cls, obj):
    first = spec_cls.from_dict(obj).to_dict()
    text = json.dumps(first)
    second = spec_cls.from_dict(json.loads(text)).to_dict()
    a, b = list(_flat_numbers(first)), list(_flat_numbers(second))
    assert len(a) == len(b)
    assert all(abs(x - y) <= 1e-15 for x, y in zip(a, b))
    return first, second


@settings(max_examples=50, deadline=None)
@given(st.lists(st.tuples(pair, pair, pair), min_size=2, max_size=2), st.sampled_from(["none", "scalar"]), pair)
def test_pairwise_spec_roundtrip(gammas, identity, g0):
    obj = {"type": "pairwise_collective", "pairs": 2, "identity": identity,
           "gamma": [{"plus": p, "minus": m, "z": z} for p, m, z in gammas]}
    if identity == "scalar":
        obj["gamma0"] = g0
    first, second = _roundtrip(ModelSpec, obj)
    assert first == second


@settings(max_examples=50, deadline=None)
@given(st.lists(st.tuples(pair, st.sampled_from(["x", "y", "z", "plus", "minus"]), st.integers(1, 3)),
                min_size=1, max_size=4))
def test_custom_spec_roundtrip(terms):
    obj = {"type": "custom", "qubits": 3, "operators": [
        {"label": f"E{k}", "terms": [{"coeff": c, "ops": [{"qubit": q, "kind": kind}]}]}
        for k, (c, kind, q) in enumerate(terms)]}
    _roundtrip(ModelSpec, obj)


@settings(max_examples=30, deadline=None)
@given(st.lists(pair, min_size=4, max_size=4))
def test_dense_matrix_roundtrip(entries):
    mat = [[entries[0], entries[1]], [entries[2], entries[3]]]
    obj = {"type": "custom", "qubits": 1, "operators": [{"label": "M", "matrix": mat}]}
    first, _ = _roundtrip(ModelSpec, obj)
    built = ModelSpec.from_dict(first).build()
    assert built["M"][1, 0] == complex(*entries[2])


@settings(max_examples=30, deadline=None)
@given(st.dictionaries(st.sampled_from(["00", "01", "10", "11"]), pair, min_size=1))
def test_code_spec_roundtrip(ket):
    first, second = _roundtrip(CodeSpec, {"qubits": 2, "basis": [ket]})
    assert first == second


def test_ket_encoding_is_exact(rng):
    psi = rng.standard_normal(8) + 1j * rng.standard_normal(8)
    back = decode_ket(json.loads(json.dumps(encode_ket(psi, 3))))
    assert np.array_equal(back, psi)


def test_preset_builds_complete_family():
    fam = preset_model("pairwise:L=2").build()
    assert fam.labels[0] == "A0"
    assert fam.is_complete
    bare = preset_model("pairwise:L=2,identity=none").build()
    assert np.allclose(bare.stacked(), build_pairwise_model(2, 0.1).stacked())
    scalar = preset_model("pairwise:L=1,gamma=0.2,gamma0=0.9").build()
    assert np.allclose(scalar["A0"], 0.9 * np.eye(4))


def test_preset_errors():
    with pytest.raises(SpecError):
        preset_model("nonsense")
    with pytest.raises(SpecError):
        preset_model("pairwise:L=two")
    with pytest.raises(SpecError):
        preset_model("collective:n=2,colour=red")


def test_spec_errors_name_the_field():
    with pytest.raises(SpecError, match=r"model.operators\[0\].terms\[0\].ops\[0\].qubit"):
        ModelSpec.from_dict({"type": "custom", "qubits": 2, "operators": [
            {"terms": [{"coeff": 1, "ops": [{"qubit": 5, "kind": "x"}]}]}]})
    with pytest.raises(SpecError, match="missing field 'pairs'"):
        ModelSpec.from_dict({"type": "pairwise_collective"})
    with pytest.raises(SpecError, match="bitstrings have 3 qubits"):
        CodeSpec.from_dict({"qubits": 2, "basis": [{"001": 1}]})
    with pytest.raises(SpecError):
        decode_complex([1, 2, 3])


def test_code_spec_orthonormalizes_with_warning(caplog):
    spec = CodeSpec.from_dict({"qubits": 1, "basis": [{"0": 1}, {"0": 1, "1": 1}]})
    with caplog.at_level("WARNING"):
        code = spec.build()
    assert np.allclose(code.basis.conj().T @ code.basis, np.eye(2))
    assert "adjusted" in caplog.text


def test_builtin_codes():
    assert parse_code("general-parity:L=2").build().dim == 4
    assert parse_code("four-qubit").build().dim == 2
    with pytest.raises(SpecError):
        parse_code("general-parity")


def test_malformed_json_reports_position(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{"type": "custom",\n "qubits": }')
    from qcav.io import parse_model
    with pytest.raises(SpecError, match=r"bad.json:2:"):
        parse_model(str(path))
