"""
JSON model and code files, built-in presets, and report encoding helpers.

Complex numbers are written as ``[re, im]``; plain numbers are accepted on
input. Kets are objects mapping bitstrings (qubit 1 leftmost) to amplitudes.
"""
import json
import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np

from qcav.errors import InvalidArgumentError
from qcav.hilbert import Subspace, orthonormalize
from qcav.noise import (KrausFamily, PauliTerm, build_collective_model, build_correlated_swap_model,
                        build_pairwise_model, build_pauli_model, complete_family, pauli_sum)

log = logging.getLogger(__name__)

__all__ = [
    "SpecError",
    "ModelSpec",
    "CodeSpec",
    "encode_complex",
    "decode_complex",
    "encode_ket",
    "decode_ket",
    "parse_model",
    "parse_code",
    "load_json",
]

MODEL_TYPES = ("collective", "pairwise_collective", "correlated_swap", "pauli", "custom")
IDENTITY_MODES = ("none", "complete", "scalar")
BUILTIN_CODES = ("four-qubit", "general-parity", "correlated")

PRESET_DEFAULT_GAMMA = {"collective": 0.05, "pairwise_collective": 0.1, "correlated_swap": 0.3, "pauli": 0.1}


class SpecError(InvalidArgumentError):
    """Malformed model or code description; ``where`` names the offending field."""

    def __init__(self, where: str, message: str):
        super().__init__(f"{where}: {message}")
        self.where = where


def encode_complex(z) -> List[float]:
    z = complex(z)
    return [z.real, z.imag]


def decode_complex(value, where: str = "value") -> complex:
    if isinstance(value, bool):
        raise SpecError(where, "expected a number or [re, im]")
    if isinstance(value, (int, float)):
        return complex(float(value), 0.0)
    if isinstance(value, complex):
        return value
    if isinstance(value, (list, tuple)) and len(value) == 2 and all(
            isinstance(v, (int, float)) and not isinstance(v, bool) for v in value):
        return complex(float(value[0]), float(value[1]))
    raise SpecError(where, f"expected a number or [re, im], got {value!r}")


def encode_ket(psi, n_qubits: int, cutoff: float = 1e-12) -> Dict[str, List[float]]:
    psi = np.asarray(psi, dtype=complex)
    return {format(i, f"0{n_qubits}b"): encode_complex(psi[i]) for i in np.flatnonzero(np.abs(psi) > cutoff)}


def decode_ket(obj, n_qubits: Optional[int] = None, where: str = "ket") -> np.ndarray:
    if not isinstance(obj, dict) or not obj:
        raise SpecError(where, "a ket is a non-empty object mapping bitstrings to amplitudes")
    lengths = {len(k) for k in obj}
    if len(lengths) != 1:
        raise SpecError(where, "bitstrings have different lengths")
    n = lengths.pop()
    if n_qubits is not None and n != n_qubits:
        raise SpecError(where, f"bitstrings have {n} qubits, expected {n_qubits}")
    psi = np.zeros(2**n, dtype=complex)
    for bits, amp in obj.items():
        if not bits or any(b not in "01" for b in bits):
            raise SpecError(f"{where}.{bits}", "not a bitstring")
        psi[int(bits, 2)] += decode_complex(amp, f"{where}.{bits}")
    return psi


def _require(obj, key, where):
    if key not in obj:
        raise SpecError(where, f"missing field {key!r}")
    return obj[key]


def _as_int(value, where, minimum=1):
    if isinstance(value, bool) or not isinstance(value, int) or value < minimum:
        raise SpecError(where, f"expected an integer >= {minimum}, got {value!r}")
    return value


def _encode_gamma(g):
    if isinstance(g, dict):
        return {k: _encode_gamma(v) for k, v in g.items()}
    if isinstance(g, (list, tuple)):
        return [_encode_gamma(v) for v in g]
    return encode_complex(g)


@dataclass
class ModelSpec:
    """A noise model as written in a model file.

    ``gamma`` depends on ``type``: a single coupling, ``{"plus", "minus", "z"}``
    for the collective model, or for the pairwise model a single coupling, a
    triple object shared by all pairs, or a list with one triple per pair.
    ``identity`` chooses the no-error operator: ``none``, ``complete`` (square
    root completion) or ``scalar`` (``gamma0 * I``).
    """

    type: str
    qubits: Optional[int] = None
    pairs: Optional[int] = None
    gamma: Any = None
    identity: str = "none"
    gamma0: Optional[complex] = None
    operators: List[Dict[str, Any]] = field(default_factory=list)

    @classmethod
    def from_dict(cls, obj, where: str = "model") -> "ModelSpec":
        if not isinstance(obj, dict):
            raise SpecError(where, "model must be a JSON object")
        kind = _require(obj, "type", where)
        if kind not in MODEL_TYPES:
            raise SpecError(f"{where}.type", f"unknown model type {kind!r}; expected one of {MODEL_TYPES}")
        spec = cls(type=kind)
        spec.identity = obj.get("identity", "none")
        if spec.identity not in IDENTITY_MODES:
            raise SpecError(f"{where}.identity", f"expected one of {IDENTITY_MODES}")
        if spec.identity == "scalar":
            spec.gamma0 = decode_complex(_require(obj, "gamma0", where), f"{where}.gamma0")
        if kind == "pairwise_collective":
            spec.pairs = _as_int(_require(obj, "pairs", where), f"{where}.pairs")
        elif kind != "correlated_swap":
            spec.qubits = _as_int(_require(obj, "qubits", where), f"{where}.qubits")
        elif "qubits" in obj and obj["qubits"] != 2:
            raise SpecError(f"{where}.qubits", "the correlated swap model is defined on 2 qubits")
        if kind != "custom":
            spec.gamma = _decode_gamma(kind, obj.get("gamma", PRESET_DEFAULT_GAMMA[kind]), f"{where}.gamma")
        else:
            ops = _require(obj, "operators", where)
            if not isinstance(ops, list):
                raise SpecError(f"{where}.operators", "expected a list")
            spec.operators = [_decode_operator(op, spec.qubits, f"{where}.operators[{k}]")
                              for k, op in enumerate(ops)]
        return spec

    def to_dict(self) -> Dict[str, Any]:
        out: Dict[str, Any] = {"type": self.type}
        if self.qubits is not None:
            out["qubits"] = self.qubits
        if self.pairs is not None:
            out["pairs"] = self.pairs
        if self.type != "custom":
            out["gamma"] = _encode_gamma(self.gamma)
        else:
            out["operators"] = [_encode_operator(op) for op in self.operators]
        out["identity"] = self.identity
        if self.gamma0 is not None:
            out["gamma0"] = encode_complex(self.gamma0)
        return out

    @property
    def n_qubits(self) -> int:
        if self.type == "pairwise_collective":
            return 2 * self.pairs
        if self.type == "correlated_swap":
            return 2
        return self.qubits

    def errors(self) -> KrausFamily:
        g = self.gamma
        if self.type == "collective":
            return build_collective_model(self.qubits, g["plus"], g["minus"], g["z"])
        if self.type == "pairwise_collective":
            return build_pairwise_model(self.pairs, g)
        if self.type == "correlated_swap":
            return build_correlated_swap_model(g)
        if self.type == "pauli":
            return build_pauli_model(self.qubits, g)
        ops, labels = [], []
        for k, op in enumerate(self.operators):
            labels.append(op.get("label", f"E{k + 1}"))
            if "matrix" in op:
                ops.append(op["matrix"])
            else:
                ops.append(pauli_sum(op["terms"], self.qubits))
        return KrausFamily(self.qubits, tuple(ops), tuple(labels))

    def build(self) -> KrausFamily:
        fam = self.errors()
        if self.identity == "complete":
            return complete_family(fam)
        if self.identity == "scalar":
            return fam.with_identity(self.gamma0)
        return fam


def _decode_gamma(kind, value, where):
    if kind == "collective":
        if isinstance(value, dict):
            return {k: decode_complex(_require(value, k, where), f"{where}.{k}") for k in ("plus", "minus", "z")}
        g = decode_complex(value, where)
        return {"plus": g, "minus": g, "z": g}
    if kind == "pairwise_collective":
        if isinstance(value, dict):
            return tuple(decode_complex(_require(value, k, where), f"{where}.{k}") for k in ("plus", "minus", "z"))
        if isinstance(value, list) and value and isinstance(value[0], (dict, list)) and not (
                len(value) == 2 and all(isinstance(v, (int, float)) for v in value)):
            return [_decode_gamma(kind, v, f"{where}[{k}]") for k, v in enumerate(value)]
        return decode_complex(value, where)
    return decode_complex(value, where)


def _decode_operator(op, n_qubits, where):
    if not isinstance(op, dict):
        raise SpecError(where, "operator must be an object")
    out: Dict[str, Any] = {}
    if "label" in op:
        out["label"] = str(op["label"])
    if "matrix" in op:
        rows = op["matrix"]
        dim = 2**n_qubits
        if not isinstance(rows, list) or len(rows) != dim:
            raise SpecError(f"{where}.matrix", f"expected {dim} rows")
        mat = np.zeros((dim, dim), dtype=complex)
        for i, row in enumerate(rows):
            if not isinstance(row, list) or len(row) != dim:
                raise SpecError(f"{where}.matrix[{i}]", f"expected {dim} entries")
            for j, v in enumerate(row):
                mat[i, j] = decode_complex(v, f"{where}.matrix[{i}][{j}]")
        out["matrix"] = mat
    elif "terms" in op:
        terms = []
        for t, term in enumerate(op["terms"]):
            tw = f"{where}.terms[{t}]"
            if not isinstance(term, dict):
                raise SpecError(tw, "term must be an object")
            coeff = decode_complex(term.get("coeff", 1.0), f"{tw}.coeff")
            factors = []
            for f, fac in enumerate(term.get("ops", [])):
                fw = f"{tw}.ops[{f}]"
                q = _as_int(_require(fac, "qubit", fw), f"{fw}.qubit")
                if q > n_qubits:
                    raise SpecError(f"{fw}.qubit", f"qubit {q} out of range 1..{n_qubits}")
                factors.append((q, _require(fac, "kind", fw)))
            try:
                terms.append(PauliTerm(coeff, tuple(factors)))
            except InvalidArgumentError as exc:
                raise SpecError(tw, str(exc))
        out["terms"] = terms
    else:
        raise SpecError(where, "operator needs 'terms' or 'matrix'")
    return out


def _encode_operator(op):
    out: Dict[str, Any] = {}
    if "label" in op:
        out["label"] = op["label"]
    if "matrix" in op:
        out["matrix"] = [[encode_complex(v) for v in row] for row in op["matrix"]]
    else:
        out["terms"] = [{"coeff": encode_complex(t.coefficient),
                         "ops": [{"qubit": q, "kind": k} for q, k in t.factors]} for t in op["terms"]]
    return out


@dataclass
class CodeSpec:
    """A code as written in a code file: a built-in name or explicit sparse kets.

    Kets are kept exactly as written (bitstring -> amplitude) so that
    serializing a parsed file reproduces it.
    """

    qubits: Optional[int] = None
    basis: List[Dict[str, complex]] = field(default_factory=list)
    builtin: Optional[str] = None

    @classmethod
    def from_dict(cls, obj, where: str = "code") -> "CodeSpec":
        if not isinstance(obj, dict):
            raise SpecError(where, "code must be a JSON object")
        if "builtin" in obj:
            name = obj["builtin"]
            _builtin_code(name, f"{where}.builtin")
            return cls(builtin=name)
        n = _as_int(_require(obj, "qubits", where), f"{where}.qubits")
        basis = _require(obj, "basis", where)
        if not isinstance(basis, list) or not basis:
            raise SpecError(f"{where}.basis", "expected a non-empty list of kets")
        kets = []
        for i, k in enumerate(basis):
            decode_ket(k, n, f"{where}.basis[{i}]")
            kets.append({bits: decode_complex(v) for bits, v in k.items()})
        return cls(qubits=n, basis=kets)

    def to_dict(self) -> Dict[str, Any]:
        if self.builtin is not None:
            return {"builtin": self.builtin}
        return {"qubits": self.qubits,
                "basis": [{bits: encode_complex(v) for bits, v in k.items()} for k in self.basis]}

    def build(self) -> Subspace:
        if self.builtin is not None:
            return _builtin_code(self.builtin, "code.builtin")
        vectors = [decode_ket(k, self.qubits) for k in self.basis]
        code = orthonormalize(vectors, tol=1e-10)
        if code.dim != len(vectors):
            raise SpecError("code.basis", f"kets are linearly dependent (rank {code.dim} of {len(vectors)})")
        raw = np.column_stack(vectors)
        adjust = float(np.abs(raw - code.basis).max())
        if adjust > 1e-8:
            log.warning("code basis was not orthonormal; adjusted by up to %.3e", adjust)
        return code


def _parse_options(text, where):
    opts = {}
    if not text:
        return opts
    for part in text.split(","):
        if "=" not in part:
            raise SpecError(where, f"expected key=value, got {part!r}")
        k, v = part.split("=", 1)
        opts[k.strip()] = v.strip()
    return opts


def _num(value, where):
    try:
        return float(value) if "j" not in value else complex(value)
    except ValueError:
        raise SpecError(where, f"not a number: {value!r}")


def _int(value, where):
    try:
        return int(value)
    except ValueError:
        raise SpecError(where, f"not an integer: {value!r}")


def _builtin_code(name, where="code") -> Subspace:
    from qcav.codes import correlated_code, four_qubit_code, parity_code_space

    base, _, rest = str(name).partition(":")
    opts = _parse_options(rest, where)
    if base == "four-qubit":
        return four_qubit_code()
    if base == "correlated":
        return correlated_code()
    if base == "general-parity":
        if "L" not in opts:
            raise SpecError(where, "general-parity needs L=<n>")
        return parity_code_space(_int(opts["L"], where))
    raise SpecError(where, f"unknown built-in code {name!r}; expected one of {BUILTIN_CODES}")


def preset_model(text: str) -> ModelSpec:
    """Model from a preset string such as ``pairwise:L=2`` or ``collective:n=4,gamma=0.1``.

    Presets default to ``identity=complete`` so the resulting family is a
    physical channel; pass ``identity=none`` for the bare error operators or
    ``gamma0=<g>`` for a scalar no-error operator.
    """
    where = f"preset {text!r}"
    base, _, rest = text.partition(":")
    opts = _parse_options(rest, where)
    names = {"pairwise": "pairwise_collective", "collective": "collective",
             "correlated": "correlated_swap", "pauli": "pauli"}
    if base == "identity":
        n = _int(opts.get("n", "1"), where)
        obj = {"type": "custom", "qubits": n, "operators": [{"label": "I", "terms": [{"coeff": 1.0, "ops": []}]}]}
        return ModelSpec.from_dict(obj, where)
    if base not in names:
        raise SpecError(where, f"unknown preset {base!r}; expected pairwise, collective, correlated, pauli or identity")
    obj: Dict[str, Any] = {"type": names[base]}
    if base == "pairwise":
        obj["pairs"] = _int(opts.pop("L", "2"), where)
    elif base in ("collective", "pauli"):
        obj["qubits"] = _int(opts.pop("n", "2"), where)
    if "gamma" in opts:
        obj["gamma"] = encode_complex(_num(opts.pop("gamma"), where))
    obj["identity"] = opts.pop("identity", "complete" if base != "pauli" else "none")
    if "gamma0" in opts:
        obj["identity"] = "scalar"
        obj["gamma0"] = encode_complex(_num(opts.pop("gamma0"), where))
    if opts:
        raise SpecError(where, f"unknown options {sorted(opts)}")
    return ModelSpec.from_dict(obj, where)


def load_json(path: str):
    with open(path) as fh:
        text = fh.read()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecError(f"{path}:{exc.lineno}:{exc.colno}", exc.msg)


def parse_model(arg: str) -> ModelSpec:
    """Model from a preset string or a JSON file path."""
    if arg.endswith(".json") or "/" in arg:
        return ModelSpec.from_dict(load_json(arg), arg)
    return preset_model(arg)


def parse_code(arg: str) -> CodeSpec:
    base = arg.partition(":")[0]
    if base in BUILTIN_CODES:
        _builtin_code(arg, "code")
        return CodeSpec(builtin=arg)
    return CodeSpec.from_dict(load_json(arg), arg)
