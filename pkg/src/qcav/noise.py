"""
Error-operator families and Kraus-family manipulation.

Single-qubit conventions: ``sigma_plus`` maps |0> to |1>, ``sigma_minus`` maps
|1> to |0>, and ``sigma_z = [sigma_plus, sigma_minus]`` so that |1> is the +1
eigenstate. With this choice sigma_plus raises the sigma_z eigenvalue, and a
qubit pair pushed into |11> by a raising error reads +2 on
``sigma_z + sigma_z'``. The x and y matrices are fixed by
``sigma_plus = (x + i y) / 2``.
"""
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from qcav.errors import CanonicalizationError, InvalidArgumentError, NotPSDError
from qcav.hilbert import check_qubits, n_qubits_of, principal_sqrt_psd, unitary_completion

__all__ = [
    "PAULI_KINDS",
    "single_qubit",
    "sigma",
    "PauliTerm",
    "pauli_sum",
    "KrausFamily",
    "build_collective_model",
    "build_pairwise_model",
    "build_correlated_swap_model",
    "build_pauli_model",
    "complete_family",
    "check_completeness",
    "transform_family",
    "canonicalize_family",
    "minimal_family",
    "random_unitary",
]

COMPLETE_TOL = 1e-10

_SINGLE = {
    "plus": np.array([[0, 0], [1, 0]], dtype=complex),
    "minus": np.array([[0, 1], [0, 0]], dtype=complex),
    "z": np.array([[-1, 0], [0, 1]], dtype=complex),
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, 1j], [-1j, 0]], dtype=complex),
    "i": np.eye(2, dtype=complex),
}
PAULI_KINDS = ("plus", "minus", "z", "x", "y", "i")
_SUFFIX = {"plus": "+", "minus": "-", "z": "z"}


def single_qubit(kind: str) -> np.ndarray:
    try:
        return _SINGLE[kind].copy()
    except KeyError:
        raise InvalidArgumentError(f"unknown Pauli kind {kind!r}; expected one of {PAULI_KINDS}")


def _embed(factors: Mapping[int, np.ndarray], n_qubits: int) -> np.ndarray:
    # kron of 2x2 factors with identities elsewhere, qubit 1 most significant
    out = np.ones((1, 1), dtype=complex)
    eye = np.eye(2, dtype=complex)
    for q in range(1, n_qubits + 1):
        out = np.kron(out, factors.get(q, eye))
    return out


def sigma(kind: str, qubit: int, n_qubits: int) -> np.ndarray:
    """Single-qubit operator ``kind`` acting on ``qubit`` (1-based) of ``n_qubits``."""
    check_qubits(n_qubits)
    if not 1 <= qubit <= n_qubits:
        raise InvalidArgumentError(f"qubit {qubit} out of range 1..{n_qubits}")
    return _embed({qubit: single_qubit(kind)}, n_qubits)


@dataclass(frozen=True)
class PauliTerm:
    """``coefficient`` times a product of single-qubit factors."""

    coefficient: complex
    factors: Tuple[Tuple[int, str], ...]

    def __post_init__(self):
        factors = tuple(sorted((int(q), str(k)) for q, k in dict(self.factors).items()))
        if len(factors) != len(self.factors):
            raise InvalidArgumentError("at most one factor per qubit")
        for _, kind in factors:
            single_qubit(kind)
        object.__setattr__(self, "factors", factors)
        object.__setattr__(self, "coefficient", complex(self.coefficient))

    def matrix(self, n_qubits: int) -> np.ndarray:
        check_qubits(n_qubits)
        for q, _ in self.factors:
            if not 1 <= q <= n_qubits:
                raise InvalidArgumentError(f"qubit {q} out of range 1..{n_qubits}")
        return self.coefficient * _embed({q: single_qubit(k) for q, k in self.factors}, n_qubits)


def pauli_sum(terms: Iterable[PauliTerm], n_qubits: int) -> np.ndarray:
    dim = 2**check_qubits(n_qubits)
    out = np.zeros((dim, dim), dtype=complex)
    for term in terms:
        out += term.matrix(n_qubits)
    return out


def _residual(operators) -> float:
    if not operators:
        return float("inf")
    dim = operators[0].shape[0]
    total = sum(a.conj().T @ a for a in operators)
    return float(np.abs(total - np.eye(dim)).max())


@dataclass(frozen=True, eq=False)
class KrausFamily:
    """Ordered interaction operators with labels.

    ``completeness_residual`` is the max-entry size of ``sum A^dag A - I`` and
    is computed on construction; a family is complete when it is at most 1e-10.
    Families that are not complete are still valid inputs to the analysis
    routines, which treat them as plain operator sets.
    Unlabelled operators are named A1, A2, ... leaving A0 for the no-error operator.
    """

    n_qubits: int
    operators: Tuple[np.ndarray, ...]
    labels: Tuple[str, ...] = ()
    completeness_residual: float = field(init=False)

    def __post_init__(self):
        check_qubits(self.n_qubits)
        dim = 2**self.n_qubits
        ops = []
        for op in self.operators:
            op = np.array(op, dtype=complex)
            if op.shape != (dim, dim):
                raise InvalidArgumentError(f"operator shape {op.shape} does not match {self.n_qubits} qubits")
            op.setflags(write=False)
            ops.append(op)
        labels = tuple(self.labels) if self.labels else tuple(f"A{k + 1}" for k in range(len(ops)))
        if len(labels) != len(ops):
            raise InvalidArgumentError("need exactly one label per operator")
        if len(set(labels)) != len(labels):
            raise InvalidArgumentError(f"labels must be unique: {labels}")
        object.__setattr__(self, "operators", tuple(ops))
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "completeness_residual", _residual(ops))

    def __len__(self):
        return len(self.operators)

    @property
    def dim(self) -> int:
        return 2**self.n_qubits

    @property
    def is_complete(self) -> bool:
        return self.completeness_residual <= COMPLETE_TOL

    def __getitem__(self, label: str) -> np.ndarray:
        try:
            return self.operators[self.labels.index(label)]
        except ValueError:
            raise KeyError(f"no operator labelled {label!r}; have {list(self.labels)}")

    def stacked(self) -> np.ndarray:
        return np.stack(self.operators) if self.operators else np.zeros((0, self.dim, self.dim), complex)

    def select(self, labels: Sequence[str]) -> "KrausFamily":
        return KrausFamily(self.n_qubits, tuple(self[l] for l in labels), tuple(labels))

    def with_identity(self, gamma0: complex, label: str = "A0") -> "KrausFamily":
        """Prepend ``gamma0 * I`` as the no-error operator."""
        eye = gamma0 * np.eye(self.dim, dtype=complex)
        return KrausFamily(self.n_qubits, (eye,) + self.operators, (label,) + self.labels)

    def __add__(self, other: "KrausFamily") -> "KrausFamily":
        if other.n_qubits != self.n_qubits:
            raise InvalidArgumentError("families act on different qubit counts")
        return KrausFamily(self.n_qubits, self.operators + other.operators, self.labels + other.labels)


def build_collective_model(n_qubits: int, gamma_plus: complex = 1.0, gamma_minus: complex = 1.0,
                           gamma_z: complex = 1.0) -> KrausFamily:
    """Collective raising, lowering and dephasing operators on ``n_qubits`` qubits."""
    check_qubits(n_qubits)
    ops = []
    for kind, g in (("plus", gamma_plus), ("minus", gamma_minus), ("z", gamma_z)):
        ops.append(g * sum(sigma(kind, q, n_qubits) for q in range(1, n_qubits + 1)))
    return KrausFamily(n_qubits, tuple(ops), ("A+", "A-", "Az"))


def _pair_gammas(L, gammas):
    if np.isscalar(gammas):
        return [(gammas, gammas, gammas)] * L
    gammas = list(gammas)
    if len(gammas) == 3 and all(np.isscalar(g) for g in gammas):
        return [tuple(gammas)] * L
    if len(gammas) != L:
        raise InvalidArgumentError(f"expected {L} per-pair (plus, minus, z) triples, got {len(gammas)}")
    out = []
    for triple in gammas:
        triple = tuple(triple)
        if len(triple) != 3:
            raise InvalidArgumentError("each pair needs a (plus, minus, z) triple")
        out.append(triple)
    return out


def build_pairwise_model(L: int, gammas=1.0) -> KrausFamily:
    """Operators ``g (s_l + s_l')`` for every pair l and kind +, -, z.

    Qubits are laid out 1, 1', 2, 2', ... so pair l occupies qubits 2l-1 and
    2l. Operators come out ordered A1+, A1-, A1z, A2+, ...

    :param L: number of qubit pairs.
    :param gammas: one coupling for everything, one (plus, minus, z) triple
        shared by all pairs, or a list with a triple per pair.
    """
    if L < 1:
        raise InvalidArgumentError("need at least one pair")
    n = check_qubits(2 * L)
    ops, labels = [], []
    for l, triple in enumerate(_pair_gammas(L, gammas), start=1):
        for kind, g in zip(("plus", "minus", "z"), triple):
            ops.append(g * (sigma(kind, 2 * l - 1, n) + sigma(kind, 2 * l, n)))
            labels.append(f"A{l}{_SUFFIX[kind]}")
    return KrausFamily(n, tuple(ops), tuple(labels))


def build_correlated_swap_model(gamma: complex = 1.0) -> KrausFamily:
    a1 = gamma * sigma("plus", 1, 2) @ sigma("minus", 2, 2)
    a2 = gamma * sigma("plus", 2, 2) @ sigma("minus", 1, 2)
    return KrausFamily(2, (a1, a2), ("A1", "A2"))


def build_pauli_model(n_qubits: int, gamma: complex = 1.0, include_identity: bool = False) -> KrausFamily:
    """All Pauli products on ``n_qubits`` qubits (4**n - 1 of them without identity)."""
    check_qubits(n_qubits)
    ops, labels = [], []
    for idx in np.ndindex(*([4] * n_qubits)):
        if not include_identity and not any(idx):
            continue
        kinds = ["i", "x", "y", "z"]
        factors = {q + 1: single_qubit(kinds[k]) for q, k in enumerate(idx)}
        ops.append(gamma * _embed(factors, n_qubits))
        labels.append("".join("IXYZ"[k] for k in idx))
    return KrausFamily(n_qubits, tuple(ops), tuple(labels))


def complete_family(errors: KrausFamily, label: str = "A0") -> KrausFamily:
    """Prepend ``A0 = sqrt(I - sum A^dag A)`` so the family becomes trace preserving."""
    eye = np.eye(errors.dim, dtype=complex)
    deficit = eye - sum((a.conj().T @ a for a in errors.operators), np.zeros_like(eye))
    try:
        a0 = principal_sqrt_psd(deficit, tol=1e-12)
    except NotPSDError as exc:
        raise NotPSDError(
            f"error operators are too strong to complete (sum A^dag A exceeds I by "
            f"{exc.residual:.3e}); shrink the couplings", residual=exc.residual)
    if label in errors.labels:
        raise InvalidArgumentError(f"label {label!r} already used in the family")
    return KrausFamily(errors.n_qubits, (a0,) + errors.operators, (label,) + errors.labels)


def check_completeness(family: KrausFamily) -> float:
    return family.completeness_residual


def _as_unitary(x, size):
    x = np.asarray(x, dtype=complex)
    if x.shape != (size, size):
        raise InvalidArgumentError(f"mixing matrix shape {x.shape} does not match family size {size}")
    err = np.abs(x @ x.conj().T - np.eye(size)).max(initial=0.0)
    if err > 1e-10:
        raise InvalidArgumentError(f"mixing matrix is not unitary (residual {err:.3e})")
    return x


def transform_family(family: KrausFamily, x) -> KrausFamily:
    """Mix the family: ``B_b = sum_a x[b, a] A_a`` for a unitary ``x``.

    A row that simply picks one operator keeps that operator's label; other
    outputs are labelled ``B0, B1, ...``.
    """
    x = _as_unitary(x, len(family))
    ops = np.tensordot(x, family.stacked(), axes=(1, 0))
    labels = []
    for b, row in enumerate(x):
        hits = np.flatnonzero(np.abs(row) > 1e-12)
        if len(hits) == 1 and abs(row[hits[0]] - 1) <= 1e-12:
            labels.append(family.labels[hits[0]])
        else:
            labels.append(f"B{b}")
    if len(set(labels)) != len(labels):
        labels = [f"B{b}" for b in range(len(labels))]
    return KrausFamily(family.n_qubits, tuple(ops), tuple(labels))


def canonicalize_family(family: KrausFamily, tol: float = 1e-9) -> KrausFamily:
    """Equivalent family whose first operator is ``gamma0 * I`` with real gamma0 > 0.

    Solves ``sum_a c_a A_a = I`` in least squares, uses ``c / |c|`` as the
    first row of the mixing unitary and completes the rest.
    """
    if len(family) == 0:
        raise CanonicalizationError("empty family", residual=1.0)
    dim = family.dim
    cols = family.stacked().reshape(len(family), -1).T
    target = np.eye(dim, dtype=complex).ravel()
    c, *_ = np.linalg.lstsq(cols, target, rcond=None)
    residual = float(np.linalg.norm(cols @ c - target) / np.linalg.norm(target))
    if residual > tol:
        raise CanonicalizationError(
            f"identity is not in the span of the family (relative residual {residual:.3e})",
            residual=residual)
    row = c / np.linalg.norm(c)
    if np.abs(row - np.eye(len(family))[0]).max() <= 1e-12:
        return family
    x = unitary_completion(row)
    out = transform_family(family, x)
    labels = ("A0",) + tuple(l if l != "A0" else "B0" for l in out.labels[1:])
    ops = list(out.operators)
    # the first operator is I / |c| up to rounding; store it exactly
    ops[0] = np.eye(dim, dtype=complex) / np.linalg.norm(c)
    return KrausFamily(family.n_qubits, tuple(ops), labels)


def minimal_family(family: KrausFamily, tol: float = 1e-10) -> KrausFamily:
    """Drop linear dependencies via the Hilbert-Schmidt Gram matrix.

    Linearly independent families come back unchanged. Otherwise the output
    operators are the Gram eigen-combinations with eigenvalue above
    ``tol * max(1, largest)``; the induced channel is the same.
    """
    k = len(family)
    if k == 0:
        return family
    stack = family.stacked().reshape(k, -1)
    gram = stack.conj() @ stack.T
    w, v = np.linalg.eigh((gram + gram.conj().T) / 2)
    thresh = tol * max(1.0, float(w.max()))
    keep = w > thresh
    if keep.all():
        return family
    order = np.argsort(-w)
    order = order[keep[order]]
    ops, labels = [], []
    for j, col in enumerate(order):
        coeffs = v[:, col]
        pivot = np.argmax(np.abs(coeffs))
        coeffs = coeffs * (abs(coeffs[pivot]) / coeffs[pivot])
        # B_j = sum_a coeffs[a] A_a is unitary mixing with x[j, a] = coeffs[a]
        ops.append(np.tensordot(coeffs, family.stacked(), axes=(0, 0)))
        labels.append(family.labels[pivot] if abs(abs(coeffs[pivot]) - 1) <= 1e-12 else f"M{j}")
    if len(set(labels)) != len(labels):
        labels = [f"M{j}" for j in range(len(labels))]
    return KrausFamily(family.n_qubits, tuple(ops), tuple(labels))


def random_unitary(size: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary via QR of a complex Ginibre matrix."""
    z = (rng.standard_normal((size, size)) + 1j * rng.standard_normal((size, size))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))
