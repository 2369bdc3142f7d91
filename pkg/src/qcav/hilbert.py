"""
Dense linear algebra on n-qubit Hilbert spaces.

States are 1-d complex numpy arrays of length 2**n and operators are
2**n x 2**n complex arrays. Qubit 1 is the most significant bit of the basis
index, so ``ket("01")`` has its amplitude at index 1.

Subspaces carry an orthonormal basis stored as the columns of a matrix.
"""
import os
from dataclasses import dataclass
from functools import reduce
from typing import List, Sequence, Tuple

import numpy as np

from qcav.errors import InvalidArgumentError, NotPSDError, NumericalError, ResourceLimitError

__all__ = [
    "DEFAULT_TOL",
    "Subspace",
    "max_qubits",
    "check_qubits",
    "n_qubits_of",
    "ket",
    "basis_state",
    "normalize",
    "tensor_product",
    "eigen_clusters",
    "eigs_general",
    "kernel",
    "principal_sqrt_psd",
    "unitary_completion",
    "subspace_intersect",
    "orthonormalize",
]

DEFAULT_TOL = 1e-9
_DEFAULT_MAX_QUBITS = 12


def max_qubits() -> int:
    """Qubit cap for dense work; ``QCAV_MAX_QUBITS`` overrides the default of 12."""
    raw = os.environ.get("QCAV_MAX_QUBITS")
    if raw is None:
        return _DEFAULT_MAX_QUBITS
    try:
        cap = int(raw)
    except ValueError:
        raise InvalidArgumentError(f"QCAV_MAX_QUBITS must be an integer, got {raw!r}")
    if cap < 1:
        raise InvalidArgumentError("QCAV_MAX_QUBITS must be positive")
    return cap


def check_qubits(n: int) -> int:
    if n < 1:
        raise InvalidArgumentError(f"qubit count must be >= 1, got {n}")
    cap = max_qubits()
    if n > cap:
        raise ResourceLimitError(f"{n} qubits exceeds the dense cap of {cap} (set QCAV_MAX_QUBITS)")
    return n


def n_qubits_of(dim: int) -> int:
    n = int(dim).bit_length() - 1
    if dim < 2 or 2**n != dim:
        raise InvalidArgumentError(f"dimension {dim} is not a power of two >= 2")
    return n


def ket(bits: str) -> np.ndarray:
    """Computational basis state from a bitstring, qubit 1 leftmost."""
    if not bits or any(b not in "01" for b in bits):
        raise InvalidArgumentError(f"not a bitstring: {bits!r}")
    check_qubits(len(bits))
    return basis_state(int(bits, 2), len(bits))


def basis_state(index: int, n_qubits: int) -> np.ndarray:
    psi = np.zeros(2**n_qubits, dtype=complex)
    psi[index] = 1.0
    return psi


def normalize(psi) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    norm = np.linalg.norm(psi)
    if norm == 0:
        raise InvalidArgumentError("cannot normalize the zero vector")
    return psi / norm


@dataclass(frozen=True, eq=False)
class Subspace:
    """Orthonormal basis of a subspace, one basis vector per column."""

    n_qubits: int
    basis: np.ndarray

    def __post_init__(self):
        basis = np.asarray(self.basis, dtype=complex)
        if basis.ndim == 1:
            basis = basis.reshape(-1, 1)
        if basis.shape[0] != 2**self.n_qubits:
            raise InvalidArgumentError(
                f"basis rows {basis.shape[0]} do not match 2**{self.n_qubits}")
        basis.setflags(write=False)
        object.__setattr__(self, "basis", basis)

    @classmethod
    def empty(cls, n_qubits: int) -> "Subspace":
        return cls(n_qubits, np.zeros((2**n_qubits, 0), dtype=complex))

    @classmethod
    def full(cls, n_qubits: int) -> "Subspace":
        return cls(n_qubits, np.eye(2**n_qubits, dtype=complex))

    @classmethod
    def from_kets(cls, bitstrings: Sequence[str]) -> "Subspace":
        vectors = [ket(b) for b in bitstrings]
        return orthonormalize(vectors)

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    @property
    def vectors(self) -> List[np.ndarray]:
        return [self.basis[:, k] for k in range(self.dim)]

    def projector(self) -> np.ndarray:
        return self.basis @ self.basis.conj().T

    def contains(self, psi, tol: float = DEFAULT_TOL) -> bool:
        psi = np.asarray(psi, dtype=complex)
        return np.linalg.norm(psi - self.basis @ (self.basis.conj().T @ psi)) <= tol * max(1.0, np.linalg.norm(psi))

    def same_as(self, other: "Subspace", tol: float = 1e-8) -> bool:
        if self.dim != other.dim:
            return False
        return np.abs(self.projector() - other.projector()).max(initial=0.0) <= tol


def tensor_product(factors):
    """Kronecker product of states or operators, first factor most significant.

    :param factors: non-empty sequence of 1-d states or square 2-d operators.
    :return: the product state or operator.
    """
    factors = [np.asarray(f, dtype=complex) for f in factors]
    if not factors:
        raise InvalidArgumentError("tensor_product needs at least one factor")
    ndims = {f.ndim for f in factors}
    if len(ndims) != 1 or ndims.pop() not in (1, 2):
        raise InvalidArgumentError("factors must be all states or all operators")
    total = 1
    for f in factors:
        total *= f.shape[0]
    check_qubits(n_qubits_of(total))
    return reduce(np.kron, factors)


def _op_norm(op) -> float:
    return float(np.linalg.norm(op, 2)) if op.size else 0.0


def kernel(op, tol: float = DEFAULT_TOL, ref: float = 0.0) -> np.ndarray:
    """Orthonormal null-space basis of ``op`` as columns.

    Singular values below ``tol * max(largest singular value, ref)`` count as
    zero. ``ref`` lets callers measure against the scale of a parent operator
    so that a difference matrix made only of rounding noise has a full kernel.
    Works on rectangular matrices; the result lives in the domain space.
    """
    if tol <= 0:
        raise InvalidArgumentError("tol must be positive")
    op = np.asarray(op, dtype=complex)
    ncols = op.shape[1]
    if op.shape[0] == 0 or ncols == 0:
        return np.eye(ncols, dtype=complex)
    try:
        _, s, vh = np.linalg.svd(op)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"SVD failed: {exc}")
    smax = max(s[0] if s.size else 0.0, ref)
    if smax == 0.0:
        return np.eye(ncols, dtype=complex)
    rank = int(np.sum(s > tol * smax))
    return vh[rank:].conj().T


def _eigenvalues(op) -> np.ndarray:
    # triangular operators (sums of raising/lowering terms in the computational
    # basis) are read off exactly; LAPACK would smear their Jordan blocks
    if not np.any(np.triu(op, 1)) or not np.any(np.tril(op, -1)):
        return np.diag(op).copy()
    try:
        return np.linalg.eigvals(op)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigenvalue solver did not converge: {exc}")


def _single_linkage(values: np.ndarray, radius: float) -> List[np.ndarray]:
    unassigned = list(range(len(values)))
    clusters = []
    while unassigned:
        members = [unassigned.pop(0)]
        frontier = list(members)
        while frontier:
            k = frontier.pop()
            close = [j for j in unassigned if abs(values[j] - values[k]) <= radius]
            for j in close:
                unassigned.remove(j)
            members.extend(close)
            frontier.extend(close)
        clusters.append(values[members])
    return clusters


def eigen_clusters(op, tol: float = DEFAULT_TOL, ref: float = 1.0) -> List[Tuple[complex, np.ndarray]]:
    """Clustered eigenvalues of any square matrix with geometric eigenspace bases.

    Eigenvalues within ``tol * max(1, ||op||)`` are merged. Defective
    eigenvalues come back from LAPACK scattered around the true value; when a
    cluster's mean has no kernel the clustering radius is widened by decades
    until every cluster is confirmed by a non-trivial eigenspace. ``ref`` is
    the floor for the scale against which rank decisions are made.
    """
    if tol <= 0:
        raise InvalidArgumentError("tol must be positive")
    op = np.asarray(op, dtype=complex)
    if op.ndim != 2 or op.shape[0] != op.shape[1]:
        raise InvalidArgumentError(f"operator must be square, got shape {op.shape}")
    dim = op.shape[0]
    if dim == 0:
        return []
    scale = max(ref, _op_norm(op))
    values = _eigenvalues(op)
    eye = np.eye(dim, dtype=complex)

    radius = tol * scale
    while True:
        found = []
        for cluster in _single_linkage(values, radius):
            lam = complex(np.mean(cluster))
            null = kernel(op - lam * eye, tol, ref=scale)
            if null.shape[1] == 0:
                break
            found.append((lam, null))
        else:
            break
        if radius > 1e-2 * scale:
            raise NumericalError("could not resolve eigenspaces", residual=radius)
        radius *= 10.0
    found.sort(key=lambda item: (-item[1].shape[1], item[0].real, item[0].imag))
    return found


def eigs_general(op, tol: float = DEFAULT_TOL) -> List[Tuple[complex, Subspace]]:
    """Eigenvalues of a qubit operator paired with their geometric eigenspaces.

    Only true eigenvectors are returned; for a non-diagonalizable operator the
    eigenspace dimensions sum to less than the full dimension.
    """
    op = np.asarray(op, dtype=complex)
    n = n_qubits_of(op.shape[0])
    return [(lam, Subspace(n, basis)) for lam, basis in eigen_clusters(op, tol)]


def principal_sqrt_psd(op, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Unique positive semidefinite square root of a Hermitian PSD operator."""
    op = np.asarray(op, dtype=complex)
    herm_err = np.abs(op - op.conj().T).max(initial=0.0)
    if herm_err > tol:
        raise NotPSDError(f"operator is not Hermitian (residual {herm_err:.3e})", residual=herm_err)
    w, v = np.linalg.eigh((op + op.conj().T) / 2)
    if w.size and w.min() < -tol:
        raise NotPSDError(f"operator has eigenvalue {w.min():.3e} < 0", residual=float(-w.min()))
    w = np.clip(w, 0.0, None)
    return (v * np.sqrt(w)) @ v.conj().T


def orthonormalize(vectors, tol: float = 1e-10) -> Subspace:
    """Modified Gram-Schmidt with one re-orthogonalization pass.

    Vectors whose residual norm falls under ``tol`` (relative to their own
    norm) are dropped, so the output dimension is the numerical rank.
    """
    if isinstance(vectors, np.ndarray) and vectors.ndim == 2:
        vectors = [vectors[:, k] for k in range(vectors.shape[1])]
    vectors = [np.asarray(v, dtype=complex) for v in vectors]
    if not vectors:
        raise InvalidArgumentError("orthonormalize needs the space dimension; pass at least one vector")
    dim = vectors[0].shape[0]
    if any(v.shape != (dim,) for v in vectors):
        raise InvalidArgumentError("all vectors must share one dimension")
    basis: List[np.ndarray] = []
    for v in vectors:
        ref = np.linalg.norm(v)
        if ref == 0:
            continue
        w = v.copy()
        for _ in range(2):
            for b in basis:
                w -= np.vdot(b, w) * b
        norm = np.linalg.norm(w)
        if norm < tol * ref:
            continue
        basis.append(w / norm)
    mat = np.column_stack(basis) if basis else np.zeros((dim, 0), dtype=complex)
    return Subspace(n_qubits_of(dim), mat)


def unitary_completion(first_row) -> np.ndarray:
    """Unitary matrix whose first row is ``first_row``.

    Remaining rows come from Gram-Schmidt against the standard basis, so a
    standard basis vector completes to a permutation-like matrix.
    """
    row = np.asarray(first_row, dtype=complex).ravel()
    norm = np.linalg.norm(row)
    if row.size == 0 or norm == 0:
        raise InvalidArgumentError("first row must be non-zero")
    if abs(norm - 1.0) > 1e-10:
        raise InvalidArgumentError(f"first row must have unit norm, got {norm:.15g}")
    size = row.size
    # build the columns of U^dagger: conj(row) first, then completed
    cols = [row.conj()]
    for k in range(size):
        if len(cols) == size:
            break
        w = np.zeros(size, dtype=complex)
        w[k] = 1.0
        for _ in range(2):
            for c in cols:
                w -= np.vdot(c, w) * c
        wn = np.linalg.norm(w)
        if wn > 1e-8:
            cols.append(w / wn)
    u_dag = np.column_stack(cols)
    u = u_dag.conj().T
    u[0] = row
    return u


def subspace_intersect(a: Subspace, b: Subspace, tol: float = DEFAULT_TOL) -> Subspace:
    """Intersection of two subspaces as the null space of the stacked complements."""
    if a.n_qubits != b.n_qubits:
        raise InvalidArgumentError("subspaces live on different qubit counts")
    if a.dim == 0 or b.dim == 0:
        return Subspace.empty(a.n_qubits)
    dim = a.basis.shape[0]
    eye = np.eye(dim, dtype=complex)
    stacked = np.vstack([eye - a.projector(), eye - b.projector()])
    null = kernel(stacked, tol)
    if null.shape[1] == 0:
        return Subspace.empty(a.n_qubits)
    return Subspace(a.n_qubits, null)
