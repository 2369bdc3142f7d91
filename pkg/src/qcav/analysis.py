"""
Knill-Laflamme coefficient matrices, code classification, error-avoiding
checks, joint eigenspace search and randomized code search.
"""
import enum
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from qcav.errors import InvalidArgumentError
from qcav.hilbert import DEFAULT_TOL, Subspace, eigen_clusters, kernel, n_qubits_of, orthonormalize
from qcav.noise import COMPLETE_TOL, KrausFamily

__all__ = [
    "CodeSubspace",
    "CodeKind",
    "Violation",
    "GammaMatrix",
    "CodeClassification",
    "JointEigenspaceResult",
    "SearchReport",
    "gamma_matrix",
    "rank1_factor",
    "classify",
    "check_qeac_thm1",
    "check_qeac_thm2",
    "find_joint_eigenspace",
    "kl_residual",
    "search_random_code",
]

# a code is just a subspace with its logical basis
CodeSubspace = Subspace


class CodeKind(str, enum.Enum):
    NOT_CORRECTABLE = "not-correctable"
    NON_DEGENERATE = "non-degenerate-QECC"
    DEGENERATE = "degenerate-QECC"
    QEAC = "QEAC"


@dataclass(frozen=True)
class Violation:
    i: int
    j: int
    a: int
    b: int
    magnitude: float


@dataclass(frozen=True, eq=False)
class GammaMatrix:
    entries: np.ndarray
    eigenvalues: np.ndarray
    rank: int
    kl_satisfied: bool
    violation: Optional[Violation] = None


@dataclass(frozen=True, eq=False)
class CodeClassification:
    kind: CodeKind
    gamma: GammaMatrix
    qeac_eigenvalues: Optional[np.ndarray] = None


@dataclass(frozen=True, eq=False)
class JointEigenspaceResult:
    eigenvalue_tuple: Tuple[complex, ...]
    subspace: Subspace

    @property
    def dim(self) -> int:
        return self.subspace.dim


def _check_pair(code: Subspace, family: KrausFamily):
    if code.basis.shape[0] != family.dim:
        raise InvalidArgumentError(
            f"code lives on {code.n_qubits} qubits but the family on {family.n_qubits}")


def _overlaps(code: Subspace, family: KrausFamily) -> np.ndarray:
    # t[a, i, b, j] = <i| A_a^dag A_b |j>
    k, dim = code.dim, family.dim
    w = np.einsum("aij,jk->aik", family.stacked(), code.basis)  # A_a |k>
    flat = w.transpose(1, 0, 2).reshape(dim, len(family) * k)
    return (flat.conj().T @ flat).reshape(len(family), k, len(family), k)


def _rank(eigenvalues, tol):
    if eigenvalues.size == 0:
        return 0
    return int(np.sum(eigenvalues >= tol * max(1.0, float(eigenvalues.max()))))


def gamma_matrix(code: Subspace, family: KrausFamily, tol: float = DEFAULT_TOL) -> GammaMatrix:
    """Coefficients ``gamma_ab`` of ``<i|A_a^dag A_b|j> = gamma_ab delta_ij``.

    Violations are reported in the result rather than raised. The tolerance is
    applied relative to ``max(1, largest overlap)``. ``entries`` holds the
    basis-averaged diagonal blocks whether or not the condition holds.
    """
    _check_pair(code, family)
    k = code.dim
    kf = len(family)
    if k == 0 or kf == 0:
        empty = np.zeros((kf, kf), dtype=complex)
        return GammaMatrix(empty, np.zeros(kf), 0, True)
    t = _overlaps(code, family)
    scale = max(1.0, float(np.abs(t).max()))
    diag = np.einsum("aibi->iab", t)
    entries = diag.mean(axis=0)

    worst = Violation(0, 0, 0, 0, 0.0)
    if k > 1:
        off = t.copy()
        idx = np.arange(k)
        off[:, idx, :, idx] = 0
        pos = np.unravel_index(np.argmax(np.abs(off)), off.shape)
        worst = Violation(int(pos[1]), int(pos[3]), int(pos[0]), int(pos[2]), float(np.abs(off[pos])))
        spread = np.abs(diag - entries[None])
        pos = np.unravel_index(np.argmax(spread), spread.shape)
        if spread[pos] > worst.magnitude:
            worst = Violation(int(pos[0]), int(pos[0]), int(pos[1]), int(pos[2]), float(spread[pos]))
    ok = worst.magnitude <= tol * scale

    herm = (entries + entries.conj().T) / 2
    w = np.linalg.eigvalsh(herm)[::-1]
    w = np.where(w < 0, np.where(w > -1e-10 * scale, 0.0, w), w)
    if ok:
        entries = herm
        w = np.clip(w, 0.0, None)
    return GammaMatrix(entries, w, _rank(w, tol), ok, None if ok else worst)


def rank1_factor(entries: np.ndarray) -> Tuple[np.ndarray, float]:
    """Best ``g`` with ``entries[a, b] ~ conj(g_a) g_b``, phase-fixed so the
    first non-zero component is real positive; returns ``(g, max residual)``."""
    herm = (entries + entries.conj().T) / 2
    w, v = np.linalg.eigh(herm)
    lam = max(float(w[-1]), 0.0)
    g = np.sqrt(lam) * v[:, -1].conj()
    nz = np.flatnonzero(np.abs(g) > 1e-12 * max(1.0, np.abs(g).max(initial=0.0)))
    if nz.size:
        g = g * (abs(g[nz[0]]) / g[nz[0]])
    resid = float(np.abs(entries - np.outer(g.conj(), g)).max(initial=0.0))
    return g, resid


def classify(code: Subspace, family: KrausFamily, tol: float = DEFAULT_TOL) -> CodeClassification:
    """Sort a code into not-correctable, non-degenerate, degenerate or error-avoiding.

    Rank <= 1 (including the all-zero coefficient matrix) counts as error
    avoiding; the eigenvalues ``gamma_a`` are then read from the rank-one
    factorization.
    """
    gm = gamma_matrix(code, family, tol)
    if not gm.kl_satisfied:
        return CodeClassification(CodeKind.NOT_CORRECTABLE, gm)
    if gm.rank <= 1:
        g, _ = rank1_factor(gm.entries)
        return CodeClassification(CodeKind.QEAC, gm, g)
    if gm.rank == len(family):
        return CodeClassification(CodeKind.NON_DEGENERATE, gm)
    return CodeClassification(CodeKind.DEGENERATE, gm)


def check_qeac_thm1(code: Subspace, family: KrausFamily, tol: float = DEFAULT_TOL) -> Optional[np.ndarray]:
    """Co-eigenspace test: every operator must act on the code as a scalar.

    Returns the scalars ``gamma_a`` or None. For a complete family the scalars
    must also satisfy ``sum |gamma_a|^2 = 1``.
    """
    _check_pair(code, family)
    if code.dim == 0:
        return None
    b0 = code.basis[:, 0]
    ops = family.stacked()
    gammas = np.einsum("i,aij,j->a", b0.conj(), ops, b0)
    images = np.einsum("aij,jk->aik", ops, code.basis)
    resid = np.linalg.norm(images - gammas[:, None, None] * code.basis[None], axis=1)
    scales = np.maximum(1.0, np.linalg.norm(ops, ord=2, axis=(1, 2)))
    if np.any(resid > tol * scales[:, None]):
        return None
    if family.completeness_residual <= COMPLETE_TOL:
        if abs(np.sum(np.abs(gammas) ** 2) - 1.0) > tol:
            return None
    return gammas


def check_qeac_thm2(code: Subspace, family: KrausFamily, tol: float = DEFAULT_TOL) -> bool:
    """Factorization test: ``<i|A_a^dag A_b|j> = conj(g_a) g_b delta_ij`` for some g."""
    gm = gamma_matrix(code, family, tol)
    if not gm.kl_satisfied:
        return False
    if gm.entries.size == 0:
        return True
    _, resid = rank1_factor(gm.entries)
    scale = max(1.0, float(np.abs(gm.entries).max()))
    return resid <= tol * scale


def find_joint_eigenspace(operators: Sequence[np.ndarray], tol: float = DEFAULT_TOL) -> List[JointEigenspaceResult]:
    """All joint eigenspaces of ``operators``, largest first.

    Branch and intersect: start from the whole space; for each operator A and
    each surviving branch S (orthonormal basis Q), candidate eigenvalues come
    from the compression ``Q^dag A Q``. S need not be invariant under A, so the
    eigenvectors inside S are recomputed as the null space of ``(A - lam) Q``,
    which checks them against the full operator rather than its compression.
    """
    ops = [np.asarray(op, dtype=complex) for op in operators]
    if not ops:
        raise InvalidArgumentError("need at least one operator")
    dim = ops[0].shape[0]
    if any(op.shape != (dim, dim) for op in ops):
        raise InvalidArgumentError("operators must share one square shape")
    n = n_qubits_of(dim)
    eye = np.eye(dim, dtype=complex)

    branches = [((), eye)]
    for op in ops:
        scale = max(1.0, float(np.linalg.norm(op, 2)))
        grown = []
        for values, q in branches:
            compressed = q.conj().T @ op @ q
            for lam, _ in eigen_clusters(compressed, tol, ref=scale):
                # geometric eigenvectors of the full operator that lie in S
                coords = kernel((op - lam * eye) @ q, tol, ref=scale)
                if coords.shape[1] == 0:
                    continue
                sub = q @ coords
                resid = np.linalg.norm(op @ sub - lam * sub, axis=0).max()
                if resid > tol * scale * 10:
                    continue
                grown.append((values + (lam,), sub))
        branches = _merge(grown, tol)
        if not branches:
            return []

    results = []
    for values, q in branches:
        results.append(JointEigenspaceResult(tuple(complex(v) for v in values), Subspace(n, q)))
    results.sort(key=lambda r: (-r.dim, tuple((v.real, v.imag) for v in r.eigenvalue_tuple)))
    return results


def _merge(branches, tol):
    # branches whose eigenvalue tuples agree within tol are one co-eigenspace
    merged = []
    for values, q in branches:
        for k, (mv, mq) in enumerate(merged):
            if len(mv) == len(values) and all(abs(x - y) <= tol * max(1.0, abs(x)) for x, y in zip(mv, values)):
                stacked = np.hstack([mq, q])
                merged[k] = (mv, orthonormalize(stacked).basis)
                break
        else:
            merged.append((values, q))
    return merged


def kl_residual(frame: np.ndarray, ops: np.ndarray) -> Tuple[float, np.ndarray]:
    """Summed squared Knill-Laflamme violation of an orthonormal frame and its
    Euclidean gradient with respect to the frame.

    The violation is the traceless part of every ``k x k`` block of
    ``W^dag W`` where ``W = [A_1 B, ..., A_K B]``.
    """
    kf, dim, _ = ops.shape
    k = frame.shape[1]
    w = np.einsum("aij,jk->aik", ops, frame)
    flat = w.transpose(1, 0, 2).reshape(dim, kf * k)
    t = (flat.conj().T @ flat).reshape(kf, k, kf, k)
    d = t.copy()
    tr = np.einsum("aibi->ab", t) / k
    idx = np.arange(k)
    d[:, idx, :, idx] -= tr[None]
    r = float(np.sum(np.abs(d) ** 2))
    wd = (flat @ d.reshape(kf * k, kf * k)).reshape(dim, kf, k).transpose(1, 0, 2)
    grad = 4 * np.einsum("aji,ajk->ik", ops.conj(), wd)
    return r, grad


@dataclass
class SearchReport:
    found: bool
    code: Optional[Subspace]
    residual: float
    best_residual: float
    trials_run: int
    trials: int
    seed: int
    success_trial: Optional[int] = None
    history: List[float] = field(default_factory=list)


def _haar_frame(dim, k, rng):
    z = rng.standard_normal((dim, k)) + 1j * rng.standard_normal((dim, k))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def _retract(frame):
    q, r = np.linalg.qr(frame)
    d = np.diag(r)
    return q * (d / np.abs(d))


def _descend_frame(frame, ops, max_iter, stall):
    r, g = kl_residual(frame, ops)
    step = 1.0
    recent = [r]
    for _ in range(max_iter):
        # project onto the Stiefel tangent space at the frame
        sym = frame.conj().T @ g
        gt = g - frame @ ((sym + sym.conj().T) / 2)
        gnorm2 = float(np.sum(np.abs(gt) ** 2))
        if gnorm2 <= 1e-32 or r <= 1e-30:
            break
        while True:
            cand = _retract(frame - step * gt)
            rc, gc = kl_residual(cand, ops)
            if rc <= r - 1e-4 * step * gnorm2:
                break
            step *= 0.5
            if step < 1e-14:
                return frame, r
        frame, r, g = cand, rc, gc
        step = min(step * 2.0, 1e3)
        recent.append(r)
        if len(recent) > stall and recent[-stall - 1] - r <= 1e-6 * recent[-stall - 1]:
            break
    return frame, r


def _polish(frame, ops, iters=400):
    # Gauss-Newton on the residual blocks, finite-difference Jacobian in a
    # local chart frame + tangent perturbation, followed by retraction
    from scipy.optimize import least_squares

    dim, k = frame.shape

    def residual_vec(x):
        delta = (x[: dim * k] + 1j * x[dim * k:]).reshape(dim, k)
        f = _retract(frame + delta)
        kf = ops.shape[0]
        w = np.einsum("aij,jk->aik", ops, f)
        flat = w.transpose(1, 0, 2).reshape(dim, kf * k)
        t = (flat.conj().T @ flat).reshape(kf, k, kf, k)
        tr = np.einsum("aibi->ab", t) / k
        idx = np.arange(k)
        t[:, idx, :, idx] -= tr[None]
        return np.concatenate([t.real.ravel(), t.imag.ravel()])

    sol = least_squares(residual_vec, np.zeros(2 * dim * k), method="lm", xtol=1e-15, ftol=1e-15,
                        gtol=1e-15, max_nfev=iters * (2 * dim * k + 1))
    delta = (sol.x[: dim * k] + 1j * sol.x[dim * k:]).reshape(dim, k)
    polished = _retract(frame + delta)
    r, _ = kl_residual(polished, ops)
    return polished, r


def search_random_code(family: KrausFamily, code_dim: int, trials: int = 100, seed: int = 0,
                       tol: float = 1e-8, max_iter: int = 300, stall: int = 20,
                       polish_below: float = 0.05) -> SearchReport:
    """Randomized search for a ``code_dim``-dimensional code satisfying the
    Knill-Laflamme condition for ``family``.

    Trial t draws a Haar frame from ``default_rng([seed, t])``, runs Riemannian
    gradient descent on the summed violation, and when the violation gets
    below ``polish_below`` times the operator scale ``sum_a ||A_a||^2``
    finishes with a Levenberg-Marquardt polish. The
    reported residual is the square root of the summed squared violation; a
    trial succeeds when it is at most ``tol``. This is evidence only: failure
    to find a code does not prove that none exists.
    """
    dim = family.dim
    if not 1 <= code_dim <= dim:
        raise InvalidArgumentError(f"code dimension must be in 1..{dim}")
    if trials < 1:
        raise InvalidArgumentError("need at least one trial")
    ops = family.stacked()
    scale = float(sum(np.linalg.norm(a, 2) ** 2 for a in ops))
    gate = (polish_below * scale) ** 2
    best = np.inf
    best_frame = None
    history = []
    for t in range(trials):
        rng = np.random.default_rng([seed, t])
        frame = _haar_frame(dim, code_dim, rng)
        frame, r = _descend_frame(frame, ops, max_iter, stall)
        if tol**2 < r <= gate:
            polished, rp = _polish(frame, ops)
            if rp < r:
                frame, r = polished, rp
        res = float(np.sqrt(max(r, 0.0)))
        history.append(res)
        if res < best:
            best, best_frame = res, frame
        if res <= tol:
            code = Subspace(family.n_qubits, frame)
            return SearchReport(True, code, res, best, t + 1, trials, seed, t, history)
    return SearchReport(False, None, best, best, trials, trials, seed, None, history)
