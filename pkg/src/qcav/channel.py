"""
Operator-sum evolution, state and code fidelities, and code efficiency.
"""
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from qcav.errors import IncompleteFamilyError, InvalidArgumentError
from qcav.hilbert import Subspace, n_qubits_of
from qcav.noise import KrausFamily

__all__ = [
    "FidelityResult",
    "OptimizerSettings",
    "check_density",
    "pure_density",
    "apply_channel",
    "state_fidelity",
    "code_fidelity",
    "efficiency",
]

APPLY_TOL = 1e-8


def _clamp(value: float) -> float:
    return min(1.0, max(0.0, float(value)))


def check_density(rho, n_qubits: Optional[int] = None) -> np.ndarray:
    """Validate a density matrix: Hermitian and unit trace within 1e-10, PSD within 1e-8."""
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise InvalidArgumentError(f"density matrix must be square, got {rho.shape}")
    n = n_qubits_of(rho.shape[0])
    if n_qubits is not None and n != n_qubits:
        raise InvalidArgumentError(f"density matrix is on {n} qubits, expected {n_qubits}")
    if np.abs(rho - rho.conj().T).max() > 1e-10:
        raise InvalidArgumentError("density matrix is not Hermitian")
    if abs(np.trace(rho) - 1) > 1e-10:
        raise InvalidArgumentError(f"density matrix trace is {np.trace(rho).real:.12g}")
    if np.linalg.eigvalsh(rho).min() < -1e-8:
        raise InvalidArgumentError("density matrix is not positive semidefinite")
    return rho


def pure_density(psi) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    return np.outer(psi, psi.conj())


def apply_channel(family: KrausFamily, rho) -> np.ndarray:
    """``sum_a A_a rho A_a^dag``; refuses families that are not trace preserving."""
    if family.completeness_residual > APPLY_TOL:
        raise IncompleteFamilyError(
            f"family is not complete (residual {family.completeness_residual:.3e})",
            family.completeness_residual)
    rho = check_density(rho, family.n_qubits)
    ops = family.stacked()
    out = np.einsum("aij,jk,alk->il", ops, rho, ops.conj())
    return (out + out.conj().T) / 2


def state_fidelity(psi, family: KrausFamily) -> float:
    """Input-output fidelity ``sum_a |<psi|A_a|psi>|^2`` of a pure state."""
    psi = np.asarray(psi, dtype=complex)
    if psi.shape != (family.dim,):
        raise InvalidArgumentError(f"state length {psi.shape} does not match family dimension {family.dim}")
    if abs(np.linalg.norm(psi) - 1) > 1e-10:
        raise InvalidArgumentError("state must be normalized")
    amps = np.einsum("i,aij,j->a", psi.conj(), family.stacked(), psi)
    return _clamp(np.sum(np.abs(amps) ** 2))


@dataclass(frozen=True)
class OptimizerSettings:
    """Multistart projected gradient descent on the unit sphere of the code."""

    starts: int = 32
    max_iter: int = 500
    grad_tol: float = 1e-10
    grid: int = 64
    seed: int = 0


@dataclass(frozen=True, eq=False)
class FidelityResult:
    value: float
    argmin_state: np.ndarray
    iterations: int
    converged: bool
    starts: int = 0


def _fix_phase(z):
    nz = np.flatnonzero(np.abs(z) > 1e-12)
    if nz.size:
        z = z * (abs(z[nz[0]]) / z[nz[0]])
    return z


class _Objective:
    """f(z) = sum_a |z^dag M_a z|^2 on compressed operators M_a = B^dag A_a B."""

    def __init__(self, compressed):
        self.m = compressed
        self.mh = compressed.conj().transpose(0, 2, 1)

    def value(self, z):
        q = np.einsum("i,aij,j->a", z.conj(), self.m, z)
        return float(np.sum(np.abs(q) ** 2))

    def batch_values(self, zs):
        q = np.einsum("ni,aij,nj->na", zs.conj(), self.m, zs)
        return np.sum(np.abs(q) ** 2, axis=1)

    def value_and_grad(self, z):
        mz = self.m @ z
        q = mz @ z.conj()
        # Wirtinger derivative d f / d conj(z); the real gradient is twice this
        g = q.conj() @ mz + q @ (self.mh @ z)
        return float(np.real(np.vdot(q, q))), 2 * g


def _descend(obj: _Objective, z, settings: OptimizerSettings):
    # Armijo backtracking from a Barzilai-Borwein trial step
    f, g = obj.value_and_grad(z)
    gt = g - z * np.vdot(z, g)
    step = 0.1
    for it in range(settings.max_iter):
        gnorm = np.linalg.norm(gt)
        if gnorm <= settings.grad_tol:
            return f, z, it, True
        while True:
            cand = z - step * gt
            cand /= np.linalg.norm(cand)
            fc, gc = obj.value_and_grad(cand)
            if fc <= f - 1e-4 * step * gnorm**2:
                break
            step *= 0.5
            if step < 1e-16:
                # no descent left at working precision: stationary up to rounding
                return f, z, it, bool(gnorm <= 1e-7)
        gtc = gc - cand * np.vdot(cand, gc)
        s, y = cand - z, gtc - gt
        sy = float(np.real(np.vdot(s, y)))
        bb = float(np.real(np.vdot(s, s))) / sy if sy > 1e-300 else 1.0
        # limit growth: large BB steps overshoot on the sphere and just backtrack
        step = min(max(bb, 1e-8), 4 * step, 1e3)
        z, f, g, gt = cand, fc, gc, gtc
    return f, z, settings.max_iter, bool(np.linalg.norm(gt) <= settings.grad_tol)


def code_fidelity(code: Subspace, family: KrausFamily,
                  opts: Optional[OptimizerSettings] = None) -> FidelityResult:
    """Worst-case fidelity ``min_{psi in code} sum_a |<psi|A_a|psi>|^2``.

    The minimum is searched by projected gradient descent from the code basis
    vectors, ``opts.starts`` random unit vectors and, for two-dimensional
    codes, the best point of a (theta, phi) grid. Ties between starts resolve
    to the lowest start index, so results are deterministic for a given seed.
    """
    opts = opts or OptimizerSettings()
    if code.dim < 1:
        raise InvalidArgumentError("code must have dimension >= 1")
    if code.basis.shape[0] != family.dim:
        raise InvalidArgumentError("code and family act on different spaces")
    basis = code.basis
    if code.dim == 1:
        psi = _fix_phase(basis[:, 0])
        return FidelityResult(state_fidelity(psi, family), psi, 0, True, 1)

    compressed = np.einsum("ji,ajk,kl->ail", basis.conj(), family.stacked(), basis)
    obj = _Objective(compressed)
    k = code.dim
    rng = np.random.default_rng(opts.seed)

    starts = [np.eye(k, dtype=complex)[j] for j in range(k)]
    for _ in range(opts.starts):
        z = rng.standard_normal(k) + 1j * rng.standard_normal(k)
        starts.append(z / np.linalg.norm(z))
    if k == 2 and opts.grid > 0:
        theta = np.linspace(0, np.pi, opts.grid)
        phi = np.linspace(0, 2 * np.pi, opts.grid, endpoint=False)
        t, p = np.meshgrid(theta, phi, indexing="ij")
        zs = np.stack([np.cos(t / 2).ravel(), (np.exp(1j * p) * np.sin(t / 2)).ravel()], axis=1)
        starts.append(zs[int(np.argmin(obj.batch_values(zs)))])

    best = None
    total_iter = 0
    for index, z0 in enumerate(starts):
        f, z, iters, conv = _descend(obj, z0, opts)
        total_iter += iters
        if best is None or f < best[0]:
            best = (f, z, conv)
    f, z, conv = best
    psi = _fix_phase(basis @ z)
    psi = psi / np.linalg.norm(psi)
    return FidelityResult(_clamp(f), psi, total_iter, conv, len(starts))


def efficiency(code_dim: int, n_qubits: int) -> float:
    """``log2(code_dim) / n_qubits``."""
    if code_dim < 1:
        raise InvalidArgumentError("code dimension must be >= 1")
    if n_qubits < 1:
        raise InvalidArgumentError("need at least one qubit")
    if code_dim > 2**n_qubits:
        raise InvalidArgumentError(f"code dimension {code_dim} exceeds 2**{n_qubits}")
    return math.log2(code_dim) / n_qubits
