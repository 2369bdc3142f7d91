import numpy as np
import pytest

from qcav.hilbert import Subspace, orthonormalize
from qcav.noise import KrausFamily, random_unitary

# one line per acceptance criterion, printed at the end of the session
ACCEPTANCE_LINES = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])


def random_qeac_instance(rng, n_qubits=None, code_dim=None, n_ops=None):
    """Complete family with a built-in error-avoiding code.

    With V = [C | C_perp] Haar random, A_a = V blockdiag(g_a I, R_a) V^dag
    where sum |g_a|^2 = 1 and the R_a are blocks of a random isometry, so the
    family is complete and every A_a acts on C as the scalar g_a.
    """
    n = n_qubits or int(rng.integers(1, 4))
    dim = 2**n
    k = code_dim or int(rng.integers(1, max(2, dim // 2 + 1)))
    m = n_ops or int(rng.integers(2, 5))
    v = random_unitary(dim, rng)
    g = rng.standard_normal(m) + 1j * rng.standard_normal(m)
    g /= np.linalg.norm(g)
    rest = dim - k
    iso = random_unitary(m * rest, rng)[:, :rest] if rest else np.zeros((0, 0))
    ops = []
    for a in range(m):
        block = np.zeros((dim, dim), dtype=complex)
        block[:k, :k] = g[a] * np.eye(k)
        if rest:
            block[k:, k:] = iso[a * rest:(a + 1) * rest]
        ops.append(v @ block @ v.conj().T)
    family = KrausFamily(n, tuple(ops))
    code = Subspace(n, v[:, :k])
    return family, code, g


def perturbed_instance(rng):
    """Same construction but the code is tilted away from the avoided subspace."""
    family, code, _ = random_qeac_instance(rng)
    dim = family.dim
    eps = rng.uniform(0.1, 0.3)
    noise = rng.standard_normal((dim, code.dim)) + 1j * rng.standard_normal((dim, code.dim))
    tilted = orthonormalize(code.basis + eps * noise)
    return family, tilted


def random_complete_family(rng, n_qubits, n_ops):
    dim = 2**n_qubits
    iso = random_unitary(n_ops * dim, rng)[:, :dim]
    return KrausFamily(n_qubits, tuple(iso[a * dim:(a + 1) * dim] for a in range(n_ops)))


def random_density(rng, dim, rank=None):
    rank = rank or dim
    x = rng.standard_normal((dim, rank)) + 1j * rng.standard_normal((dim, rank))
    rho = x @ x.conj().T
    return rho / np.trace(rho).real


def random_state(rng, dim):
    z = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return z / np.linalg.norm(z)


@pytest.fixture
def rng():
    return np.random.default_rng(20240531)
