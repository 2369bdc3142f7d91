import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qcav.errors import InvalidArgumentError, NotPSDError, NumericalError, ResourceLimitError
from qcav.hilbert import (Subspace, basis_state, eigen_clusters, eigs_general, kernel, ket, max_qubits,
                          n_qubits_of, normalize, orthonormalize, principal_sqrt_psd, subspace_intersect,
                          tensor_product, unitary_completion)
from qcav.noise import sigma

from conftest import random_state


def test_ket_ordering_qubit_one_is_most_significant():
    assert np.argmax(np.abs(ket("0101"))) == 0b0101
    assert np.allclose(basis_state(5, 4), ket("0101"))
    with pytest.raises(InvalidArgumentError):
        ket("012")


def test_n_qubits_of_rejects_non_powers():
    assert n_qubits_of(8) == 3
    with pytest.raises(InvalidArgumentError):
        n_qubits_of(6)


def test_tensor_product_of_basis_states():
    out = tensor_product([ket("0"), ket("1"), ket("1")])
    assert np.allclose(out, ket("011"))


def test_tensor_product_operators_and_mixed_rejected():
    x = np.array([[0, 1], [1, 0]])
    op = tensor_product([x, np.eye(2)])
    assert np.allclose(op @ ket("00"), ket("10"))
    with pytest.raises(InvalidArgumentError):
        tensor_product([x, ket("0")])
    with pytest.raises(InvalidArgumentError):
        tensor_product([])


def test_qubit_cap_respects_environment(monkeypatch):
    monkeypatch.setenv("QCAV_MAX_QUBITS", "3")
    assert max_qubits() == 3
    with pytest.raises(ResourceLimitError):
        tensor_product([ket("0")] * 4)
    monkeypatch.setenv("QCAV_MAX_QUBITS", "nonsense")
    with pytest.raises(InvalidArgumentError):
        max_qubits()


def test_normalize_zero_vector():
    with pytest.raises(InvalidArgumentError):
        normalize(np.zeros(2))


def test_kernel_of_rank_deficient_matrix(rng):
    a = rng.standard_normal((4, 2)) @ rng.standard_normal((2, 4))
    k = kernel(a)
    assert k.shape == (4, 2)
    assert np.abs(a @ k).max() < 1e-10
    assert np.allclose(k.conj().T @ k, np.eye(2))


def test_eigs_general_on_non_normal_operator():
    # upper triangular with a repeated eigenvalue: only a 1-dim eigenspace for 1
    op = np.array([[1, 1, 0, 0], [0, 1, 0, 0], [0, 0, 2, 0], [0, 0, 0, 2]], dtype=complex)
    res = dict((round(v.real), s.dim) for v, s in eigs_general(op))
    assert res == {1: 1, 2: 2}


def test_eigen_clusters_hermitian_degenerate(rng):
    u = np.linalg.qr(rng.standard_normal((6, 6)))[0]
    op = u @ np.diag([3, 3, 3, -1, -1, 0.5]) @ u.T
    clusters = eigen_clusters(op)
    dims = [c[1].shape[1] for c in clusters]
    assert dims == [3, 2, 1]
    for lam, vecs in clusters:
        assert np.abs(op @ vecs - lam * vecs).max() < 1e-9


def test_principal_sqrt_psd():
    a = np.diag([4.0, 1.0, 0.0, 0.25]).astype(complex)
    s = principal_sqrt_psd(a)
    assert np.allclose(s @ s, a)
    with pytest.raises(NotPSDError):
        principal_sqrt_psd(np.diag([1.0, -0.1]))
    assert issubclass(NotPSDError, NumericalError)


def test_orthonormalize_drops_dependent_vectors():
    s = orthonormalize([ket("00"), ket("00") + ket("01"), 2 * ket("01")])
    assert s.dim == 2
    assert np.allclose(s.basis.conj().T @ s.basis, np.eye(2))


def test_unitary_completion_fixed_cases():
    assert np.allclose(unitary_completion([1, 0, 0]), np.eye(3))
    assert np.allclose(unitary_completion([0, 1]), [[0, 1], [1, 0]])


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 6), st.integers(0, 2**32 - 1))
def test_unitary_completion_property(size, seed):
    row = random_state(np.random.default_rng(seed), size)
    u = unitary_completion(row)
    assert np.allclose(u[0], row, atol=1e-12)
    assert np.abs(u @ u.conj().T - np.eye(size)).max() < 1e-10


def test_subspace_intersection():
    a = Subspace.from_kets(["00", "01"])
    b = orthonormalize([ket("01"), ket("10") + ket("11")])
    c = subspace_intersect(a, b)
    assert c.dim == 1
    assert c.same_as(Subspace.from_kets(["01"]))
    assert subspace_intersect(a, Subspace.from_kets(["11"])).dim == 0


def test_subspace_is_read_only_and_checks_shape():
    s = Subspace.full(1)
    with pytest.raises(ValueError):
        s.basis[0, 0] = 2
    with pytest.raises(InvalidArgumentError):
        Subspace(2, np.eye(2))


def test_kronecker_example():
    z = np.diag([1.0, -1.0])
    assert np.allclose(tensor_product([z, np.eye(2)]), np.diag([1, 1, -1, -1]))
    assert np.allclose(tensor_product([ket("0"), ket("1")]), basis_state(1, 2))
    assert np.allclose(tensor_product([np.eye(2)] * 3), np.eye(8))


def test_eigs_general_examples():
    assert [(round(v.real), s.dim) for v, s in eigs_general(np.eye(4))] == [(1, 4)]
    vals = sorted(round(v.real) for v, s in eigs_general(np.diag([1.0, -1.0])))
    assert vals == [-1, 1]
    res = eigs_general(np.array([[0, 0], [1, 0]], dtype=complex))
    assert [(abs(v) < 1e-12, s.dim) for v, s in res] == [(True, 1)]


def test_kernel_examples():
    k = kernel(sigma("plus", 1, 2) + sigma("plus", 2, 2))
    span = Subspace(2, k)
    assert span.dim == 2
    assert span.contains(ket("11"))
    assert span.contains((ket("01") - ket("10")) / np.sqrt(2))
    assert kernel(np.eye(4)).shape[1] == 0
    k = Subspace(2, kernel(sigma("plus", 1, 2) @ sigma("minus", 2, 2)))
    assert k.same_as(Subspace.from_kets(["00", "10", "11"]))


def test_principal_sqrt_examples():
    assert np.allclose(principal_sqrt_psd(np.diag([1, 0.64])), np.diag([1, 0.8]))
    assert np.allclose(principal_sqrt_psd(np.eye(3)), np.eye(3))
    assert np.allclose(principal_sqrt_psd(np.diag([0.64, 1, 1, 0.64])), np.diag([0.8, 1, 1, 0.8]))


def test_unitary_completion_balanced_row():
    u = unitary_completion([1 / np.sqrt(2), 1 / np.sqrt(2)])
    assert np.allclose(u @ u.conj().T, np.eye(2))
    assert np.allclose(u[0], [1 / np.sqrt(2)] * 2)


def test_intersection_examples():
    a = Subspace(2, kernel(sigma("plus", 1, 2) @ sigma("minus", 2, 2)))
    b = Subspace(2, kernel(sigma("plus", 2, 2) @ sigma("minus", 1, 2)))
    assert subspace_intersect(a, b).same_as(Subspace.from_kets(["00", "11"]))
    assert subspace_intersect(a, a).same_as(a)
    assert subspace_intersect(Subspace.from_kets(["0"]), Subspace.from_kets(["1"])).dim == 0


def test_orthonormalize_examples():
    s = orthonormalize([ket("00"), ket("00") + ket("11")])
    assert s.same_as(Subspace.from_kets(["00", "11"]))
    v = (ket("0") + 1j * ket("1")) / np.sqrt(2)
    assert np.allclose(orthonormalize([v]).basis[:, 0], v)
    assert orthonormalize([v, 2 * v]).dim == 1
