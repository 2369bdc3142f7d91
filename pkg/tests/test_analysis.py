import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qcav.analysis import (CodeKind, check_qeac_thm1, check_qeac_thm2, classify, find_joint_eigenspace, gamma_matrix,
                           kl_residual, search_random_code)
from qcav.codes import correlated_code, four_qubit_code
from qcav.errors import InvalidArgumentError
from qcav.hilbert import Subspace, ket
from qcav.noise import (KrausFamily, build_collective_model, build_correlated_swap_model, build_pairwise_model,
                        build_pauli_model, complete_family)

from conftest import perturbed_instance, random_qeac_instance

SINGLET = (ket("01") - ket("10")) / np.sqrt(2)


def paired_family(g=0.2, g0=0.9):
    # order: g0 I, A1+, A1-, A2+, A2-, A1z, A2z
    fam = build_pairwise_model(2, g).with_identity(g0)
    return fam.select(["A0", "A1+", "A1-", "A2+", "A2-", "A1z", "A2z"])


def test_gamma_matrix_four_qubit_code():
    g, g0 = 0.2, 0.9
    gm = gamma_matrix(four_qubit_code(), paired_family(g, g0))
    expected = np.diag([g0**2, g**2, g**2, g**2, g**2, 0, 0])
    assert gm.kl_satisfied
    assert np.abs(gm.entries - expected).max() <= 1e-12
    assert gm.rank == 5


def test_gamma_matrix_correlated_code_rank_one():
    gm = gamma_matrix(correlated_code(), complete_family(build_correlated_swap_model(0.4)))
    assert gm.kl_satisfied and gm.rank == 1
    assert np.allclose(gm.entries, np.diag([1, 0, 0]))


def test_gamma_matrix_violation_reported():
    fam = build_pairwise_model(1, (0.0, 0.0, 0.3)).select(["A1z"])
    gm = gamma_matrix(Subspace.from_kets(["00", "01"]), fam)
    assert not gm.kl_satisfied
    assert gm.violation is not None
    # diagonal is 0.36 on |00> and 0 on |01>: spread 0.18 about the mean
    assert gm.violation.magnitude == pytest.approx(0.18, rel=1e-12)


def test_classify_examples():
    assert classify(four_qubit_code(), paired_family()).kind == CodeKind.DEGENERATE
    res = classify(correlated_code(), complete_family(build_correlated_swap_model(0.4)))
    assert res.kind == CodeKind.QEAC
    assert np.allclose(res.qeac_eigenvalues, [1, 0, 0])
    res = classify(Subspace.from_kets(["01", "10"]), KrausFamily(2, (np.eye(4),)))
    assert res.kind == CodeKind.QEAC
    assert np.allclose(res.qeac_eigenvalues, [1])


def test_classify_non_degenerate():
    # a single bit flip on the 3-qubit repetition code: Gamma = diag(1, g^2) is full rank
    from qcav.noise import sigma
    code = Subspace.from_kets(["000", "111"])
    fam = KrausFamily(3, (np.eye(8), 0.3 * sigma("x", 1, 3)))
    res = classify(code, fam)
    assert res.kind == CodeKind.NON_DEGENERATE
    assert res.gamma.rank == 2


def test_classify_not_correctable():
    fam = build_pairwise_model(1, (0.0, 0.0, 0.3)).select(["A1z"])
    assert classify(Subspace.from_kets(["00", "01"]), fam).kind == CodeKind.NOT_CORRECTABLE


def test_dimension_mismatch_rejected():
    with pytest.raises(InvalidArgumentError):
        classify(correlated_code(), paired_family())


def test_thm1_examples():
    fam = complete_family(build_pairwise_model(1, 0.2))
    g = check_qeac_thm1(Subspace(2, SINGLET), fam)
    assert np.allclose(g, [1, 0, 0, 0])
    assert np.sum(np.abs(g) ** 2) == pytest.approx(1.0, abs=1e-12)
    assert check_qeac_thm1(four_qubit_code(), paired_family()) is None
    g = check_qeac_thm1(correlated_code(), complete_family(build_correlated_swap_model(0.4)))
    assert np.allclose(g, [1, 0, 0])


def test_thm2_examples():
    assert check_qeac_thm2(correlated_code(), complete_family(build_correlated_swap_model(0.4)))
    assert not check_qeac_thm2(four_qubit_code(), paired_family())
    assert not check_qeac_thm2(Subspace.from_kets(["0101"]), paired_family())


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.booleans())
def test_avoidance_checks_agree(seed, build_qeac):
    rng = np.random.default_rng(seed)
    if build_qeac:
        fam, code, g = random_qeac_instance(rng)
        gam = check_qeac_thm1(code, fam)
        assert gam is not None
        assert np.allclose(gam, g, atol=1e-9)
        assert check_qeac_thm2(code, fam)
    else:
        fam, code = perturbed_instance(rng)
        assert check_qeac_thm1(code, fam) is None
        assert not check_qeac_thm2(code, fam)


def test_joint_eigenspace_pairwise():
    res = find_joint_eigenspace(build_pairwise_model(2, 0.3).operators)
    assert len(res) == 1
    top = res[0]
    assert top.dim == 1
    expected = np.kron(SINGLET, SINGLET)
    assert abs(abs(np.vdot(expected, top.subspace.basis[:, 0])) - 1) < 1e-9
    assert np.allclose(top.eigenvalue_tuple, 0, atol=1e-9)


@pytest.mark.parametrize("n,dim", [(2, 1), (3, 0), (4, 2), (5, 0), (6, 5)])
def test_joint_eigenspace_collective(n, dim):
    res = find_joint_eigenspace(build_collective_model(n, 1, 1, 1).operators)
    best = max((r.dim for r in res), default=0)
    assert best == dim


def test_joint_eigenspace_correlated_swap():
    res = find_joint_eigenspace(build_correlated_swap_model(0.7).operators)
    assert res[0].dim == 2
    assert res[0].subspace.same_as(Subspace.from_kets(["00", "11"]))
    assert np.allclose(res[0].eigenvalue_tuple, [0, 0])


def test_joint_eigenspace_unchanged_by_identity():
    ops = build_pairwise_model(2, 0.3).operators
    a = find_joint_eigenspace(ops)
    b = find_joint_eigenspace((np.eye(16),) + ops)
    assert [r.dim for r in a] == [r.dim for r in b]
    assert a[0].subspace.same_as(b[0].subspace)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_joint_eigenspace_residuals(seed):
    rng = np.random.default_rng(seed)
    fam, code, _ = random_qeac_instance(rng)
    found = find_joint_eigenspace(fam.operators)
    assert found[0].dim >= code.dim
    for r in found:
        for lam, op in zip(r.eigenvalue_tuple, fam.operators):
            assert np.abs(op @ r.subspace.basis - lam * r.subspace.basis).max() < 1e-8


def test_kl_residual_gradient_matches_finite_difference(rng):
    ops = build_pairwise_model(1, 0.3).stacked()
    frame = np.linalg.qr(rng.standard_normal((4, 2)) + 1j * rng.standard_normal((4, 2)))[0]
    r, g = kl_residual(frame, ops)
    d = rng.standard_normal((4, 2)) + 1j * rng.standard_normal((4, 2))
    h = 1e-6
    rp, _ = kl_residual(frame + h * d, ops)
    rm, _ = kl_residual(frame - h * d, ops)
    assert (rp - rm) / (2 * h) == pytest.approx(np.real(np.vdot(g, d)), rel=1e-5)


def test_search_trivial_family():
    rep = search_random_code(KrausFamily(2, (np.eye(4),)), 2, trials=5, seed=11)
    assert rep.found and rep.success_trial == 0
    assert rep.residual <= 1e-8


def test_search_finds_pairwise_code():
    fam = build_pairwise_model(2, 0.2).with_identity(0.9)
    rep = search_random_code(fam, 2, trials=20, seed=1)
    assert rep.found
    assert gamma_matrix(rep.code, fam, 1e-7).kl_satisfied


def test_search_reports_failure_with_seed():
    rep = search_random_code(build_pauli_model(2), 2, trials=10, seed=5)
    assert not rep.found
    assert rep.code is None
    assert rep.best_residual > 1
    assert rep.seed == 5 and rep.trials_run == 10


def test_search_is_deterministic():
    fam = build_pairwise_model(1, 0.3)
    a = search_random_code(fam, 1, trials=3, seed=9)
    b = search_random_code(fam, 1, trials=3, seed=9)
    assert a.history == b.history


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_gamma_invariant_under_logical_basis_change(seed):
    rng = np.random.default_rng(seed)
    fam = build_pairwise_model(2, 0.2).with_identity(0.9)
    code = four_qubit_code()
    u = np.linalg.qr(rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2)))[0]
    rotated = Subspace(4, code.basis @ u)
    a, b = gamma_matrix(code, fam), gamma_matrix(rotated, fam)
    assert b.kl_satisfied
    assert np.abs(a.entries - b.entries).max() <= 1e-9


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_gamma_transforms_under_mixing(seed):
    from qcav.noise import random_unitary, transform_family
    rng = np.random.default_rng(seed)
    fam = complete_family(build_pairwise_model(2, 0.2))
    x = random_unitary(len(fam), rng)
    g = gamma_matrix(four_qubit_code(), fam).entries
    g_mixed = gamma_matrix(four_qubit_code(), transform_family(fam, x)).entries
    # B_b = sum_a x_ba A_a and gamma_ab pairs A_a^dag with A_b
    assert np.abs(g_mixed - x.conj() @ g @ x.T).max() <= 1e-9


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_qeac_eigenvalues_reproduce_gamma(seed):
    rng = np.random.default_rng(seed)
    fam, code, _ = random_qeac_instance(rng)
    res = classify(code, fam)
    assert res.kind == CodeKind.QEAC and res.gamma.rank <= 1
    g = res.qeac_eigenvalues
    assert np.abs(np.outer(g.conj(), g) - res.gamma.entries).max() <= 1e-8
