import numpy as np
import pytest
import scipy.linalg as sla
from hypothesis import given
from hypothesis import strategies as st
from scipy.sparse.linalg import expm_multiply

from bhsim.errors import DomainError, KrylovStepError
from bhsim.evolution import (KrylovPropagator, QuantumState, diagonalize, evolve,
                             expectation, ground_state, iter_amplitudes,
                             krylov_expm_step, time_grid)
from bhsim.fock_basis import build_basis
from bhsim.hamiltonian import ChainParams, build_chain_hamiltonian, number_operator_diagonal


def chain_H(M, N, U, J=1.0):
    basis = build_basis(M, N)
    return build_chain_hamiltonian(basis, ChainParams.uniform(M, J=J, U=U))


def random_state(basis, seed):
    rng = np.random.default_rng(seed)
    return QuantumState.from_vector(basis, rng.normal(size=basis.dimension)
                                    + 1j * rng.normal(size=basis.dimension))


@given(st.integers(2, 6), st.integers(1, 3), st.floats(-6, 6), st.integers(0, 2 ** 16))
def test_dense_path_matches_expm(M, N, U, seed):
    H = chain_H(M, N, U)
    psi0 = random_state(H.basis, seed)
    times = time_grid(2.0, 0.25)
    states = evolve(H, psi0, times, method="dense")
    ref = expm_multiply(-1j * H.matrix.tocsc(), psi0.amplitudes, start=0, stop=2.0,
                        num=len(times), endpoint=True)
    assert np.allclose([s.amplitudes for s in states], ref, atol=1e-10)


@given(st.integers(0, 2 ** 16), st.floats(0.01, 2.0))
def test_krylov_step_matches_expm(seed, tau):
    H = chain_H(7, 3, -2.0)
    v = random_state(H.basis, seed).amplitudes
    out, err, m = krylov_expm_step(H.matrix.dot, v, tau)
    exact = sla.expm(-1j * tau * H.toarray()) @ v
    assert np.linalg.norm(out - exact) < 1e-9
    assert err <= 1e-10


def test_dense_and_krylov_agree():
    H = chain_H(11, 3, -3.0)
    psi0 = QuantumState.fock(H.basis, H.basis.stack_state(5))
    times = time_grid(10.0, 0.05)
    a = np.concatenate(list(iter_amplitudes(H, psi0, times, method="dense")))
    b = np.concatenate(list(iter_amplitudes(H, psi0, times, method="krylov")))
    fid = np.abs(np.einsum("ij,ij->i", a.conj(), b)) ** 2
    assert fid.min() >= 1 - 1e-8


def test_norm_energy_number_conserved():
    H = chain_H(9, 3, -3.0)
    psi0 = random_state(H.basis, 3)
    nop = number_operator_diagonal(H.basis)
    e0 = expectation(psi0, H)
    for method in ("dense", "krylov"):
        for s in evolve(H, psi0, time_grid(5.0, 0.1), method=method):
            assert abs(s.norm() - 1) < 1e-10
            assert abs(expectation(s, H) - e0) < 1e-8
            assert abs(expectation(s, nop) - 3) < 1e-10


def test_time_reversal():
    H = chain_H(8, 2, -4.0)
    psi0 = random_state(H.basis, 1)
    t = time_grid(3.0, 0.1)
    fwd = evolve(H, psi0, t, method="krylov")[-1]
    back_H = H.shifted(0.0)
    back_H.matrix.data *= -1
    back = evolve(back_H, fwd, t, method="krylov")[-1]
    assert back.fidelity(psi0) > 1 - 1e-10


def test_ground_state_eigsh_matches_dense():
    H = chain_H(10, 3, -2.5)
    e_dense, g_dense = ground_state(H)
    e_lanczos, g_lanczos = ground_state(H, dense_threshold=10)
    assert e_lanczos == pytest.approx(e_dense, abs=1e-9)
    assert g_dense.fidelity(g_lanczos) > 1 - 1e-9
    k = np.argmax(np.abs(g_lanczos.amplitudes))
    assert g_lanczos.amplitudes[k].imag == 0 and g_lanczos.amplitudes[k].real > 0


def test_diagonalize_refuses_large():
    H = chain_H(10, 3, -1.0)
    with pytest.raises(DomainError):
        diagonalize(H, dense_threshold=50)


def test_state_validation():
    basis = build_basis(3, 1)
    with pytest.raises(DomainError):
        QuantumState(basis, np.array([1.0, 1.0, 0.0]))
    with pytest.raises(DomainError):
        QuantumState(basis, np.array([1.0, 0.0]))
    with pytest.raises(DomainError):
        QuantumState.from_vector(basis, np.zeros(3))
    other = build_basis(4, 1)
    with pytest.raises(DomainError):
        QuantumState.fock(basis, (1, 0, 0)).overlap(QuantumState.fock(other, (1, 0, 0, 0)))


def test_time_grid_validation():
    assert np.allclose(time_grid(1.0, 0.25), [0, 0.25, 0.5, 0.75, 1.0])
    with pytest.raises(DomainError):
        time_grid(1.0, 0.0)
    H = chain_H(3, 1, 0.0)
    psi = QuantumState.fock(H.basis, (1, 0, 0))
    with pytest.raises(DomainError):
        evolve(H, psi, [0.0, 0.1, 0.3])
    with pytest.raises(DomainError):
        evolve(H, psi, [0.1, 0.2])
    with pytest.raises(DomainError):
        evolve(H, psi, [0.0, 0.1], method="rk4")


def test_krylov_failure_is_reported():
    H = chain_H(8, 3, -3.0)
    psi = QuantumState.fock(H.basis, H.basis.stack_state(3)).amplitudes
    prop = KrylovPropagator(H, tol=1e-30, m_max=3, max_halvings=1)
    with pytest.raises(KrylovStepError) as exc:
        prop.step(psi, 1.0, step_index=7)
    assert exc.value.step == 7


def test_expectation_rejects_non_hermitian():
    basis = build_basis(2, 1)
    psi = QuantumState.from_vector(basis, [1.0, 1j])
    with pytest.raises(DomainError):
        expectation(psi, np.array([[0.0, 1.0], [0.0, 0.0]]))
