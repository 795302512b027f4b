import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given
from hypothesis import strategies as st

from bhsim.errors import DomainError
from bhsim.fock_basis import Layout, build_basis
from bhsim.hamiltonian import (ChainParams, SourceDrainParams, build_chain_hamiltonian,
                               build_pinned_mu, build_ramp_mu,
                               build_source_drain_hamiltonian, number_operator_diagonal)


def ladder_ops(n_modes, cutoff):
    """Truncated b_i on the full product space, built from Kronecker products."""
    a = np.diag(np.sqrt(np.arange(1, cutoff + 1)), 1)
    eye = np.eye(cutoff + 1)
    ops = []
    for i in range(n_modes):
        mats = [a if j == i else eye for j in range(n_modes)]
        out = mats[0]
        for m in mats[1:]:
            out = np.kron(out, m)
        ops.append(out)
    return ops


def reference_hamiltonian(basis, terms):
    """Project a second-quantised operator onto the fixed-N sector via product-space indices."""
    n_modes, N = basis.mode_count, basis.total_excitations
    b = ladder_ops(n_modes, N)
    H = terms(b)
    idx = [int(np.ravel_multi_index(tuple(s), (N + 1,) * n_modes)) for s in basis.states]
    return H[np.ix_(idx, idx)]


def chain_terms(p: ChainParams):
    def terms(b):
        M = len(b)
        H = np.zeros_like(b[0])
        for i in range(M - 1):
            H += p.bond_couplings()[i] * (b[i + 1].T @ b[i] + b[i].T @ b[i + 1])
        for i in range(M):
            n = b[i].T @ b[i]
            H += 0.5 * p.U * n @ (n - np.eye(len(n))) + p.mu[i] * n
        return H
    return terms


params = st.builds(
    lambda M, N, U, mu, J: (M, N, ChainParams(J=J, U=U, mu=tuple(mu[:M]))),
    st.integers(1, 4), st.integers(0, 3), st.floats(-5, 5),
    st.lists(st.floats(-2, 2), min_size=4, max_size=4), st.floats(0.1, 2))


@given(params)
def test_chain_matches_second_quantised_reference(p):
    M, N, chain = p
    basis = build_basis(M, N)
    H = build_chain_hamiltonian(basis, chain)
    assert np.allclose(H.toarray(), reference_hamiltonian(basis, chain_terms(chain)))


def test_two_site_two_boson_by_hand():
    H = build_chain_hamiltonian(build_basis(2, 2), ChainParams.uniform(2, U=-3.0))
    r2 = np.sqrt(2)
    assert np.allclose(H.toarray(), [[-3, r2, 0], [r2, 0, r2], [0, r2, -3]])


@given(params)
def test_hermitian_and_real(p):
    M, N, chain = p
    H = build_chain_hamiltonian(build_basis(M, N), chain)
    dense = H.toarray()
    assert np.isrealobj(dense)
    assert np.array_equal(dense, dense.T)
    assert sp.issparse(H.matrix)


@given(params, st.floats(-10, 10))
def test_uniform_shift_covariance(p, shift):
    M, N, chain = p
    basis = build_basis(M, N)
    H0 = build_chain_hamiltonian(basis, chain)
    H1 = build_chain_hamiltonian(basis, chain.with_mu(np.asarray(chain.mu) + shift))
    assert np.allclose(H1.toarray(), H0.toarray() + shift * N * np.eye(basis.dimension))
    assert np.allclose(H0.shifted(shift * N).toarray(), H1.toarray())


def test_sparse_dot_matches_dense():
    basis = build_basis(6, 3)
    H = build_chain_hamiltonian(basis, ChainParams.uniform(6, U=-2.0))
    v = np.random.default_rng(0).normal(size=basis.dimension) + 0j
    assert np.allclose(H @ v, H.toarray() @ v)


def test_source_drain_matches_reference():
    chain = ChainParams.uniform(3, U=-4.0)
    sd = SourceDrainParams.from_detuning(-2.0, 0.3, 2)
    basis = build_basis(5, 2, Layout.SOURCE_CHAIN_DRAIN)

    def terms(b):
        S, D = b[0], b[-1]
        H = chain_terms(chain)(b[1:-1])
        H += sd.omega_r * (S.T @ S + D.T @ D)
        H += sd.Jprime * (S.T @ b[1] + b[1].T @ S + D.T @ b[3] + b[3].T @ D)
        return H

    H = build_source_drain_hamiltonian(basis, chain, sd)
    assert np.allclose(H.toarray(), reference_hamiltonian(basis, terms))


def test_potentials():
    assert np.allclose(build_pinned_mu(4, 1.0, 2, 0.5), [1, 0.5, 1, 1])
    assert np.allclose(build_ramp_mu(5, 0.0, 3, 2.0), [4, 2, 0, 0, 0])
    with pytest.raises(DomainError):
        build_pinned_mu(4, 0.0, 5, 1.0)


def test_params_validation():
    with pytest.raises(DomainError):
        ChainParams(J=-1.0, U=0.0, mu=(0.0, 0.0))
    with pytest.raises(DomainError):
        ChainParams(J=1.0, U=0.0, mu=(0.0, 0.0, 0.0), J_bonds=(1.0,))
    with pytest.raises(DomainError):
        SourceDrainParams(0.0, -0.1, 2)


def test_number_operator_diagonal():
    basis = build_basis(3, 2)
    assert np.allclose(number_operator_diagonal(basis), 2.0)
    assert np.allclose(number_operator_diagonal(basis, [0]), basis.states[:, 0])


def test_export_coo_roundtrip(tmp_path):
    H = build_chain_hamiltonian(build_basis(4, 2), ChainParams.uniform(4, U=-1.0))
    path = tmp_path / "h.coo"
    H.export_coo(path)
    header, *body = path.read_text().splitlines()
    n, m, nnz = map(int, header.lstrip("% ").split())
    rows = np.array([list(map(float, ln.split())) for ln in body])
    upper = sp.coo_matrix((rows[:, 2], (rows[:, 0].astype(int) - 1, rows[:, 1].astype(int) - 1)),
                          shape=(n, m)).toarray()
    assert np.all(rows[:, 0] <= rows[:, 1])
    assert np.allclose(upper + np.triu(upper, 1).T, H.toarray())
    assert nnz == len(rows)
