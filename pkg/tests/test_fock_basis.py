import itertools
from math import comb

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bhsim.errors import DomainError, SizingError
from bhsim.fock_basis import (FockBasis, Layout, apply_hop, build_basis,
                              sector_dimension)


def brute_force_states(M, N):
    """Independent enumeration: filter the full product space, sort descending."""
    states = [s for s in itertools.product(range(N + 1), repeat=M) if sum(s) == N]
    return sorted(states, reverse=True)


small = st.tuples(st.integers(1, 6), st.integers(0, 5))


@given(small)
def test_basis_matches_brute_force(mn):
    M, N = mn
    b = build_basis(M, N)
    assert [tuple(s) for s in b.states] == brute_force_states(M, N)
    assert b.dimension == comb(N + M - 1, N) == sector_dimension(M, N)


@given(small)
def test_rank_and_hash_agree(mn):
    M, N = mn
    b = build_basis(M, N)
    ranks = b.rank(b.states)
    assert np.array_equal(ranks, np.arange(b.dimension))
    for k, s in enumerate(b.states):
        assert b.index_of(s, method="hash") == k == b.index_of(s)
        assert b.state_at(k) == tuple(s)


def test_known_small_sector():
    b = build_basis(2, 2)
    assert b.states.tolist() == [[2, 0], [1, 1], [0, 2]]


@pytest.mark.parametrize("M,N,dim", [(19, 3, 1330), (29, 3, 4495), (29, 2, 435), (6, 4, 126)])
def test_reference_dimensions(M, N, dim):
    assert sector_dimension(M, N) == dim


def test_states_are_read_only():
    b = build_basis(4, 2)
    with pytest.raises(ValueError):
        b.states[0, 0] = 7


def test_invalid_state_rejected():
    b = build_basis(3, 2)
    with pytest.raises(DomainError):
        b.index_of((1, 1, 1))
    with pytest.raises(DomainError):
        b.index_of((2, 0))
    with pytest.raises(DomainError):
        b.index_of((3, -1, 0))


def test_sizing_cap():
    with pytest.raises(SizingError):
        FockBasis(40, 6, max_dimension=1000)


def test_source_drain_layout_slices():
    b = build_basis(5, 2, Layout.SOURCE_CHAIN_DRAIN)
    assert b.chain_length == 3
    assert b.chain_slice == slice(1, 4)
    with pytest.raises(DomainError):
        build_basis(2, 1, Layout.SOURCE_CHAIN_DRAIN)


def test_stack_state():
    b = build_basis(4, 3)
    assert b.stack_state(2).tolist() == [0, 0, 3, 0]
    assert b.index_of(b.stack_state(0)) == 0


@given(st.lists(st.integers(0, 4), min_size=2, max_size=6), st.data())
def test_apply_hop_matrix_element(occ, data):
    src = data.draw(st.integers(0, len(occ) - 1))
    dst = data.draw(st.integers(0, len(occ) - 1).filter(lambda d: d != src))
    out = apply_hop(tuple(occ), src, dst)
    if occ[src] == 0:
        assert out is None
        return
    new, amp = out
    assert sum(new) == sum(occ)
    assert new[src] == occ[src] - 1 and new[dst] == occ[dst] + 1
    assert amp == pytest.approx(np.sqrt(occ[src] * (occ[dst] + 1)))
