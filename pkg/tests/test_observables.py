import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bhsim.errors import DomainError
from bhsim.evolution import QuantumState, diagonalize
from bhsim.fock_basis import Layout, build_basis
from bhsim.hamiltonian import ChainParams, build_chain_hamiltonian
from bhsim.observables import (STATE_CLASSES, FitWindow, TimeSeries, classify_chain_patterns,
                               density_outside, expansion_velocity, fidelity_stack_subspace,
                               first_revival_time, project_state_classes, r_squared, rmsd,
                               site_densities, spectral_overlaps, stack_subspace_indices,
                               subspace_weight, velocity_from_r2, DensityProfile)

profiles = st.lists(st.floats(0, 3), min_size=3, max_size=20)


@given(profiles, st.integers(1, 3), st.integers(-5, 5))
def test_rmsd_translation_covariance(dens, N, shift):
    dens = np.array(dens)
    pad = 6
    base = np.concatenate([np.zeros(pad), dens, np.zeros(pad)])
    moved = np.roll(base, shift)
    pin = pad + len(dens) // 2 + 1
    assert rmsd(moved, pin + shift, N) == pytest.approx(rmsd(base, pin, N), abs=1e-9)


def test_r_squared_by_hand():
    assert r_squared([0, 1, 0, 1, 0], 3, 2) == pytest.approx((1 + 1) / 2)
    assert r_squared(DensityProfile(np.array([3.0, 0, 0])), 1, 3) == 0.0
    with pytest.raises(DomainError):
        r_squared([1.0], 1, 0)


def test_velocity_of_linear_spreading():
    t = np.linspace(0, 5, 101)
    r2 = 0.3 + (1.7 * t) ** 2
    v = velocity_from_r2(t, r2)
    assert np.allclose(v.values[1:-1], 1.7)
    with pytest.raises(DomainError):
        velocity_from_r2([0, 1, 3], [0, 1, 2])


def test_expansion_velocity_from_profiles():
    t = np.linspace(0, 2, 21)
    profiles = [DensityProfile(np.array([0.5 * tt ** 2, 1 - tt ** 2, 0.5 * tt ** 2]) / 1, tt)
                for tt in t / 3]
    v = expansion_velocity(profiles, 2, 1)
    assert v.values.shape == t.shape


def test_site_densities_sum_rule():
    basis = build_basis(5, 3, Layout.SOURCE_CHAIN_DRAIN)
    rng = np.random.default_rng(2)
    psi = QuantumState.from_vector(basis, rng.normal(size=basis.dimension))
    prof = site_densities(psi)
    assert prof.total == pytest.approx(3.0)
    assert prof.per_site.shape == (3,)


def test_stack_subspace():
    basis = build_basis(4, 3)
    idx = stack_subspace_indices(basis, 3)
    assert sorted(tuple(basis.states[i]) for i in idx) == sorted(
        [(3, 0, 0, 0), (0, 3, 0, 0), (0, 0, 3, 0), (0, 0, 0, 3)])
    psi = QuantumState.fock(basis, (0, 3, 0, 0))
    assert fidelity_stack_subspace(psi, 3) == 1.0
    assert fidelity_stack_subspace(QuantumState.fock(basis, (1, 2, 0, 0)), 3) == 0.0


def test_sd_stack_subspace_allows_resonator_split():
    basis = build_basis(5, 4, Layout.SOURCE_CHAIN_DRAIN)
    idx = stack_subspace_indices(basis, 2)
    states = {tuple(basis.states[i]) for i in idx}
    assert (1, 0, 2, 0, 1) in states and (2, 2, 0, 0, 0) in states
    assert (1, 1, 1, 0, 1) not in states


def test_state_classes_by_hand():
    basis = build_basis(5, 4, Layout.SOURCE_CHAIN_DRAIN)
    labels = classify_chain_patterns(basis)
    name = {tuple(s): STATE_CLASSES[k] for s, k in zip(basis.states, labels)}
    assert name[(4, 0, 0, 0, 0)] == "empty"
    assert name[(3, 1, 0, 0, 0)] == "single"
    assert name[(2, 1, 0, 1, 0)] == "singles"
    assert name[(1, 2, 1, 0, 0)] == "doublon_singles"
    # a lone doublon is a stack, not "doublon plus singles"
    assert name[(2, 0, 2, 0, 0)] == "other"
    psi = QuantumState.from_vector(basis, np.ones(basis.dimension))
    probs = project_state_classes(psi)
    assert sum(probs.values()) == pytest.approx(1.0)
    with pytest.raises(DomainError):
        project_state_classes(QuantumState.fock(build_basis(3, 1), (1, 0, 0)))


def test_spectral_overlaps_sum_to_one():
    H = build_chain_hamiltonian(build_basis(5, 2), ChainParams.uniform(5, U=-2.0))
    eig = diagonalize(H)
    phi = QuantumState.fock(H.basis, (0, 0, 2, 0, 0))
    assert spectral_overlaps(eig, phi).sum() == pytest.approx(1.0)


def test_subspace_weight_is_raw_sum():
    basis = build_basis(2, 1)
    a = QuantumState.fock(basis, (1, 0))
    # the same vector twice counts twice: no orthogonalisation
    assert subspace_weight([a, a], a) == pytest.approx(2.0)


def test_time_series_window_and_fit_window():
    ts = TimeSeries(np.arange(10.0), np.arange(10.0))
    assert ts.window(2, 5).times.tolist() == [3.0, 4.0]
    with pytest.raises(DomainError):
        FitWindow(3.0, 1.0)
    with pytest.raises(DomainError):
        TimeSeries([0, 1], [0])


def test_first_revival_of_cos_squared():
    t = np.linspace(0, 30, 3001)
    w = 0.4
    y = np.cos(w * t) ** 2 + 0.05 * np.cos(7 * t)
    tr = first_revival_time(t, y, smooth_period=2 * np.pi / 7)
    assert tr == pytest.approx(np.pi / w, rel=0.01)
    with pytest.raises(DomainError):
        first_revival_time(t, np.ones_like(t))


def test_density_outside():
    assert density_outside([1, 2, 3, 4, 5], 3, 1) == 1 + 5
    assert density_outside([1, 2, 3, 4, 5], 3, 2) == 0
