import numpy as np
import pytest

from bhsim.errors import DomainError
from bhsim.hamiltonian import ChainParams, SourceDrainParams
from bhsim.oracles import mu_band, resonant_sd_densities
from bhsim.protocols import (ProtocolSpec, prepare_pinned_soliton, resolve_mu_pin,
                             run_pin_release, run_ramp, run_repulsive_quench, run_source_drain,
                             run_stack_release)


def test_mirror_symmetry_of_central_release():
    res = run_pin_release(ChainParams.uniform(9, U=-3.0), 3, 5, t_max=5.0, dt=0.1)
    assert np.allclose(res.density, res.density[:, ::-1], atol=1e-10)


def test_mirror_maps_edge_pin_to_opposite_edge():
    chain = ChainParams.uniform(8, U=-2.0)
    left = run_pin_release(chain, 2, 2, t_max=4.0, dt=0.1)
    right = run_pin_release(chain, 2, 7, t_max=4.0, dt=0.1)
    assert np.allclose(left.density, right.density[:, ::-1], atol=1e-10)


def test_particle_number_and_energy_recorded():
    res = run_stack_release(ChainParams.uniform(7, U=-3.0), 2, 4, t_max=4.0, dt=0.1)
    assert np.allclose(res.scalars["N_chain"], 2.0)
    assert np.allclose(res.scalars["E"], res.scalars["E"][0], atol=1e-9)
    assert res.scalars["F_N"][0] == pytest.approx(1.0)
    assert res.scalars["R"][0] == 0.0


def test_stack_density_is_sign_independent():
    a = run_stack_release(ChainParams.uniform(9, U=-3.0), 3, 5, t_max=6.0, dt=0.1)
    b = run_stack_release(ChainParams.uniform(9, U=3.0), 3, 5, t_max=6.0, dt=0.1)
    assert np.max(np.abs(a.density - b.density)) < 1e-9


def test_pinned_soliton_peaks_at_pin():
    basis, e0, psi = prepare_pinned_soliton(ChainParams.uniform(11, U=-3.0), 3, 6, 5.0)
    occ = np.abs(psi.amplitudes) ** 2 @ basis.states
    assert np.argmax(occ) == 5
    assert 2.5 < occ[5] < 3.0


def test_pin_relative_to_chain_frequencies():
    flat = ChainParams.uniform(7, U=-2.0)
    lifted = ChainParams.uniform(7, U=-2.0, omega01=50.0)
    a = run_pin_release(flat, 2, 3, mu_pin=1.0, t_max=2.0, dt=0.1)
    b = run_pin_release(lifted, 2, 3, mu_pin=1.0, t_max=2.0, dt=0.1)
    assert np.allclose(a.density, b.density, atol=1e-9)


def test_resolve_mu_pin():
    assert resolve_mu_pin("band", -3.0, 3, 1.0) == mu_band(-3.0, 3)
    assert resolve_mu_pin(2, -3.0, 3, 1.0) == 2.0
    with pytest.raises(DomainError):
        resolve_mu_pin("strong", -3.0, 3, 1.0)


def test_repulsive_quench_requires_attractive_prep():
    chain = ChainParams.uniform(7, U=-3.0)
    with pytest.raises(DomainError):
        run_repulsive_quench(chain, 2, 4, U_prep=1.0, U_evolve=3.0)
    res = run_repulsive_quench(chain, 2, 4, U_prep=-3.0, U_evolve=3.0, t_max=1.0, dt=0.1)
    assert res.metadata["U_evolve"] == 3.0


def test_ramp_blocks_left_side():
    res = run_ramp(ChainParams.uniform(11, U=-3.0), 2, 6, mu_ramp=5.0, t_max=10.0, dt=0.1)
    left = res.density[:, :4].sum(axis=1)
    assert left.max() < 0.05


def test_source_drain_resonant_single_mode_limit():
    res = run_source_drain(ChainParams.uniform(3), SourceDrainParams.from_detuning(0.0, 0.02, 2),
                           t_max=200.0, dt=0.5)
    n_s, n_d, n_c = resonant_sd_densities(3, 0.02, 2, res.times)
    assert np.max(np.abs(res.scalars["n_S"] - n_s)) < 0.01
    assert np.max(np.abs(res.scalars["n_D"] - n_d)) < 0.01
    total = res.scalars["n_S"] + res.scalars["n_D"] + res.scalars["N_chain"]
    assert np.allclose(total, 2.0)
    classes = sum(res.scalars[k] for k in res.scalars if k.startswith("P_"))
    assert np.allclose(classes, 1.0)


def test_protocol_spec_dispatch():
    spec = ProtocolSpec("stack_release", 5, 2, 3, U=-1.0, t_max=1.0, dt=0.1)
    res = spec.run(spec.clean_chain())
    assert res.density.shape == (11, 5)
    with pytest.raises(DomainError):
        ProtocolSpec("teleport", 5, 2, 3).run(ChainParams.uniform(5))
    with pytest.raises(DomainError):
        spec.run(ChainParams.uniform(6))


def test_site_validation():
    chain = ChainParams.uniform(5, U=-1.0)
    with pytest.raises(DomainError):
        run_stack_release(chain, 2, 6)
    with pytest.raises(DomainError):
        run_pin_release(chain, 2, 0)
