"""End-to-end experiment recipes: prepare an initial state, quench, evolve, measure.

Quenches are instantaneous: the initial state is prepared with one operator
and propagated with another from t = 0.
"""

from __future__ import annotations

import time as _time
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional, Union

import numpy as np

from . import __version__
from .errors import DomainError
from .evolution import (DENSE_THRESHOLD, QuantumState, ground_state, iter_amplitudes,
                        time_grid)
from .fock_basis import Layout, build_basis
from .hamiltonian import (ChainParams, SourceDrainParams, SparseHamiltonian,
                          build_chain_hamiltonian, build_ramp_mu,
                          build_source_drain_hamiltonian)
from .observables import (STATE_CLASSES, TimeSeries, classify_chain_patterns,
                          r_squared, stack_subspace_indices, velocity_from_r2)
from .oracles import mu_band

DEFAULT_DT = 0.02
MuPin = Union[float, str]


@dataclass
class ProtocolResult:
    times: np.ndarray
    density: np.ndarray
    mode_labels: List[str]
    scalars: Dict[str, np.ndarray] = field(default_factory=dict)
    metadata: Dict = field(default_factory=dict)

    def series(self, name: str) -> TimeSeries:
        return TimeSeries(self.times, self.scalars[name], name=name)

    @property
    def chain_density(self) -> np.ndarray:
        """Columns of ``density`` that belong to chain sites (time x M)."""
        if self.mode_labels and self.mode_labels[0] == "S":
            return self.density[:, 1:-1]
        return self.density


def resolve_mu_pin(mu_pin: MuPin, U: float, N: int, J: float) -> float:
    if isinstance(mu_pin, str):
        if mu_pin != "band":
            raise DomainError(f"mu_pin must be a number or 'band', got {mu_pin!r}")
        return mu_band(U, N, J)
    return float(mu_pin)


def _record(H: SparseHamiltonian, psi0: QuantumState, times, *, method: str,
            dense_threshold: int, stack_N: Optional[int],
            pin_site: Optional[int] = None) -> ProtocolResult:
    basis = H.basis
    occ = basis.states.astype(float)
    dens_blocks, energy_blocks, fid_blocks, class_blocks = [], [], [], []
    stack_idx = stack_subspace_indices(basis, stack_N) if stack_N else None
    labels = classify_chain_patterns(basis) if basis.layout is Layout.SOURCE_CHAIN_DRAIN else None
    for block in iter_amplitudes(H, psi0, times, method=method, dense_threshold=dense_threshold):
        probs = np.abs(block) ** 2
        dens_blocks.append(probs @ occ)
        hpsi = (H.matrix @ block.T).T
        energy_blocks.append(np.einsum("ij,ij->i", block.conj(), hpsi).real)
        if stack_idx is not None:
            fid_blocks.append(probs[:, stack_idx].sum(axis=1))
        if labels is not None:
            class_blocks.append(np.stack([probs[:, labels == k].sum(axis=1)
                                          for k in range(len(STATE_CLASSES))], axis=1))
    density = np.concatenate(dens_blocks)
    scalars = {"E": np.concatenate(energy_blocks)}
    if basis.layout is Layout.SOURCE_CHAIN_DRAIN:
        M = basis.chain_length
        mode_labels = ["S"] + [str(i) for i in range(1, M + 1)] + ["D"]
        scalars["n_S"] = density[:, 0]
        scalars["n_D"] = density[:, -1]
        scalars["N_chain"] = density[:, 1:-1].sum(axis=1)
        if stack_idx is not None:
            scalars[f"F_{stack_N}"] = np.concatenate(fid_blocks)
        probs = np.concatenate(class_blocks)
        for k, name in enumerate(STATE_CLASSES):
            scalars[f"P_{name}"] = probs[:, k]
    else:
        mode_labels = [str(i) for i in range(1, basis.mode_count + 1)]
        scalars["N_chain"] = density.sum(axis=1)
        if pin_site is not None:
            r2 = r_squared(density, pin_site, basis.total_excitations)
            scalars["R"] = np.sqrt(np.clip(r2, 0.0, None))
            scalars["v"] = velocity_from_r2(times, r2).values if len(times) >= 3 else np.zeros(len(times))
        if stack_idx is not None:
            scalars["F_N"] = np.concatenate(fid_blocks)
    return ProtocolResult(np.asarray(times, dtype=float), density, mode_labels, scalars)


def _chain_basis(chain: ChainParams, N: int):
    if N < 1:
        raise DomainError("need at least one excitation")
    return build_basis(chain.M, N)


def _meta(protocol: str, started: float, **params) -> Dict:
    out = {"protocol": protocol, "version": __version__}
    for key, val in params.items():
        if hasattr(val, "__dataclass_fields__"):
            val = asdict(val)
        out[key] = val
    out["wall_time_s"] = _time.perf_counter() - started
    return out


def prepare_pinned_soliton(chain: ChainParams, N: int, pin_site: int, mu_pin: float,
                           dense_threshold: int = DENSE_THRESHOLD):
    """Ground state with site ``pin_site`` lowered by ``mu_pin`` relative to ``chain.mu``."""
    basis = _chain_basis(chain, N)
    if not 1 <= pin_site <= chain.M:
        raise DomainError(f"pin_site must lie in 1..{chain.M}")
    if mu_pin < 0:
        raise DomainError("mu_pin must be non-negative")
    mu = np.array(chain.mu)
    mu[pin_site - 1] -= mu_pin
    H_pin = build_chain_hamiltonian(basis, chain.with_mu(mu))
    energy, psi0 = ground_state(H_pin, dense_threshold=dense_threshold)
    return basis, energy, psi0


def run_pin_release(chain: ChainParams, N: int, pin_site: int, mu_pin: MuPin = "band",
                    t_max: float = 100.0, dt: float = DEFAULT_DT, method: str = "auto",
                    dense_threshold: int = DENSE_THRESHOLD,
                    U_evolve: Optional[float] = None) -> ProtocolResult:
    """Pin with a lowered site frequency, take the ground state, release the pin."""
    started = _time.perf_counter()
    mu_val = resolve_mu_pin(mu_pin, chain.U, N, chain.J)
    basis, e0, psi0 = prepare_pinned_soliton(chain, N, pin_site, mu_val, dense_threshold)
    evolve_chain = chain if U_evolve is None else chain.with_U(U_evolve)
    H = build_chain_hamiltonian(basis, evolve_chain)
    times = time_grid(t_max, dt)
    res = _record(H, psi0, times, method=method, dense_threshold=dense_threshold,
                  stack_N=N, pin_site=pin_site)
    res.metadata = _meta("pin_release", started, chain=chain, N=N, pin_site=pin_site,
                         mu_pin=mu_val, mu_pin_request=mu_pin, U_evolve=evolve_chain.U,
                         pinned_ground_energy=e0, t_max=t_max, dt=dt, dim=basis.dimension)
    return res


def run_stack_release(chain: ChainParams, N: int, site: int, t_max: float = 100.0,
                      dt: float = DEFAULT_DT, method: str = "auto",
                      dense_threshold: int = DENSE_THRESHOLD) -> ProtocolResult:
    """Release all N excitations from a single site."""
    started = _time.perf_counter()
    basis = _chain_basis(chain, N)
    if not 1 <= site <= chain.M:
        raise DomainError(f"site must lie in 1..{chain.M}")
    psi0 = QuantumState.fock(basis, basis.stack_state(site - 1))
    H = build_chain_hamiltonian(basis, chain)
    res = _record(H, psi0, time_grid(t_max, dt), method=method,
                  dense_threshold=dense_threshold, stack_N=N, pin_site=site)
    res.metadata = _meta("stack_release", started, chain=chain, N=N, site=site,
                         t_max=t_max, dt=dt, dim=basis.dimension)
    return res


def run_repulsive_quench(chain: ChainParams, N: int, pin_site: int, U_prep: float,
                         U_evolve: float, mu_pin: MuPin = "band", t_max: float = 100.0,
                         dt: float = DEFAULT_DT, method: str = "auto",
                         dense_threshold: int = DENSE_THRESHOLD) -> ProtocolResult:
    """Pinned ground state at attractive U_prep, evolved without pin at U_evolve."""
    if U_prep >= 0:
        raise DomainError("the preparation interaction must be attractive (U_prep < 0)")
    res = run_pin_release(chain.with_U(U_prep), N, pin_site, mu_pin, t_max, dt, method,
                          dense_threshold, U_evolve=U_evolve)
    res.metadata["protocol"] = "repulsive_quench"
    res.metadata["U_prep"] = U_prep
    return res


def run_ramp(chain: ChainParams, N: int, ramp_site: int, mu_ramp: float,
             mu_pin: MuPin = "band", t_max: float = 100.0, dt: float = DEFAULT_DT,
             method: str = "auto", dense_threshold: int = DENSE_THRESHOLD) -> ProtocolResult:
    """Pin at the base of a ramp, then remove the pin and keep the ramp."""
    started = _time.perf_counter()
    ramp = build_ramp_mu(chain.M, 0.0, ramp_site, mu_ramp)
    ramped = chain.with_mu(np.asarray(chain.mu) + ramp)
    mu_val = resolve_mu_pin(mu_pin, chain.U, N, chain.J)
    basis, e0, psi0 = prepare_pinned_soliton(ramped, N, ramp_site, mu_val, dense_threshold)
    H = build_chain_hamiltonian(basis, ramped)
    res = _record(H, psi0, time_grid(t_max, dt), method=method,
                  dense_threshold=dense_threshold, stack_N=N, pin_site=ramp_site)
    res.metadata = _meta("ramp", started, chain=chain, N=N, ramp_site=ramp_site,
                         mu_ramp=mu_ramp, mu_pin=mu_val, mu_pin_request=mu_pin,
                         pinned_ground_energy=e0, t_max=t_max, dt=dt, dim=basis.dimension)
    return res


def run_source_drain(chain: ChainParams, sd: SourceDrainParams, t_max: float = 100.0,
                     dt: float = DEFAULT_DT, method: str = "auto",
                     dense_threshold: int = DENSE_THRESHOLD,
                     stack_N: int = 2) -> ProtocolResult:
    """All excitations start in the source; the J' couplings are switched on at t = 0."""
    started = _time.perf_counter()
    if sd.total_excitations < 1:
        raise DomainError("source/drain transport needs at least one excitation")
    basis = build_basis(chain.M + 2, sd.total_excitations, Layout.SOURCE_CHAIN_DRAIN)
    psi0 = QuantumState.fock(basis, basis.stack_state(0))
    H = build_source_drain_hamiltonian(basis, chain, sd)
    stack_N = stack_N if stack_N <= sd.total_excitations else None
    res = _record(H, psi0, time_grid(t_max, dt), method=method,
                  dense_threshold=dense_threshold, stack_N=stack_N)
    res.metadata = _meta("source_drain", started, chain=chain, source_drain=sd,
                         delta=sd.delta, t_max=t_max, dt=dt, dim=basis.dimension)
    return res


@dataclass(frozen=True)
class ProtocolSpec:
    """A chain protocol described independently of its site frequencies.

    ``kind`` is one of ``pin_release``, ``stack_release`` or ``ramp``; ``site``
    is the pin, stack or ramp-base site.
    """

    kind: str
    M: int
    N: int
    site: int
    J: float = 1.0
    U: float = 0.0
    mu_pin: MuPin = "band"
    mu_ramp: float = 0.0
    t_max: float = 100.0
    dt: float = DEFAULT_DT

    def run(self, chain: ChainParams, method: str = "auto",
            dense_threshold: int = DENSE_THRESHOLD) -> ProtocolResult:
        if chain.M != self.M:
            raise DomainError("chain length does not match the protocol spec")
        if self.kind == "pin_release":
            return run_pin_release(chain, self.N, self.site, self.mu_pin, self.t_max,
                                   self.dt, method, dense_threshold)
        if self.kind == "stack_release":
            return run_stack_release(chain, self.N, self.site, self.t_max, self.dt,
                                     method, dense_threshold)
        if self.kind == "ramp":
            return run_ramp(chain, self.N, self.site, self.mu_ramp, self.mu_pin,
                            self.t_max, self.dt, method, dense_threshold)
        raise DomainError(f"unsupported protocol kind {self.kind!r}")

    def clean_chain(self, omega01: float = 0.0) -> ChainParams:
        return ChainParams.uniform(self.M, J=self.J, U=self.U, omega01=omega01)
