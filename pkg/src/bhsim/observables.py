"""Measured quantities: site densities, RMS width, expansion velocity, projectors."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence, Union

import numpy as np
from scipy.ndimage import uniform_filter1d

from .errors import DomainError
from .evolution import EigenDecomposition, QuantumState, _same_basis
from .fock_basis import FockBasis, Layout

STATE_CLASSES = ("empty", "single", "singles", "doublon_singles", "other")


@dataclass
class DensityProfile:
    per_site: np.ndarray
    time: float = 0.0
    n_S: Optional[float] = None
    n_D: Optional[float] = None

    @property
    def total(self) -> float:
        extra = (self.n_S or 0.0) + (self.n_D or 0.0)
        return float(self.per_site.sum() + extra)


@dataclass
class TimeSeries:
    times: np.ndarray
    values: np.ndarray
    name: str = ""
    meta: Dict = field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.times.shape != self.values.shape:
            raise DomainError("times and values must have the same shape")

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0]) if self.times.size > 1 else 0.0

    def window(self, t_lo: float, t_hi: float) -> "TimeSeries":
        mask = (self.times > t_lo) & (self.times < t_hi)
        return TimeSeries(self.times[mask], self.values[mask], self.name, dict(self.meta))


@dataclass(frozen=True)
class FitWindow:
    t_eps: float
    t_star: float

    def __post_init__(self):
        if not 0 <= self.t_eps < self.t_star:
            raise DomainError(f"need 0 <= t_eps < t_star, got ({self.t_eps}, {self.t_star})")


def mode_densities(basis: FockBasis, amplitudes: np.ndarray) -> np.ndarray:
    """<n_mode> for every mode; ``amplitudes`` may be one vector or a (T, dim) block."""
    probs = np.abs(amplitudes) ** 2
    return probs @ basis.states.astype(float)


def site_densities(state: QuantumState, time: float = 0.0) -> DensityProfile:
    basis = state.basis
    occ = mode_densities(basis, state.amplitudes)
    if basis.layout is Layout.SOURCE_CHAIN_DRAIN:
        return DensityProfile(occ[1:-1], time, n_S=float(occ[0]), n_D=float(occ[-1]))
    return DensityProfile(occ, time)


def _profile_array(profile) -> np.ndarray:
    if isinstance(profile, DensityProfile):
        return np.asarray(profile.per_site, dtype=float)
    return np.asarray(profile, dtype=float)


def r_squared(profile, pin_site: int, N: int) -> Union[float, np.ndarray]:
    """(1/N) sum_i <n_i> (i - pin_site)^2 with 1-based sites; vectorised over leading axes."""
    if N <= 0:
        raise DomainError("N must be positive")
    dens = _profile_array(profile)
    sites = np.arange(1, dens.shape[-1] + 1)
    out = dens @ ((sites - pin_site) ** 2.0) / N
    return float(out) if np.ndim(out) == 0 else out


def rmsd(profile, pin_site: int, N: int) -> Union[float, np.ndarray]:
    return np.sqrt(np.clip(r_squared(profile, pin_site, N), 0.0, None))


def velocity_from_r2(times, r2) -> TimeSeries:
    """d/dt sqrt(R^2(t) - R^2(0)) by finite differences (central inside, one-sided at ends)."""
    times = np.asarray(times, dtype=float)
    r2 = np.asarray(r2, dtype=float)
    if times.size < 3:
        raise DomainError("expansion velocity needs at least 3 samples")
    steps = np.diff(times)
    dt = steps.mean()
    if dt <= 0 or np.max(np.abs(steps - dt)) > 1e-9 * max(1.0, dt):
        raise DomainError("expansion velocity needs a uniform ascending time grid")
    spread = np.sqrt(np.clip(r2 - r2[0], 0.0, None))
    return TimeSeries(times, np.gradient(spread, dt), name="v")


def expansion_velocity(series: Sequence[DensityProfile], pin_site: int, N: int,
                       times=None) -> TimeSeries:
    if times is None:
        times = [p.time for p in series]
    dens = np.array([_profile_array(p) for p in series])
    return velocity_from_r2(times, r_squared(dens, pin_site, N))


_index_cache: Dict[tuple, np.ndarray] = {}


def stack_subspace_indices(basis: FockBasis, N: int) -> np.ndarray:
    """Indices of states with N excitations on one chain site and none elsewhere in the chain.

    For the source/drain layout the remaining excitations sit in the resonators
    in any split.
    """
    key = (basis.mode_count, basis.total_excitations, basis.layout, N)
    if key not in _index_cache:
        chain = basis.states[:, basis.chain_slice]
        mask = (chain.max(axis=1) == N) & (chain.sum(axis=1) == N) if N > 0 else chain.sum(axis=1) == 0
        _index_cache[key] = np.nonzero(mask)[0]
    return _index_cache[key]


def fidelity_stack_subspace(state: QuantumState, N: int) -> float:
    idx = stack_subspace_indices(state.basis, N)
    return float(np.sum(np.abs(state.amplitudes[idx]) ** 2))


def classify_chain_patterns(basis: FockBasis) -> np.ndarray:
    """Class label (index into STATE_CLASSES) of every basis state's chain pattern."""
    chain = basis.states[:, basis.chain_slice]
    total = chain.sum(axis=1)
    peak = chain.max(axis=1) if chain.shape[1] else np.zeros(len(chain), dtype=int)
    n_doublons = (chain == 2).sum(axis=1)
    n_singles = (chain == 1).sum(axis=1)
    labels = np.full(len(chain), STATE_CLASSES.index("other"))
    labels[total == 0] = STATE_CLASSES.index("empty")
    labels[total == 1] = STATE_CLASSES.index("single")
    labels[(total >= 2) & (peak == 1)] = STATE_CLASSES.index("singles")
    labels[(peak == 2) & (n_doublons == 1) & (n_singles >= 1)] = STATE_CLASSES.index("doublon_singles")
    return labels


def project_state_classes(state: QuantumState) -> Dict[str, float]:
    """Probability of each chain-occupation class (source/drain layout)."""
    if state.basis.layout is not Layout.SOURCE_CHAIN_DRAIN:
        raise DomainError("state classes are defined for the source/chain/drain layout")
    labels = classify_chain_patterns(state.basis)
    probs = np.bincount(labels, weights=np.abs(state.amplitudes) ** 2,
                        minlength=len(STATE_CLASSES))
    return {name: float(p) for name, p in zip(STATE_CLASSES, probs)}


def spectral_overlaps(eig: EigenDecomposition, phi: QuantumState) -> np.ndarray:
    """|<psi_n|phi>|^2 for every eigenvector psi_n."""
    if eig.basis is not None:
        _same_basis(eig.basis, phi.basis)
    if eig.eigenvectors.shape[0] != phi.amplitudes.size:
        raise DomainError("eigenvectors and state live in different spaces")
    return np.abs(eig.eigenvectors.conj().T @ phi.amplitudes) ** 2


def subspace_weight(phi_list: Sequence[QuantumState], target: QuantumState) -> float:
    """Raw sum of |<phi_j|target>|^2; the phi_j are not orthogonalised."""
    total = 0.0
    for phi in phi_list:
        total += abs(phi.overlap(target)) ** 2
    return float(total)


def first_revival_time(times, values, smooth_period: float = 0.0) -> float:
    """Time of the first return of ``values`` towards its initial value.

    The signal is first smoothed with a running mean over ``smooth_period``
    to suppress fast beating. The revival is the maximum of the smoothed
    signal after it first falls below half its initial value and before it
    crosses back down through that level.
    """
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    if times.size < 3:
        raise DomainError("need at least 3 samples")
    dt = times[1] - times[0]
    width = max(1, int(round(smooth_period / dt)))
    if width > 1:
        values = uniform_filter1d(values, width, mode="nearest")
    level = 0.5 * values[0]
    below = np.nonzero(values < level)[0]
    if below.size == 0:
        raise DomainError("signal never falls below half its initial value")
    start = below[0]
    above = np.nonzero(values[start:] >= level)[0]
    if above.size == 0:
        raise DomainError("no revival inside the time grid")
    up = start + above[0]
    down = np.nonzero(values[up:] < level)[0]
    stop = up + down[0] if down.size else values.size
    if stop == values.size:
        raise DomainError("revival not complete inside the time grid")
    return float(times[up + np.argmax(values[up:stop])])


def density_outside(profile, center: int, half_width: float) -> Union[float, np.ndarray]:
    """Total density on sites with |i - center| > half_width (1-based sites)."""
    dens = _profile_array(profile)
    sites = np.arange(1, dens.shape[-1] + 1)
    out = dens[..., np.abs(sites - center) > half_width].sum(axis=-1)
    return float(out) if np.ndim(out) == 0 else out
