"""Quasistatic frequency noise: Gaussian-sampled transmon frequencies averaged over runs.

Every trajectory draws its own site frequencies omega_i ~ N(omega01, sigma) and
rescales the bonds to J sqrt(omega_i omega_{i+1}) / omega01. The interaction U
is left uniform. Trajectory k uses a Philox stream keyed by (seed, k), so any
subset of trajectories can be regenerated in any order.
"""

from __future__ import annotations

import logging
import os
import time as _time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from .errors import DomainError
from .hamiltonian import ChainParams
from .observables import r_squared, velocity_from_r2
from .protocols import ProtocolResult, ProtocolSpec

log = logging.getLogger(__name__)

DEFAULT_OMEGA01 = 100.0
MAX_RESAMPLE_ROUNDS = 1000


@dataclass(frozen=True)
class DephasingParams:
    sigma_omega: float
    n_trajectories: int = 100
    seed: int = 0
    omega01: float = DEFAULT_OMEGA01

    def __post_init__(self):
        if self.sigma_omega < 0:
            raise DomainError("sigma_omega must be non-negative")
        if self.n_trajectories < 1:
            raise DomainError("n_trajectories must be at least 1")
        if not self.omega01 > 0:
            raise DomainError("omega01 must be positive; the bond rescaling divides by it")
        if not 0 <= self.seed < 2 ** 64:
            raise DomainError("seed must be a 64-bit unsigned integer")

    @classmethod
    def from_dephasing_time(cls, T_phi: float, **kw) -> "DephasingParams":
        """sigma_omega = sqrt(2) / T_phi."""
        if T_phi <= 0:
            raise DomainError("T_phi must be positive")
        return cls(sigma_omega=np.sqrt(2.0) / T_phi, **kw)


def trajectory_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, index])))


@dataclass
class Disorder:
    mu: np.ndarray
    J_bonds: np.ndarray
    resampled: int = 0


def sample_disorder(params: DephasingParams, M: int, rng: np.random.Generator,
                    J: float = 1.0) -> Disorder:
    """Site frequencies and rescaled bond couplings for one trajectory.

    Non-positive frequencies are redrawn rather than clipped; the number of
    redraws is reported on the result.
    """
    if M < 1:
        raise DomainError("need M >= 1")
    w0, sigma = params.omega01, params.sigma_omega
    mu = rng.normal(w0, sigma, size=M) if sigma > 0 else np.full(M, w0)
    resampled = 0
    for _ in range(MAX_RESAMPLE_ROUNDS):
        bad = mu <= 0
        if not bad.any():
            break
        resampled += int(bad.sum())
        mu[bad] = rng.normal(w0, sigma, size=int(bad.sum()))
    else:
        raise DomainError("could not draw positive frequencies; sigma_omega >> omega01")
    if resampled:
        log.info("redrew %d non-positive frequencies", resampled)
    bonds = J * np.sqrt(mu[:-1] * mu[1:]) / w0
    return Disorder(mu, bonds, resampled)


def disordered_chain(spec: ProtocolSpec, disorder: Disorder, omega01: float) -> ChainParams:
    # frequencies enter relative to omega01: a uniform shift only adds a global phase
    return ChainParams(J=spec.J, U=spec.U, mu=tuple(disorder.mu - omega01),
                       J_bonds=tuple(disorder.J_bonds))


def resolve_threads(threads: Optional[int] = None) -> int:
    if threads is None:
        env = os.environ.get("BHSIM_THREADS")
        threads = int(env) if env else 1
    if threads < 1:
        raise DomainError("threads must be >= 1")
    return threads


@dataclass
class DephasedResult:
    mean: ProtocolResult
    trajectories: Optional[List[ProtocolResult]]
    disorders: List[Disorder]


def run_dephased_protocol(spec: ProtocolSpec, dparams: DephasingParams,
                          threads: Optional[int] = None, keep_trajectories: bool = False,
                          method: str = "auto") -> DephasedResult:
    """Ensemble average of ``spec`` over quasistatic frequency disorder.

    Pinning and ramps are applied on top of each trajectory's sampled
    frequencies; a "band" pin strength is resolved once from the clean U.
    Averages are accumulated in trajectory order whatever the thread count.
    """
    if spec.kind not in ("pin_release", "stack_release", "ramp"):
        raise DomainError(f"dephasing supports pin_release, stack_release and ramp, not {spec.kind!r}")
    started = _time.perf_counter()
    n = dparams.n_trajectories
    disorders = [sample_disorder(dparams, spec.M, trajectory_rng(dparams.seed, k), spec.J)
                 for k in range(n)]

    def one(k: int) -> ProtocolResult:
        return spec.run(disordered_chain(spec, disorders[k], dparams.omega01), method=method)

    workers = min(resolve_threads(threads), n)
    if workers == 1:
        runs = [one(k) for k in range(n)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            runs = list(pool.map(one, range(n)))

    first = runs[0]
    density = np.zeros_like(first.density)
    scalars = {key: np.zeros_like(val) for key, val in first.scalars.items()}
    for run in runs:
        density += run.density
        for key in scalars:
            scalars[key] += run.scalars[key]
    density /= n
    for key in scalars:
        scalars[key] /= n
    if "R" in scalars:
        # v of the ensemble is taken from the averaged width, not averaged per run
        r2 = r_squared(density, spec.site, spec.N)
        scalars["R"] = np.sqrt(np.clip(r2, 0.0, None))
        if len(first.times) >= 3:
            scalars["v"] = velocity_from_r2(first.times, r2).values
    meta = dict(first.metadata)
    meta.update(protocol="dephased", base_protocol=spec.kind, sigma_omega=dparams.sigma_omega,
                n_trajectories=n, seed=dparams.seed, omega01=dparams.omega01,
                resampled=sum(d.resampled for d in disorders), threads=workers,
                wall_time_s=_time.perf_counter() - started)
    mean = ProtocolResult(first.times, density, first.mode_labels, scalars, meta)
    return DephasedResult(mean, runs if keep_trajectories else None, disorders)


def disorder_table(disorders: List[Disorder]) -> Tuple[np.ndarray, np.ndarray]:
    return (np.array([d.mu for d in disorders]), np.array([d.J_bonds for d in disorders]))
