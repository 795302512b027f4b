"""Sparse Bose-Hubbard operators for a chain and for a chain with source/drain resonators.

Energies are in units of the tunnelling J unless the caller says otherwise;
site indices in the public functions are 1-based.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
import scipy.sparse as sp

from .errors import DomainError
from .fock_basis import FockBasis, Layout


@dataclass(frozen=True)
class ChainParams:
    """Chain parameters: tunnelling J, on-site interaction U, site frequencies mu.

    ``J_bonds`` optionally overrides J bond by bond (length M - 1); the
    dephasing ensemble uses it for frequency-rescaled couplings.
    """

    J: float
    U: float
    mu: tuple
    J_bonds: Optional[tuple] = None

    def __post_init__(self):
        object.__setattr__(self, "mu", tuple(float(x) for x in self.mu))
        if not self.J > 0:
            raise DomainError(f"J must be positive, got {self.J}")
        if self.J_bonds is not None:
            bonds = tuple(float(x) for x in self.J_bonds)
            if len(bonds) != max(self.M - 1, 0):
                raise DomainError(
                    f"J_bonds needs {self.M - 1} entries, got {len(bonds)}")
            object.__setattr__(self, "J_bonds", bonds)

    @property
    def M(self) -> int:
        return len(self.mu)

    @classmethod
    def uniform(cls, M: int, J: float = 1.0, U: float = 0.0, omega01: float = 0.0):
        return cls(J=J, U=U, mu=(omega01,) * M)

    def bond_couplings(self) -> np.ndarray:
        if self.J_bonds is not None:
            return np.asarray(self.J_bonds)
        return np.full(max(self.M - 1, 0), self.J)

    def with_mu(self, mu) -> "ChainParams":
        return ChainParams(J=self.J, U=self.U, mu=tuple(mu), J_bonds=self.J_bonds)

    def with_U(self, U: float) -> "ChainParams":
        return ChainParams(J=self.J, U=U, mu=self.mu, J_bonds=self.J_bonds)


@dataclass(frozen=True)
class SourceDrainParams:
    """Resonator frequency omega_r, resonator-chain coupling Jprime, total excitations."""

    omega_r: float
    Jprime: float
    total_excitations: int
    omega01: float = 0.0

    def __post_init__(self):
        if self.Jprime < 0:
            raise DomainError(f"Jprime must be non-negative, got {self.Jprime}")
        if self.total_excitations < 0:
            raise DomainError("total_excitations must be non-negative")

    @property
    def delta(self) -> float:
        return self.omega_r - self.omega01

    @classmethod
    def from_detuning(cls, delta: float, Jprime: float, total_excitations: int,
                      omega01: float = 0.0):
        return cls(omega_r=omega01 + delta, Jprime=Jprime,
                   total_excitations=total_excitations, omega01=omega01)


def params_digest(*records) -> str:
    payload = json.dumps([asdict(r) for r in records], sort_keys=True, default=str)
    return hashlib.sha256(payload.encode()).hexdigest()[:16]


@dataclass
class SparseHamiltonian:
    """Real-symmetric operator on one Fock sector.

    ``upper`` holds the upper triangle (diagonal included); ``matrix`` is the
    full symmetric CSR used for products, assembled by mirroring ``upper``.
    """

    basis: FockBasis
    upper: sp.csr_matrix
    params: tuple = field(default=())
    params_digest: str = ""

    def __post_init__(self):
        up = sp.triu(self.upper, format="csr")
        self.upper = up
        strict = sp.triu(up, k=1)
        self.matrix = (up + strict.T).tocsr()
        self.matrix.sort_indices()

    @property
    def dimension(self) -> int:
        return self.basis.dimension

    def diagonal(self) -> np.ndarray:
        return self.matrix.diagonal()

    def dot(self, vec: np.ndarray) -> np.ndarray:
        return self.matrix @ vec

    __matmul__ = dot

    def toarray(self) -> np.ndarray:
        return self.matrix.toarray()

    def norm_estimate(self) -> float:
        """Upper bound on the spectral norm (max absolute row sum)."""
        return float(abs(self.matrix).sum(axis=1).max()) if self.dimension else 0.0

    def shifted(self, shift: float) -> "SparseHamiltonian":
        """H + shift * identity."""
        up = self.upper + shift * sp.identity(self.dimension, format="csr")
        return SparseHamiltonian(self.basis, up, self.params, self.params_digest)

    def export_coo(self, path) -> None:
        """Write the upper triangle as 1-based ``row col value`` triplets."""
        coo = self.upper.tocoo()
        order = np.lexsort((coo.col, coo.row))
        with open(Path(path), "w") as fh:
            fh.write(f"% {self.dimension} {self.dimension} {coo.nnz}\n")
            for k in order:
                fh.write(f"{coo.row[k] + 1} {coo.col[k] + 1} {coo.data[k]:.17g}\n")


def _hop_entries(basis: FockBasis, a: int, b: int, coupling: float):
    """Upper-triangle entries of coupling * (b_b^dag b_a + h.c.) for modes a < b.

    Moving an excitation from a to the later mode b gives a lexicographically
    smaller tuple, i.e. a larger index, so (col=old, row=new) lies below the
    diagonal and the transposed entry sits in the upper triangle.
    """
    states = basis.states
    src = np.nonzero(states[:, a] > 0)[0]
    moved = states[src].copy()
    amp = coupling * np.sqrt(moved[:, a] * (moved[:, b] + 1.0))
    moved[:, a] -= 1
    moved[:, b] += 1
    dst = basis.rank(moved) if len(moved) else np.zeros(0, dtype=np.int64)
    return src, dst, amp


def _assemble(basis: FockBasis, diag: np.ndarray, bonds) -> sp.csr_matrix:
    rows, cols, vals = [np.arange(basis.dimension)], [np.arange(basis.dimension)], [diag]
    for a, b, coupling in bonds:
        if coupling == 0.0:
            continue
        src, dst, amp = _hop_entries(basis, a, b, coupling)
        rows.append(src)
        cols.append(dst)
        vals.append(amp)
    n = basis.dimension
    mat = sp.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                        shape=(n, n))
    return mat.tocsr()


def _chain_diagonal(occ: np.ndarray, U: float, mu: np.ndarray) -> np.ndarray:
    occ = occ.astype(float)
    return 0.5 * U * (occ * (occ - 1.0)).sum(axis=1) + occ @ mu


def build_chain_hamiltonian(basis: FockBasis, params: ChainParams) -> SparseHamiltonian:
    if basis.layout is not Layout.CHAIN_ONLY:
        raise DomainError("chain Hamiltonian needs a chain-only basis")
    if basis.mode_count != params.M:
        raise DomainError(
            f"basis has {basis.mode_count} modes but params describe {params.M} sites")
    mu = np.asarray(params.mu, dtype=float)
    diag = _chain_diagonal(basis.states, params.U, mu)
    bonds = [(i, i + 1, j) for i, j in enumerate(params.bond_couplings())]
    upper = _assemble(basis, diag, bonds)
    return SparseHamiltonian(basis, upper, (params,), params_digest(params))


def build_source_drain_hamiltonian(basis: FockBasis, chain: ChainParams,
                                   sd: SourceDrainParams) -> SparseHamiltonian:
    if basis.layout is not Layout.SOURCE_CHAIN_DRAIN:
        raise DomainError("source/drain Hamiltonian needs a SOURCE_CHAIN_DRAIN basis")
    M = chain.M
    if basis.mode_count != M + 2:
        raise DomainError(
            f"basis has {basis.mode_count} modes, expected M + 2 = {M + 2}")
    states = basis.states
    chain_occ = states[:, 1:M + 1]
    diag = _chain_diagonal(chain_occ, chain.U, np.asarray(chain.mu, dtype=float))
    diag = diag + sd.omega_r * (states[:, 0] + states[:, M + 1])
    bonds = [(0, 1, sd.Jprime)]
    bonds += [(i + 1, i + 2, j) for i, j in enumerate(chain.bond_couplings())]
    bonds.append((M, M + 1, sd.Jprime))
    upper = _assemble(basis, diag, bonds)
    return SparseHamiltonian(basis, upper, (chain, sd), params_digest(chain, sd))


def _check_site(M: int, site: int, name: str) -> None:
    if not 1 <= site <= M:
        raise DomainError(f"{name} must lie in 1..{M}, got {site}")


def build_pinned_mu(M: int, omega01: float, pin_site: int, mu_pin: float) -> np.ndarray:
    _check_site(M, pin_site, "pin_site")
    if mu_pin < 0:
        raise DomainError(f"mu_pin must be non-negative, got {mu_pin}")
    mu = np.full(M, float(omega01))
    mu[pin_site - 1] -= mu_pin
    return mu


def build_ramp_mu(M: int, omega01: float, ramp_site: int, mu_ramp: float) -> np.ndarray:
    """Linear ramp rising towards site 1, flat from ``ramp_site`` onwards."""
    _check_site(M, ramp_site, "ramp_site")
    if mu_ramp < 0:
        raise DomainError(f"mu_ramp must be non-negative, got {mu_ramp}")
    sites = np.arange(1, M + 1)
    return omega01 + mu_ramp * np.clip(ramp_site - sites, 0, None).astype(float)


def number_operator_diagonal(basis: FockBasis, modes: Optional[Sequence[int]] = None) -> np.ndarray:
    """Diagonal of the number operator summed over ``modes`` (0-based; all if None)."""
    occ = basis.states if modes is None else basis.states[:, list(modes)]
    return occ.sum(axis=1).astype(float)
