"""Occupation-number basis of a fixed-excitation sector.

States are stored as rows of an integer array and ordered lexicographically
decreasing, so ``(N, 0, ..., 0)`` has index 0 and ``(0, ..., 0, N)`` is last.
With that ordering the rank of a state is a stars-and-bars count, which lets
``index_of`` work without a lookup table. A hash table is kept as well; the
two must always agree.
"""

from __future__ import annotations

import enum
from functools import lru_cache
from math import comb, sqrt
from typing import Optional, Sequence, Tuple

import numpy as np

from .errors import DomainError, SizingError

DEFAULT_MAX_DIMENSION = 5_000_000


class Layout(enum.Enum):
    CHAIN_ONLY = "chain_only"
    SOURCE_CHAIN_DRAIN = "source_chain_drain"


def sector_dimension(mode_count: int, total_excitations: int) -> int:
    return comb(total_excitations + mode_count - 1, total_excitations)


@lru_cache(maxsize=None)
def _enumerate(mode_count: int, total: int) -> np.ndarray:
    if mode_count == 1:
        return np.array([[total]], dtype=np.int64)
    blocks = []
    for first in range(total, -1, -1):
        rest = _enumerate(mode_count - 1, total - first)
        block = np.empty((rest.shape[0], mode_count), dtype=np.int64)
        block[:, 0] = first
        block[:, 1:] = rest
        blocks.append(block)
    out = np.concatenate(blocks)
    out.setflags(write=False)
    return out


class FockBasis:
    """Enumerated states of one particle-number sector.

    ``mode_count`` counts every bosonic mode in the layout. For
    ``Layout.SOURCE_CHAIN_DRAIN`` the modes are ordered
    ``[source, site 1, ..., site M, drain]``.
    """

    def __init__(self, mode_count: int, total_excitations: int,
                 layout: Layout = Layout.CHAIN_ONLY,
                 max_dimension: int = DEFAULT_MAX_DIMENSION):
        if mode_count < 1:
            raise DomainError(f"mode_count must be >= 1, got {mode_count}")
        if total_excitations < 0:
            raise DomainError(f"total_excitations must be >= 0, got {total_excitations}")
        if layout is Layout.SOURCE_CHAIN_DRAIN and mode_count < 3:
            raise DomainError("source/chain/drain layout needs at least 3 modes")
        dim = sector_dimension(mode_count, total_excitations)
        if dim > max_dimension:
            raise SizingError(
                f"sector with {mode_count} modes and {total_excitations} excitations "
                f"has {dim} states, above the cap of {max_dimension}")
        self.mode_count = mode_count
        self.total_excitations = total_excitations
        self.layout = layout
        self.states = _enumerate(mode_count, total_excitations)
        self._lookup = None
        # _binom[r, L]: number of occupation vectors of L modes with total <= r
        n, m = total_excitations, mode_count
        self._binom = np.array([[comb(r + L, L) for L in range(m + 1)]
                                for r in range(n + 1)], dtype=np.int64)

    def __len__(self) -> int:
        return self.states.shape[0]

    def __repr__(self) -> str:
        return (f"FockBasis(mode_count={self.mode_count}, "
                f"total_excitations={self.total_excitations}, "
                f"layout={self.layout.value}, dim={len(self)})")

    @property
    def dimension(self) -> int:
        return self.states.shape[0]

    @property
    def chain_slice(self) -> slice:
        """Columns of ``states`` that belong to chain sites."""
        if self.layout is Layout.SOURCE_CHAIN_DRAIN:
            return slice(1, self.mode_count - 1)
        return slice(0, self.mode_count)

    @property
    def chain_length(self) -> int:
        if self.layout is Layout.SOURCE_CHAIN_DRAIN:
            return self.mode_count - 2
        return self.mode_count

    def state_at(self, index: int) -> Tuple[int, ...]:
        return tuple(int(x) for x in self.states[index])

    def _check(self, state: np.ndarray) -> None:
        if state.shape[-1] != self.mode_count:
            raise DomainError(
                f"state has {state.shape[-1]} modes, basis has {self.mode_count}")
        if np.any(state < 0):
            raise DomainError("occupations must be non-negative")
        if np.any(state.sum(axis=-1) != self.total_excitations):
            raise DomainError(
                f"state does not hold {self.total_excitations} excitations")

    def rank(self, states) -> np.ndarray:
        """Combinatorial rank of one state or a stack of states (no table lookup)."""
        arr = np.asarray(states, dtype=np.int64)
        self._check(arr)
        arr2 = np.atleast_2d(arr)
        m = self.mode_count
        remaining = np.full(arr2.shape[0], self.total_excitations, dtype=np.int64)
        idx = np.zeros(arr2.shape[0], dtype=np.int64)
        for j in range(m - 1):
            n_j = arr2[:, j]
            # States whose entry j exceeds n_j come first; they leave at most
            # remaining - n_j - 1 excitations for the (m - j - 1) later modes.
            spare = remaining - n_j - 1
            later = m - j - 1
            mask = spare >= 0
            idx[mask] += self._binom[spare[mask], later]
            remaining = remaining - n_j
        return idx if arr.ndim > 1 else idx[0]

    def _hash_index(self, state: Sequence[int]) -> int:
        if self._lookup is None:
            self._lookup = {tuple(int(x) for x in row): i for i, row in enumerate(self.states)}
        try:
            return self._lookup[tuple(int(x) for x in state)]
        except KeyError:
            raise DomainError(f"state {tuple(state)} is not in this sector") from None

    def index_of(self, state: Sequence[int], method: str = "rank") -> int:
        arr = np.asarray(state, dtype=np.int64)
        self._check(arr)
        if method == "rank":
            return int(self.rank(arr))
        if method == "hash":
            return self._hash_index(arr)
        raise ValueError(f"unknown lookup method {method!r}")

    def stack_state(self, mode: int, count: Optional[int] = None) -> np.ndarray:
        """Occupation vector with ``count`` excitations on ``mode`` (0-based)."""
        occ = np.zeros(self.mode_count, dtype=np.int64)
        occ[mode] = self.total_excitations if count is None else count
        return occ


def build_basis(mode_count: int, total_excitations: int,
                layout: Layout = Layout.CHAIN_ONLY,
                max_dimension: int = DEFAULT_MAX_DIMENSION) -> FockBasis:
    return FockBasis(mode_count, total_excitations, layout, max_dimension)


def apply_hop(state: Sequence[int], source: int, target: int
              ) -> Optional[Tuple[Tuple[int, ...], float]]:
    """Apply ``b_target^dagger b_source`` to a Fock state.

    Returns the new occupation tuple with the bosonic matrix element
    sqrt(n_source * (n_target + 1)), or None if the source mode is empty.
    """
    if source == target:
        raise DomainError("hop needs two distinct modes")
    occ = list(int(x) for x in state)
    if not (0 <= source < len(occ) and 0 <= target < len(occ)):
        raise DomainError(f"mode index out of range for {len(occ)} modes")
    n_from, n_to = occ[source], occ[target]
    if n_from == 0:
        return None
    occ[source] -= 1
    occ[target] += 1
    return tuple(occ), sqrt(n_from * (n_to + 1))
