"""Eigendecomposition and unitary propagation, exp(-iHt) psi0.

Small sectors go through a full dense eigendecomposition and spectral
synthesis. Large sectors use a Lanczos (Krylov) propagator whose subspace
size grows until an a-posteriori error estimate meets the step tolerance.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterator, List, Optional, Tuple

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import ConvergenceError, DomainError, KrylovStepError
from .fock_basis import FockBasis
from .hamiltonian import SparseHamiltonian

log = logging.getLogger(__name__)

DENSE_THRESHOLD = 4000
KRYLOV_TOL = 1e-10
KRYLOV_MIN_DIM = 10
KRYLOV_MAX_DIM = 60
NORM_TOL = 1e-10


@dataclass
class QuantumState:
    basis: FockBasis
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.shape != (self.basis.dimension,):
            raise DomainError(
                f"amplitude vector has shape {amps.shape}, basis dimension is "
                f"{self.basis.dimension}")
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > NORM_TOL:
            raise DomainError(f"state is not normalised (norm {norm:.12g})")
        self.amplitudes = amps

    @classmethod
    def _trusted(cls, basis: FockBasis, amplitudes: np.ndarray) -> "QuantumState":
        obj = cls.__new__(cls)
        obj.basis = basis
        obj.amplitudes = amplitudes
        return obj

    @classmethod
    def fock(cls, basis: FockBasis, occupations) -> "QuantumState":
        amps = np.zeros(basis.dimension, dtype=complex)
        amps[basis.index_of(occupations)] = 1.0
        return cls(basis, amps)

    @classmethod
    def from_vector(cls, basis: FockBasis, vec) -> "QuantumState":
        """Normalise an arbitrary non-zero vector into a state."""
        vec = np.asarray(vec, dtype=complex)
        norm = np.linalg.norm(vec)
        if norm == 0:
            raise DomainError("cannot normalise the zero vector")
        return cls(basis, vec / norm)

    def overlap(self, other: "QuantumState") -> complex:
        """<self|other>."""
        _same_basis(self.basis, other.basis)
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def fidelity(self, other: "QuantumState") -> float:
        return abs(self.overlap(other)) ** 2

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))


def _same_basis(a: FockBasis, b: FockBasis) -> None:
    if a is b:
        return
    if (a.mode_count, a.total_excitations, a.layout) != (b.mode_count, b.total_excitations, b.layout):
        raise DomainError(f"basis mismatch: {a!r} vs {b!r}")


@dataclass(frozen=True)
class EigenDecomposition:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    basis: Optional[FockBasis] = None

    def state(self, n: int) -> QuantumState:
        return QuantumState._trusted(self.basis, self.eigenvectors[:, n].astype(complex))


def diagonalize(H: SparseHamiltonian, dense_threshold: int = DENSE_THRESHOLD) -> EigenDecomposition:
    if H.dimension > dense_threshold:
        raise DomainError(
            f"dimension {H.dimension} exceeds the dense threshold {dense_threshold}; "
            "use evolve() with the Krylov path or ground_state() for the lowest pair")
    w, v = sla.eigh(H.toarray())
    return EigenDecomposition(w, v, H.basis)


def _fix_phase(vec: np.ndarray) -> np.ndarray:
    k = int(np.argmax(np.abs(vec)))
    phase = vec[k] / abs(vec[k])
    return vec / phase


def ground_state(H: SparseHamiltonian, dense_threshold: int = DENSE_THRESHOLD,
                 tol: float = 1e-9, maxiter: Optional[int] = None
                 ) -> Tuple[float, QuantumState]:
    """Lowest eigenpair; its largest-magnitude amplitude is made real positive."""
    hnorm = max(H.norm_estimate(), 1e-300)
    if H.dimension <= dense_threshold:
        w, v = sla.eigh(H.toarray(), subset_by_index=[0, 0])
        energy, vec = float(w[0]), v[:, 0]
    else:
        # Lanczos via ARPACK, smallest algebraic eigenvalue.
        rng = np.random.default_rng(0)
        v0 = rng.standard_normal(H.dimension)
        try:
            w, v = spla.eigsh(H.matrix, k=1, which="SA", tol=1e-13, v0=v0,
                              maxiter=maxiter, ncv=min(H.dimension, 64))
        except spla.ArpackNoConvergence as exc:
            raise ConvergenceError(f"Lanczos ground-state search did not converge: {exc}") from exc
        energy, vec = float(w[0]), v[:, 0] / np.linalg.norm(v[:, 0])
    residual = float(np.linalg.norm(H.matrix @ vec - energy * vec))
    if residual > tol * hnorm:
        raise ConvergenceError(
            f"ground state residual {residual:.3e} exceeds {tol:.1e} * ||H||", residual=residual)
    vec = _fix_phase(vec.astype(complex))
    return energy, QuantumState._trusted(H.basis, vec)


def check_time_grid(times) -> Tuple[np.ndarray, float]:
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size == 0:
        raise DomainError("time grid must be a non-empty 1-d array")
    if abs(times[0]) > 1e-12:
        raise DomainError("time grid must start at 0")
    if times.size == 1:
        return times, 0.0
    steps = np.diff(times)
    dt = float(steps.mean())
    if dt <= 0 or np.max(np.abs(steps - dt)) > 1e-9 * max(1.0, abs(dt)):
        raise DomainError("time grid must be ascending with a uniform step")
    return times, dt


def time_grid(t_max: float, dt: float) -> np.ndarray:
    if dt <= 0 or t_max < 0:
        raise DomainError("need dt > 0 and t_max >= 0")
    n = int(round(t_max / dt))
    return np.arange(n + 1) * dt


# --- Krylov -----------------------------------------------------------------

def krylov_expm_step(matvec, v: np.ndarray, tau: float, tol: float = KRYLOV_TOL,
                     m_min: int = KRYLOV_MIN_DIM, m_max: int = KRYLOV_MAX_DIM
                     ) -> Tuple[np.ndarray, float, int]:
    """exp(-i tau H) v for Hermitian H given as ``matvec``.

    Returns (result, error estimate, subspace size). The estimate is
    ||v|| * beta_m * |e_m^T exp(-i tau T_m) e_1|, the standard Lanczos bound
    on the first neglected term.
    """
    n = v.shape[0]
    beta0 = np.linalg.norm(v)
    if beta0 == 0.0:
        return np.zeros_like(v), 0.0, 0
    m_max = min(m_max, n)
    m_min = min(m_min, m_max)
    V = np.empty((m_max + 1, n), dtype=complex)
    alpha = np.zeros(m_max)
    beta = np.zeros(m_max)
    V[0] = v / beta0
    err = np.inf
    for j in range(m_max):
        w = matvec(V[j])
        alpha[j] = np.vdot(V[j], w).real
        w = w - alpha[j] * V[j]
        if j > 0:
            w = w - beta[j - 1] * V[j - 1]
        # full reorthogonalisation keeps the basis orthonormal to roundoff
        w = w - V[:j + 1].T @ (V[:j + 1].conj() @ w)
        beta[j] = np.linalg.norm(w)
        m = j + 1
        breakdown = beta[j] < 1e-13 * max(1.0, abs(alpha[j]))
        if m >= m_min or breakdown or m == m_max:
            theta, S = sla.eigh_tridiagonal(alpha[:m], beta[:m - 1])
            y = S @ (np.exp(-1j * tau * theta) * S[0].conj())
            err = 0.0 if breakdown else beta0 * beta[j] * abs(y[-1])
            if err <= tol or breakdown:
                return beta0 * (y @ V[:m]), err, m
        if not breakdown:
            V[j + 1] = w / beta[j]
    return beta0 * (y @ V[:m]), err, m


class KrylovPropagator:
    """Steps a state forward by a fixed interval, halving internally when needed."""

    def __init__(self, H: SparseHamiltonian, tol: float = KRYLOV_TOL,
                 m_min: int = KRYLOV_MIN_DIM, m_max: int = KRYLOV_MAX_DIM,
                 max_halvings: int = 12):
        self.H = H
        self.tol = tol
        self.m_min = m_min
        self.m_max = m_max
        self.max_halvings = max_halvings
        self._matvec = H.matrix.dot
        self._substeps = 1
        self.subspace_sizes: List[int] = []

    def step(self, psi: np.ndarray, dt: float, step_index: int = 0) -> np.ndarray:
        for _ in range(self.max_halvings + 1):
            sub = dt / self._substeps
            out = psi
            ok = True
            for _k in range(self._substeps):
                out, err, m = krylov_expm_step(self._matvec, out, sub, self.tol,
                                               self.m_min, self.m_max)
                self.subspace_sizes.append(m)
                if err > self.tol:
                    ok = False
                    break
            if ok:
                return out
            self._substeps *= 2
            log.debug("Krylov step %d: error %.2e, using %d substeps",
                      step_index, err, self._substeps)
        raise KrylovStepError(
            f"Krylov propagation failed on step {step_index} (t -> t + {dt}): "
            f"error estimate {err:.3e} > {self.tol:.1e} with {self._substeps} substeps",
            step=step_index, residual=err)


# --- trajectories -----------------------------------------------------------

def _choose_method(H: SparseHamiltonian, method: str, dense_threshold: int) -> str:
    if method == "auto":
        return "dense" if H.dimension <= dense_threshold else "krylov"
    if method not in ("dense", "krylov"):
        raise DomainError(f"unknown propagation method {method!r}")
    return method


def iter_amplitudes(H: SparseHamiltonian, psi0: QuantumState, times,
                    method: str = "auto", dense_threshold: int = DENSE_THRESHOLD,
                    eig: Optional[EigenDecomposition] = None, chunk: int = 256,
                    krylov_tol: float = KRYLOV_TOL) -> Iterator[np.ndarray]:
    """Yield blocks of amplitudes, shape (block_len, dim), covering ``times`` in order."""
    _same_basis(H.basis, psi0.basis)
    times, dt = check_time_grid(times)
    method = _choose_method(H, method, dense_threshold)
    if method == "dense":
        if eig is None:
            eig = diagonalize(H, dense_threshold=max(dense_threshold, H.dimension))
        V = eig.eigenvectors
        coeff = V.T @ psi0.amplitudes
        for start in range(0, times.size, chunk):
            tb = times[start:start + chunk]
            phases = np.exp(-1j * np.outer(eig.eigenvalues, tb)) * coeff[:, None]
            # V is real: two real BLAS products instead of one complex one
            block = V @ np.ascontiguousarray(phases.real) + 1j * (V @ np.ascontiguousarray(phases.imag))
            block[:, tb == 0.0] = psi0.amplitudes[:, None]
            yield block.T
    else:
        prop = KrylovPropagator(H, tol=krylov_tol)
        psi = psi0.amplitudes.copy()
        buf = [psi]
        for k in range(1, times.size):
            psi = prop.step(psi, dt, step_index=k)
            buf.append(psi)
            if len(buf) == chunk:
                yield np.array(buf)
                buf = []
        if buf:
            yield np.array(buf)


def evolve(H: SparseHamiltonian, psi0: QuantumState, times, method: str = "auto",
           dense_threshold: int = DENSE_THRESHOLD,
           eig: Optional[EigenDecomposition] = None) -> List[QuantumState]:
    """States exp(-iHt) psi0 at every point of a uniform grid starting at 0."""
    out = []
    for block in iter_amplitudes(H, psi0, times, method, dense_threshold, eig):
        out.extend(QuantumState._trusted(psi0.basis, row.copy()) for row in block)
    return out


def expectation(state: QuantumState, op, hermitian: bool = True) -> float:
    """<psi|O|psi>; O may be a diagonal vector, a SparseHamiltonian, or any matrix."""
    psi = state.amplitudes
    if isinstance(op, SparseHamiltonian):
        _same_basis(op.basis, state.basis)
        value = np.vdot(psi, op.matrix @ psi)
    else:
        if sp.issparse(op) or (isinstance(op, np.ndarray) and op.ndim == 2):
            if op.shape != (psi.size, psi.size):
                raise DomainError(f"operator shape {op.shape} does not match state")
            value = np.vdot(psi, op @ psi)
        else:
            diag = np.asarray(op)
            if diag.shape != psi.shape:
                raise DomainError(f"diagonal operator has shape {diag.shape}, state {psi.shape}")
            value = np.dot(np.abs(psi) ** 2, diag)
    value = complex(value)
    if not hermitian:
        return value
    if abs(value.imag) > 1e-10 * max(1.0, abs(value.real)):
        raise DomainError(f"expectation has imaginary part {value.imag:.3e}; operator not Hermitian?")
    return float(value.real)
