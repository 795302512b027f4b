"""Closed-form analytics for attractive Bose-Hubbard chains and source/drain transport.

Each function evaluates a printed closed form directly. Nothing here imports
the numerical engine, so comparing the two is a real cross-check.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import exp, factorial, lgamma, log, pi, sin, sqrt, tan

import numpy as np

from .errors import DomainError


def mu_band(U: float, N: int, J: float = 1.0) -> float:
    """Pinning strength equal to the width of the soliton band."""
    if N < 2:
        raise DomainError("mu_band needs N >= 2")
    if U == 0:
        # the U -> 0 limit of the expression below
        return 2.0 * J
    a = abs(U) * (N - 1)
    x = 16.0 * J * J / (a * a)
    # sqrt(1 + x) - 1 written without cancellation
    return 0.5 * a * x / (sqrt(1.0 + x) + 1.0)


def soliton_width(mu_pin: float, U: float, N: int, J: float = 1.0) -> float:
    """Approximate RMS width of a strongly pinned soliton."""
    denom = mu_pin + abs(U) * (N - 1)
    if denom <= 0:
        raise DomainError("soliton width needs mu_pin + |U|(N-1) > 0")
    return sqrt(2.0) * J / denom


def soliton_neighbour_amplitude(mu_pin: float, U: float, N: int, J: float = 1.0) -> float:
    """First-order amplitude of |(N-1)_pin, 1_(pin+-1)> in the pinned soliton."""
    return -J * sqrt(N) / (mu_pin + abs(U) * (N - 1))


def j_tilde(U: float, N: int, J: float = 1.0) -> float:
    """Effective tunnelling of an N-boson bound cluster for |U| >> J."""
    if N < 1:
        raise DomainError("j_tilde needs N >= 1")
    if N == 1:
        return J
    if U == 0:
        raise DomainError("j_tilde needs U != 0 for N >= 2")
    return J * N * (J / abs(U)) ** (N - 1) / factorial(N - 1)


def velocity_scaling_variable(U: float, N: int, J: float = 1.0) -> float:
    """|U/J|^(N-1) (N-1)! / N, the variable that collapses v_inf(U) across N."""
    return abs(U / J) ** (N - 1) * factorial(N - 1) / N


def u_critical(N: int, J: float = 1.0) -> float:
    """Critical |U| for the soliton-band gap, calibrated to 4J at N = 2."""
    if N < 2:
        raise DomainError("u_critical needs N >= 2")
    if N == 2:
        return 4.0 * J
    # log form: (N-1)! overflows float for large N
    return J * exp((log(2.0 * N) - lgamma(N)) / (N - 1))


def tight_binding_energies(M: int, J: float = 1.0, omega01: float = 0.0) -> np.ndarray:
    if M < 1:
        raise DomainError("need M >= 1")
    k = np.arange(1, M + 1)
    return np.sort(omega01 + 2.0 * J * np.cos(pi * k / (M + 1)))


def multiphoton_resonance_detuning(U: float, N: int) -> float:
    """Resonator detuning at which an N-boson cluster in the chain is resonant."""
    if N < 1:
        raise DomainError("need N >= 1")
    return U * (N - 1) / 2.0


def parity_crossover(M: int, Jprime: float, J: float = 1.0) -> float:
    return sqrt(M + 1) * Jprime / J


def resonant_sd_densities(M: int, Jprime: float, N_total: float, times):
    """Source, drain and chain occupations for an odd chain at zero detuning.

    Only the zero-energy chain mode is kept, which couples to both
    resonators with strength Jprime * sqrt(2 / (M + 1)).
    """
    if M % 2 == 0:
        raise DomainError("even M has no resonant level; use off_resonant_sd")
    t = np.asarray(times, dtype=float)
    x = Jprime * t / sqrt(M + 1)
    c2, s2 = np.cos(x) ** 2, np.sin(x) ** 2
    n_s = N_total * c2 * c2
    n_d = N_total * s2 * s2
    n_chain = N_total * np.sin(2.0 * x) ** 2 / 2.0
    return n_s, n_d, n_chain


@dataclass(frozen=True)
class ParityReduction:
    """Four-level (source, two mid-band chain modes, drain) reduction for even M."""

    M: int
    Jprime: float
    J: float
    beta: float
    omega_plus: float
    omega_minus: float
    alpha_beat: float
    omega_minus_corrected: float

    def frequencies(self, corrected: bool = True):
        w_minus = self.omega_minus_corrected if corrected else self.omega_minus
        alpha = (self.omega_plus - w_minus) / (self.omega_plus + w_minus)
        return self.omega_plus, w_minus, alpha

    def densities(self, N_total: float, times, corrected: bool = True):
        """(n_S, n_D, N_chain) from the slow/fast beating formulas."""
        w_p, w_m, a = self.frequencies(corrected)
        t = np.asarray(times, dtype=float)
        n_s = N_total * (0.5 * (1 + a) * np.cos(w_m * t) + 0.5 * (1 - a) * np.cos(w_p * t)) ** 2
        n_d = N_total * (0.5 * (1 + a) * np.sin(w_m * t) - 0.5 * (1 - a) * np.sin(w_p * t)) ** 2
        n_chain = N_total * (1 - a * a) * np.sin(0.5 * (w_p + w_m) * t) ** 2
        return n_s, n_d, n_chain

    def reduced_matrix(self, omega_r: float = 0.0) -> np.ndarray:
        """The 4x4 Hamiltonian in the basis (S, k1 = M/2, k2 = M/2 + 1, D)."""
        b, c = self.beta, (-1) ** (self.M // 2)
        core = np.array([[0, b, b, 0],
                         [b, 2, 0, -b * c],
                         [b, 0, -2, b * c],
                         [0, -b * c, b * c, 0]], dtype=float)
        return omega_r * np.eye(4) + self.J * sin(pi / (2 * (self.M + 1))) * core


def off_resonant_sd(M: int, Jprime: float, J: float = 1.0) -> ParityReduction:
    if M % 2 != 0:
        raise DomainError("odd M has a resonant level; use resonant_sd_densities")
    if M < 2:
        raise DomainError("need M >= 2")
    theta = pi / (2 * (M + 1))
    beta = (Jprime / J) / tan(theta) * sqrt(2.0 / (M + 1))
    root = sqrt(2.0 * beta * beta + 1.0)
    w_plus = J * sin(theta) * (root + 1.0)
    w_minus = J * sin(theta) * (root - 1.0)
    alpha = (w_plus - w_minus) / (w_plus + w_minus)
    w_minus_corr = Jprime ** 2 / (J * (1.0 + M * Jprime ** 2 / (2.0 * J * J)))
    return ParityReduction(M=M, Jprime=Jprime, J=J, beta=beta, omega_plus=w_plus,
                           omega_minus=w_minus, alpha_beat=alpha,
                           omega_minus_corrected=w_minus_corr)


def quantum_walk_velocity(J: float = 1.0) -> float:
    """RMS spreading velocity of a single particle released from one site."""
    return sqrt(2.0) * J
