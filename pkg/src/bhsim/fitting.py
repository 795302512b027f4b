"""Asymptotic expansion velocity from a damped-oscillation fit of v(t).

Model: v(t) = v_inf + A cos(Omega t + phi) / (Omega t)^eta, fitted inside a
window t_eps < t < t_star that skips the release transient and stops before
the spreading front reaches the chain ends.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from math import pi, sqrt
from typing import Optional

import numpy as np
from scipy.optimize import least_squares

from .errors import ConvergenceError, DomainError
from .observables import FitWindow, TimeSeries

log = logging.getLogger(__name__)

T_EPS_DEFAULT = 0.5
T_STAR_REFERENCE = 6.2
M_REFERENCE = 29
INDETERMINATE_RATIO = 1e-3
ETA_BOUNDS = (0.0, 5.0)
N_OMEGA_STARTS = 8
PHASE_STARTS = (0.0, pi / 2, pi, 3 * pi / 2)
MIN_SAMPLES = 20


@dataclass
class VelocityFit:
    v_inf: float
    A: float
    Omega: float
    phi: float
    eta: float
    residual_norm: float
    window: FitWindow
    converged: bool
    indeterminate: bool = False

    def model(self, t):
        return velocity_model(np.asarray(t, dtype=float), self.v_inf, self.A,
                              self.Omega, self.phi, self.eta)


def velocity_model(t, v_inf, A, Omega, phi, eta):
    return v_inf + A * np.cos(Omega * t + phi) / (Omega * t) ** eta


def default_window(U: float, M: int, v_estimate: float = 0.0, J: float = 1.0) -> FitWindow:
    """Fit window scaled from t* = 6.2/J at M = 29.

    The upper edge shrinks proportionally with M and never exceeds the time a
    front moving at max(v_estimate, sqrt(2) J) needs to cover a quarter of
    the chain at the quantum-walk rate M/(4J).
    """
    t_scaled = T_STAR_REFERENCE / J * M / M_REFERENCE
    v_ref = sqrt(2.0) * J
    t_front = M / (4.0 * J) * v_ref / max(v_estimate, v_ref)
    t_star = min(t_scaled, t_front)
    t_eps = min(T_EPS_DEFAULT / J, 0.5 * t_star)
    return FitWindow(t_eps, t_star)


def _omega_grid(window: FitWindow, U: Optional[float]) -> np.ndarray:
    lo = pi / (window.t_star - window.t_eps)
    hi = 4.0 * abs(U) if U else 0.0
    hi = max(hi, 4.0 * lo)
    return np.linspace(lo, hi, N_OMEGA_STARTS)


def fit_velocity(series: TimeSeries, window: FitWindow, U: Optional[float] = None,
                 max_nfev: int = 4000) -> VelocityFit:
    """Least-squares fit of the damped-oscillation velocity model inside ``window``.

    Multi-start over 8 frequencies from pi/(t* - t_eps) to 4|U| and four
    phases; the lowest residual wins, ties going to the lowest frequency.
    When the fitted amplitude is negligible (|A| < 1e-3 v_inf) the oscillation
    parameters are meaningless, so they are flagged and v_inf is replaced by
    the window mean.
    """
    sub = series.window(window.t_eps, window.t_star)
    t, v = sub.times, sub.values
    if t.size < MIN_SAMPLES:
        raise DomainError(f"fit window holds {t.size} samples, need >= {MIN_SAMPLES}")
    v_mean = float(v.mean())
    spread = float(v.max() - v.min())
    omegas = _omega_grid(window, U)
    # below half a period per window the cosine degenerates into an offset
    lower = [-np.inf, -np.inf, omegas[0] * (1 - 1e-9), -np.inf, ETA_BOUNDS[0]]
    upper = [np.inf, np.inf, np.inf, np.inf, ETA_BOUNDS[1]]

    def resid(p):
        return velocity_model(t, *p) - v

    best = None
    for omega0 in omegas:
        for phi0 in PHASE_STARTS:
            p0 = [v_mean, max(spread, 1e-6), omega0, phi0, 0.5]
            try:
                sol = least_squares(resid, p0, bounds=(lower, upper), method="trf",
                                    x_scale="jac", max_nfev=max_nfev)
            except (ValueError, FloatingPointError) as exc:
                log.debug("start (%g, %g) failed: %s", omega0, phi0, exc)
                continue
            if not np.all(np.isfinite(sol.x)):
                continue
            cost = float(np.sqrt(2.0 * sol.cost))
            key = (round(cost, 12), sol.x[2])
            if best is None or key < best[0]:
                best = (key, sol, cost)
    if best is None:
        raise ConvergenceError("velocity fit failed from every start")
    _, sol, cost = best
    v_inf, A, Omega, phi, eta = (float(x) for x in sol.x)
    if A < 0:
        A, phi = -A, phi + pi
    phi = phi % (2 * pi)
    fit = VelocityFit(v_inf, A, Omega, phi, eta, cost, window, converged=bool(sol.success))
    if abs(A) < INDETERMINATE_RATIO * abs(v_inf) or spread <= 1e-12 * max(1.0, abs(v_mean)):
        fit.v_inf = v_mean
        fit.A = 0.0
        fit.Omega = fit.phi = fit.eta = float("nan")
        fit.indeterminate = True
        fit.residual_norm = float(np.linalg.norm(v - v_mean))
    return fit
