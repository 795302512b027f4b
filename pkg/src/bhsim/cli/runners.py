"""Config parameters -> library calls -> tables."""

from __future__ import annotations

import time as _time
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional

import numpy as np

from .. import __version__
from ..dephasing import DEFAULT_OMEGA01, DephasingParams, run_dephased_protocol
from ..evolution import DENSE_THRESHOLD, diagonalize
from ..fitting import default_window, fit_velocity
from ..fock_basis import build_basis
from ..hamiltonian import ChainParams, SourceDrainParams, build_chain_hamiltonian
from ..observables import FitWindow
from ..oracles import velocity_scaling_variable
from ..protocols import (DEFAULT_DT, ProtocolResult, ProtocolSpec, run_pin_release,
                         run_ramp, run_repulsive_quench, run_source_drain, run_stack_release)
from .config import ConfigError
from .io import Table

SCALAR_ORDER = ("R", "v", "F_N", "n_S", "n_D", "N_chain", "E")


@dataclass
class RunOutput:
    tables: Dict[str, Table]
    summary: List[Dict[str, float]]
    metadata: Dict[str, Any] = field(default_factory=dict)


def _common(p: Dict) -> Dict:
    return {"t_max": p.get("t_max", 100.0), "dt": p.get("dt", DEFAULT_DT),
            "method": p.get("method", "auto"),
            "dense_threshold": p.get("dense_threshold", DENSE_THRESHOLD)}


def _chain(p: Dict, U: Optional[float] = None) -> ChainParams:
    return ChainParams.uniform(p["M"], J=p.get("J", 1.0), U=p["U"] if U is None else U,
                               omega01=p.get("omega01", 0.0))


def _scalar_columns(scalars: Dict[str, np.ndarray]) -> List[str]:
    first = [k for k in SCALAR_ORDER if k in scalars]
    rest = [k for k in scalars if k not in first and k.startswith("F_") and k != "F_N"]
    classes = [k for k in scalars if k.startswith("P_")]
    return first + rest + classes


def protocol_output(res: ProtocolResult) -> RunOutput:
    density = Table(["t"] + list(res.mode_labels), np.column_stack([res.times, res.density]))
    cols = _scalar_columns(res.scalars)
    scalars = Table(["t"] + cols, np.column_stack([res.times] + [res.scalars[c] for c in cols]))
    summary = {}
    for c in cols:
        vals = res.scalars[c]
        summary[f"{c}_final"] = float(vals[-1])
        summary[f"{c}_mean"] = float(vals.mean())
        summary[f"{c}_max"] = float(vals.max())
    return RunOutput({"density": density, "scalars": scalars}, [summary], dict(res.metadata))


def run_pin(p: Dict, ctx: "RunContext") -> RunOutput:
    return protocol_output(run_pin_release(_chain(p), p["N"], p["pin_site"], p.get("mu_pin", "band"),
                                           U_evolve=p.get("U_evolve"), **_common(p)))


def run_stack(p: Dict, ctx: "RunContext") -> RunOutput:
    return protocol_output(run_stack_release(_chain(p), p["N"], p["site"], **_common(p)))


def run_quench(p: Dict, ctx: "RunContext") -> RunOutput:
    chain = _chain(p, U=p["U_prep"])
    return protocol_output(run_repulsive_quench(chain, p["N"], p["pin_site"], p["U_prep"],
                                                p["U_evolve"], p.get("mu_pin", "band"), **_common(p)))


def run_ramp_cfg(p: Dict, ctx: "RunContext") -> RunOutput:
    return protocol_output(run_ramp(_chain(p), p["N"], p["ramp_site"], p["mu_ramp"],
                                    p.get("mu_pin", "band"), **_common(p)))


def run_sd(p: Dict, ctx: "RunContext") -> RunOutput:
    omega01 = p.get("omega01", 0.0)
    sd = SourceDrainParams.from_detuning(p["delta"], p["Jprime"], p["N_total"], omega01)
    return protocol_output(run_source_drain(_chain(p), sd, stack_N=p.get("stack_N", 2), **_common(p)))


def _as_list(val) -> list:
    return list(val) if isinstance(val, (list, tuple)) else [val]


def run_velocity_sweep(p: Dict, ctx: "RunContext") -> RunOutput:
    """Fit v_inf for every (N, U) pair; one table row per pair."""
    M, J = p["M"], p.get("J", 1.0)
    pin = p.get("pin_site", (M + 1) // 2)
    common = _common(p)
    rows, started = [], _time.perf_counter()
    for N in _as_list(p["N"]):
        for U in _as_list(p["U"]):
            if "t_star" in p:
                window = FitWindow(p.get("t_eps", 0.5 / J), p["t_star"])
            else:
                window = default_window(U, M, J=J)
            t_max = max(common["t_max"] if "t_max" in p else 0.0, window.t_star + 5 * common["dt"])
            res = run_pin_release(_chain(p, U=U), N, pin, p.get("mu_pin", "band"),
                                  t_max=t_max, dt=common["dt"], method=common["method"],
                                  dense_threshold=common["dense_threshold"])
            fit = fit_velocity(res.series("v"), window, U=U)
            rows.append({"N": N, "U": U, "x": velocity_scaling_variable(U, N, J) if U else 0.0,
                         "v_inf": fit.v_inf, "A": fit.A, "Omega": fit.Omega, "phi": fit.phi,
                         "eta": fit.eta, "converged": int(fit.converged),
                         "indeterminate": int(fit.indeterminate), "residual": fit.residual_norm,
                         "t_eps": window.t_eps, "t_star": window.t_star})
    meta = {"protocol": "velocity_sweep", "version": __version__, "M": M, "pin_site": pin,
            "wall_time_s": _time.perf_counter() - started}
    return RunOutput({"velocity": Table.from_rows(rows)}, rows, meta)


def run_spectrum(p: Dict, ctx: "RunContext") -> RunOutput:
    """Eigenvalues of the chain Hamiltonian; one row per U."""
    M, N = p["M"], p["N"]
    if isinstance(N, list):
        raise ConfigError("spectrum takes a single N", "parameters.N")
    basis = build_basis(M, N)
    n_levels = min(p.get("n_levels", basis.dimension), basis.dimension)
    rows, started = [], _time.perf_counter()
    for U in _as_list(p["U"]):
        eig = diagonalize(build_chain_hamiltonian(basis, _chain(p, U=U)),
                          p.get("dense_threshold", DENSE_THRESHOLD))
        row = {"U": U}
        if basis.dimension > M:
            row["gap"] = float(eig.eigenvalues[M] - eig.eigenvalues[M - 1])
        row.update({f"E_{k}": float(e) for k, e in enumerate(eig.eigenvalues[:n_levels])})
        rows.append(row)
    meta = {"protocol": "spectrum", "version": __version__, "M": M, "N": N,
            "dim": basis.dimension, "wall_time_s": _time.perf_counter() - started}
    return RunOutput({"spectrum": Table.from_rows(rows)}, rows, meta)


def run_dephased(p: Dict, ctx: "RunContext") -> RunOutput:
    common = _common(p)
    spec = ProtocolSpec(kind=p["base"], M=p["M"], N=p["N"], site=p["site"], J=p.get("J", 1.0),
                        U=p["U"], mu_pin=p.get("mu_pin", "band"), mu_ramp=p.get("mu_ramp", 0.0),
                        t_max=common["t_max"], dt=common["dt"])
    if spec.kind == "ramp" and "mu_ramp" not in p:
        raise ConfigError("ramp base protocol needs mu_ramp", "parameters.mu_ramp")
    dparams = DephasingParams(sigma_omega=p["sigma_omega"],
                              n_trajectories=p.get("n_trajectories", 100), seed=ctx.seed,
                              omega01=p.get("omega01", DEFAULT_OMEGA01))
    keep = p.get("keep_trajectories", False)
    res = run_dephased_protocol(spec, dparams, threads=ctx.threads, keep_trajectories=keep,
                                method=common["method"])
    out = protocol_output(res.mean)
    mu = np.array([d.mu for d in res.disorders])
    bonds = np.array([d.J_bonds for d in res.disorders])
    cols = ["trajectory"] + [f"omega_{i}" for i in range(1, spec.M + 1)] + \
           [f"J_{i}_{i + 1}" for i in range(1, spec.M)]
    out.tables["disorder"] = Table(cols, np.column_stack([np.arange(len(mu)), mu, bonds]))
    if keep:
        for k, traj in enumerate(res.trajectories):
            out.tables[f"trajectory_{k:04d}_density"] = protocol_output(traj).tables["density"]
    return out


RUNNERS: Dict[str, Callable[[Dict, "RunContext"], RunOutput]] = {
    "pin_release": run_pin,
    "stack_release": run_stack,
    "repulsive_quench": run_quench,
    "ramp": run_ramp_cfg,
    "source_drain": run_sd,
    "velocity_sweep": run_velocity_sweep,
    "spectrum": run_spectrum,
    "dephased": run_dephased,
}


@dataclass
class RunContext:
    seed: int = 0
    threads: int = 1


def execute(protocol: str, params: Dict, ctx: RunContext) -> RunOutput:
    return RUNNERS[protocol](params, ctx)
