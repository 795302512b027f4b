"""bhsim command line: run, sweep, oracle, schema.

Exit codes: 0 success, 1 runtime failure, 2 bad config or arguments.
"""

from __future__ import annotations

import argparse
import itertools
import json
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np

from .. import __version__, oracles
from ..errors import ConvergenceError, DomainError
from .config import (PARAMETER_PROPERTIES, SCHEMA, ConfigError, ExperimentConfig, load_config,
                     to_j_units)
from .io import Table, atomic_write, csv_text, json_text, table_json, write_table
from .runners import RunContext, RunOutput, execute

log = logging.getLogger("bhsim")

EXIT_OK, EXIT_RUNTIME, EXIT_CONFIG = 0, 1, 2


class UsageError(Exception):
    pass


def resolve_threads(arg: Optional[int]) -> int:
    if arg is not None:
        threads = arg
    else:
        env = os.environ.get("BHSIM_THREADS", "")
        try:
            threads = int(env) if env.strip() else 1
        except ValueError:
            raise UsageError(f"BHSIM_THREADS must be an integer, got {env!r}")
    if threads < 1:
        raise UsageError("threads must be >= 1")
    return threads


def _comments(cfg: ExperimentConfig, extra: Optional[Dict] = None) -> Dict[str, str]:
    out = {"bhsim": __version__, "protocol": cfg.protocol, "config_digest": cfg.digest(),
           "units": "J (time in 1/J)"}
    out.update(extra or {})
    return out


def _write_output(out: RunOutput, stem: Path, cfg: ExperimentConfig, fmt: str,
                  comments: Dict[str, str]) -> List[Path]:
    paths = []
    for name, table in out.tables.items():
        paths.append(write_table(Path(f"{stem}_{name}"), table, comments, fmt))
    meta = dict(out.metadata)
    meta.update(config=cfg.raw, resolved=cfg.resolved(), config_digest=cfg.digest(),
                seed=cfg.seed, version=__version__)
    meta_path = Path(f"{stem}_meta.json")
    atomic_write(meta_path, json_text(meta))
    paths.append(meta_path)
    return paths


def _output_stem(cfg: ExperimentConfig, out_dir: Optional[str]) -> Path:
    if cfg.output_path:
        p = Path(cfg.output_path)
        return (Path(out_dir) / p.name) if out_dir else p
    return Path(out_dir or ".") / cfg.name


def _apply_overrides(cfg: ExperimentConfig, args) -> str:
    if args.seed is not None:
        if not 0 <= args.seed < 2 ** 64:
            raise UsageError("--seed must be a 64-bit unsigned integer")
        cfg.seed = args.seed
    return args.format or cfg.output_format


def cmd_run(args) -> int:
    cfg = load_config(args.config)
    if cfg.grid:
        raise ConfigError("config has grid axes; use 'bhsim sweep'", "grid")
    fmt = _apply_overrides(cfg, args)
    ctx = RunContext(seed=cfg.seed, threads=resolve_threads(args.threads))
    out = execute(cfg.protocol, cfg.parameters, ctx)
    paths = _write_output(out, _output_stem(cfg, args.out_dir), cfg, fmt, _comments(cfg))
    for p in paths:
        print(p)
    return EXIT_OK


def expand_axis(name: str, spec) -> List[float]:
    if isinstance(spec, dict):
        start, stop, step = spec["start"], spec["stop"], spec["step"]
        n = int(np.floor((stop - start) / step + 1e-9)) + 1
        vals = [start + k * step for k in range(max(n, 0))]
        return [round(v, 12) for v in vals]
    return list(spec)


def grid_points(grid: Dict, cap: int) -> List[Dict[str, float]]:
    if not grid:
        raise ConfigError("sweep needs at least one grid axis", "grid")
    axes = {name: expand_axis(name, spec) for name, spec in grid.items()}
    for name, vals in axes.items():
        if not vals:
            raise ConfigError("grid axis is empty", f"grid.{name}")
    size = int(np.prod([len(v) for v in axes.values()]))
    if size > cap:
        raise ConfigError(f"grid has {size} points, above the cap of {cap}", "grid_cap")
    names = list(axes)
    return [dict(zip(names, combo)) for combo in itertools.product(*(axes[n] for n in names))]


def _point_params(cfg: ExperimentConfig, point: Dict) -> Dict:
    params = dict(cfg.raw["parameters"])
    for key, val in point.items():
        if key not in PARAMETER_PROPERTIES:
            raise ConfigError("unknown parameter", f"grid.{key}")
        if PARAMETER_PROPERTIES[key].get("type") == "integer" or key in ("M", "N", "N_total"):
            if float(val) != int(val):
                raise ConfigError("integer parameter given a fractional value", f"grid.{key}")
            val = int(val)
        params[key] = val
    raw = dict(cfg.raw, parameters=params)
    raw.pop("grid", None)
    ExperimentConfig.from_dict(raw)  # schema check of the concrete point
    return to_j_units(params) if cfg.units == "physical" else params


def cmd_sweep(args) -> int:
    cfg = load_config(args.config)
    fmt = _apply_overrides(cfg, args)
    points = grid_points(cfg.grid, cfg.grid_cap)
    point_params = [_point_params(cfg, pt) for pt in points]
    threads = resolve_threads(args.threads)
    stem = _output_stem(cfg, args.out_dir)
    point_dir = Path(f"{stem}_points")
    comments = _comments(cfg)

    def one(idx: int) -> List[Dict]:
        pdir = point_dir / f"p{idx:05d}"
        marker = pdir / ".done"
        digest = json.dumps(point_params[idx], sort_keys=True)
        if marker.exists() and marker.read_text() == digest:
            return json.loads((pdir / "summary.json").read_text())
        ctx = RunContext(seed=cfg.seed, threads=1)
        out = execute(cfg.protocol, point_params[idx], ctx)
        extra = {"grid_point": json.dumps(points[idx], sort_keys=True)}
        for name, table in out.tables.items():
            write_table(pdir / name, table, dict(comments, **extra), fmt)
        rows = [dict(points[idx], **{k: v for k, v in r.items() if k not in points[idx]})
                for r in out.summary]
        # key order is the column order of the summary table
        atomic_write(pdir / "summary.json", json_text(rows, sort_keys=False))
        atomic_write(marker, digest)
        return rows

    if threads == 1:
        results = [one(i) for i in range(len(points))]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(one, range(len(points))))
    rows = [dict(point=i, **r) for i, rs in enumerate(results) for r in rs]
    path = write_table(Path(f"{stem}_summary"), Table.from_rows(rows), comments, fmt)
    atomic_write(Path(f"{stem}_meta.json"),
                 json_text({"config": cfg.raw, "resolved": cfg.resolved(),
                            "config_digest": cfg.digest(), "seed": cfg.seed,
                            "version": __version__, "n_points": len(points)}))
    print(path)
    return EXIT_OK


ORACLES = {
    "mu_band": (oracles.mu_band, ("U", "N", "J"), {"J": 1.0}),
    "soliton_width": (oracles.soliton_width, ("mu_pin", "U", "N", "J"), {"J": 1.0}),
    "j_tilde": (oracles.j_tilde, ("U", "N", "J"), {"J": 1.0}),
    "u_critical": (oracles.u_critical, ("N", "J"), {"J": 1.0}),
    "velocity_scaling_variable": (oracles.velocity_scaling_variable, ("U", "N", "J"), {"J": 1.0}),
    "multiphoton_resonance_detuning": (oracles.multiphoton_resonance_detuning, ("U", "N"), {}),
    "parity_crossover": (oracles.parity_crossover, ("M", "Jprime", "J"), {"J": 1.0}),
    "quantum_walk_velocity": (oracles.quantum_walk_velocity, ("J",), {"J": 1.0}),
}
INT_ARGS = ("N", "M")


def _oracle_multi(name: str, kw: Dict) -> Dict[str, float]:
    if name == "tight_binding_energies":
        e = oracles.tight_binding_energies(int(kw["M"]), kw.get("J", 1.0), kw.get("omega01", 0.0))
        return {f"E_{k}": float(v) for k, v in enumerate(e)}
    if name == "resonant_sd_densities":
        n_s, n_d, n_c = oracles.resonant_sd_densities(int(kw["M"]), kw["Jprime"], kw["N_total"], kw["t"])
        return {"n_S": float(n_s), "n_D": float(n_d), "N_chain": float(n_c)}
    if name == "off_resonant_sd":
        red = oracles.off_resonant_sd(int(kw["M"]), kw["Jprime"], kw.get("J", 1.0))
        return {"beta": red.beta, "omega_plus": red.omega_plus, "omega_minus": red.omega_minus,
                "alpha": red.alpha_beat, "omega_minus_corrected": red.omega_minus_corrected}
    raise KeyError(name)


MULTI_ORACLES = {"tight_binding_energies": ("M", "J", "omega01"),
                 "resonant_sd_densities": ("M", "Jprime", "N_total", "t"),
                 "off_resonant_sd": ("M", "Jprime", "J")}


def parse_axis(text: str):
    if "=" not in text:
        raise UsageError(f"expected name=values, got {text!r}")
    name, spec = text.split("=", 1)
    try:
        if ":" in spec:
            start, stop, step = (float(s) for s in spec.split(":"))
            if step <= 0:
                raise UsageError(f"step must be positive in {text!r}")
            vals = expand_axis(name, {"start": start, "stop": stop, "step": step})
        else:
            vals = [float(s) for s in spec.split(",") if s.strip()]
    except ValueError:
        raise UsageError(f"cannot parse values in {text!r}")
    if not vals:
        raise UsageError(f"grid axis {name!r} is empty")
    return name.strip(), vals


def cmd_oracle(args) -> int:
    if args.name in ORACLES:
        fn, names, defaults = ORACLES[args.name]
    elif args.name in MULTI_ORACLES:
        fn, names, defaults = None, MULTI_ORACLES[args.name], {"J": 1.0, "omega01": 0.0}
    else:
        known = sorted(list(ORACLES) + list(MULTI_ORACLES))
        raise UsageError(f"unknown oracle {args.name!r}; choose from {', '.join(known)}")
    axes = dict(parse_axis(g) for g in (args.grid or []))
    for text in args.param or []:
        key, vals = parse_axis(text)
        if len(vals) != 1:
            raise UsageError(f"--param {key} takes a single value")
        axes[key] = vals
    for key in axes:
        if key not in names:
            raise UsageError(f"oracle {args.name} takes {', '.join(names)}; got {key!r}")
    for key in names:
        if key not in axes:
            if key not in defaults:
                raise UsageError(f"oracle {args.name} needs {key} (use --grid or --param)")
            axes[key] = [defaults[key]]
    rows = []
    order = [k for k in names]
    for combo in itertools.product(*(axes[k] for k in order)):
        kw = {k: (int(v) if k in INT_ARGS else v) for k, v in zip(order, combo)}
        if any(k in INT_ARGS and float(v) != int(v) for k, v in zip(order, combo)):
            raise UsageError("M and N must be integers")
        row = dict(kw)
        if fn is not None:
            row["value"] = float(fn(**kw))
        else:
            row.update(_oracle_multi(args.name, kw))
        rows.append(row)
    table = Table.from_rows(rows)
    comments = {"bhsim": __version__, "oracle": args.name}
    fmt = args.format or "csv"
    if args.out_dir:
        print(write_table(Path(args.out_dir) / f"oracle_{args.name}", table, comments, fmt))
    else:
        sys.stdout.write(csv_text(table, comments) if fmt == "csv" else table_json(table, comments))
    return EXIT_OK


def cmd_schema(args) -> int:
    sys.stdout.write(json.dumps(SCHEMA, indent=2) + "\n")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out-dir", help="directory for output files")
    common.add_argument("--threads", type=int, help="worker threads (fallback: BHSIM_THREADS)")
    common.add_argument("--seed", type=int, help="override the config seed")
    common.add_argument("--format", choices=("csv", "json"), help="table format")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="bhsim", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"bhsim {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("run", parents=[common], help="run one experiment config")
    p.add_argument("config")
    p.set_defaults(func=cmd_run)
    p = sub.add_parser("sweep", parents=[common], help="run a config over its grid axes")
    p.add_argument("config")
    p.set_defaults(func=cmd_sweep)
    p = sub.add_parser("oracle", parents=[common], help="tabulate a closed-form result")
    p.add_argument("name")
    p.add_argument("--grid", action="append", metavar="NAME=a,b,c|start:stop:step")
    p.add_argument("--param", action="append", metavar="NAME=value")
    p.set_defaults(func=cmd_oracle)
    p = sub.add_parser("schema", help="print the config JSON schema")
    p.set_defaults(func=cmd_schema)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, UsageError) as exc:
        print(f"bhsim: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DomainError as exc:
        print(f"bhsim: invalid parameters: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ConvergenceError, ArithmeticError, MemoryError, OSError, RuntimeError, ValueError) as exc:
        print(f"bhsim: runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
