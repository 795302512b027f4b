"""Experiment configs: JSON schema, validation, unit conversion."""

from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import dataclass, field
from math import pi
from pathlib import Path
from typing import Any, Dict, Optional

import jsonschema

PROTOCOLS = ("pin_release", "stack_release", "repulsive_quench", "ramp", "source_drain",
             "velocity_sweep", "spectrum", "dephased")
FORMATS = ("csv", "json")
DEFAULT_GRID_CAP = 10_000

ENERGY_KEYS = ("J", "U", "U_evolve", "U_prep", "mu_pin", "mu_ramp", "Jprime", "delta",
               "omega01", "sigma_omega")
TIME_KEYS = ("t_max", "dt", "t_eps", "t_star")


class ConfigError(Exception):
    """Invalid experiment config; ``path`` is the dotted location of the problem."""

    def __init__(self, message: str, path: str = ""):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path


_num = {"type": "number"}
_pos = {"type": "number", "exclusiveMinimum": 0}
_int1 = {"type": "integer", "minimum": 1}
_num_or_list = {"oneOf": [_num, {"type": "array", "items": _num, "minItems": 1}]}
_int_or_list = {"oneOf": [_int1, {"type": "array", "items": _int1, "minItems": 1}]}
_mu_pin = {"oneOf": [{"type": "number", "minimum": 0}, {"const": "band"}]}

PARAMETER_PROPERTIES = {
    "M": _int1, "N": _int_or_list, "N_total": _int1, "J": _pos, "U": _num_or_list,
    "U_evolve": _num, "U_prep": _num, "omega01": _num, "pin_site": _int1, "site": _int1,
    "ramp_site": _int1, "mu_pin": _mu_pin, "mu_ramp": _num, "Jprime": {"type": "number", "minimum": 0},
    "delta": _num, "stack_N": _int1, "t_max": _pos, "dt": _pos, "t_eps": {"type": "number", "minimum": 0},
    "t_star": _pos, "method": {"enum": ["auto", "dense", "krylov"]}, "dense_threshold": _int1,
    "n_levels": _int1, "base": {"enum": ["pin_release", "stack_release", "ramp"]},
    "sigma_omega": {"type": "number", "minimum": 0}, "n_trajectories": _int1,
    "keep_trajectories": {"type": "boolean"},
}

REQUIRED = {
    "pin_release": ["M", "N", "U", "pin_site"],
    "stack_release": ["M", "N", "U", "site"],
    "repulsive_quench": ["M", "N", "pin_site", "U_prep", "U_evolve"],
    "ramp": ["M", "N", "U", "ramp_site", "mu_ramp"],
    "source_drain": ["M", "N_total", "U", "Jprime", "delta"],
    "velocity_sweep": ["M", "N", "U"],
    "spectrum": ["M", "N", "U"],
    "dephased": ["base", "M", "N", "U", "site", "sigma_omega"],
}

# protocols whose N and U must be single numbers
SCALAR_NU = ("pin_release", "stack_release", "repulsive_quench", "ramp", "dephased")

_axis = {"oneOf": [
    {"type": "array", "items": _num},
    {"type": "object", "required": ["start", "stop", "step"], "additionalProperties": False,
     "properties": {"start": _num, "stop": _num, "step": _pos}},
]}


def _protocol_rule(name: str) -> Dict:
    then: Dict[str, Any] = {"properties": {"parameters": {"required": REQUIRED[name]}}}
    if name in SCALAR_NU:
        then["properties"]["parameters"]["properties"] = {"N": _int1, "U": _num}
    return {"if": {"properties": {"protocol": {"const": name}}}, "then": then}


SCHEMA: Dict[str, Any] = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "title": "bhsim experiment",
    "type": "object",
    "required": ["protocol", "parameters"],
    "additionalProperties": False,
    "properties": {
        "name": {"type": "string", "pattern": "^[A-Za-z0-9_.-]+$"},
        "protocol": {"enum": list(PROTOCOLS)},
        "units": {"enum": ["J-units", "physical"]},
        "seed": {"type": "integer", "minimum": 0, "maximum": 2 ** 64 - 1},
        "parameters": {"type": "object", "additionalProperties": False,
                       "properties": PARAMETER_PROPERTIES},
        "output": {"type": "object", "additionalProperties": False,
                   "properties": {"path": {"type": "string"}, "format": {"enum": list(FORMATS)}}},
        "grid": {"type": "object", "additionalProperties": _axis},
        "grid_cap": _int1,
    },
    "allOf": [_protocol_rule(p) for p in PROTOCOLS],
}


def _error_path(err: jsonschema.ValidationError) -> str:
    parts = [str(p) for p in err.absolute_path]
    if err.validator == "required":
        missing = [k for k in err.validator_value if k not in (err.instance or {})]
        if missing:
            parts.append(missing[0])
    elif err.validator == "additionalProperties" and isinstance(err.instance, dict):
        allowed = set(err.schema.get("properties", {}))
        extra = sorted(k for k in err.instance if k not in allowed)
        if extra:
            parts.append(extra[0])
    return ".".join(parts)


def validate(raw: Dict) -> None:
    validator = jsonschema.Draft7Validator(SCHEMA)
    errors = sorted(validator.iter_errors(raw), key=lambda e: (len(list(e.absolute_path)), e.message))
    if not errors:
        return
    # descend into if/then failures so the message names the leaf field
    err = errors[0]
    while err.context:
        err = sorted(err.context, key=lambda e: len(list(e.absolute_path)))[0]
    raise ConfigError(err.message, _error_path(err) or "<root>")


def to_j_units(params: Dict) -> Dict:
    """Convert a physical-units parameter block to units of J.

    Energies are frequencies f in MHz (E/h); the scale is ``J``. Times are in
    microseconds and become J t = 2 pi f_J t.
    """
    if "J" not in params:
        raise ConfigError("physical units need J (in MHz) as the energy scale", "parameters.J")
    out = copy.deepcopy(params)
    scale = float(params["J"])
    for key in ENERGY_KEYS:
        if key in out and not isinstance(out[key], str):
            val = out[key]
            out[key] = [v / scale for v in val] if isinstance(val, list) else val / scale
    for key in TIME_KEYS:
        if key in out:
            out[key] = out[key] * 2.0 * pi * scale
    out["J"] = 1.0
    return out


@dataclass
class ExperimentConfig:
    protocol: str
    parameters: Dict[str, Any]
    name: str = "experiment"
    units: str = "J-units"
    seed: int = 0
    output_path: Optional[str] = None
    output_format: str = "csv"
    grid: Dict[str, Any] = field(default_factory=dict)
    grid_cap: int = DEFAULT_GRID_CAP
    raw: Dict[str, Any] = field(default_factory=dict, repr=False)

    @classmethod
    def from_dict(cls, raw: Dict, default_name: str = "experiment") -> "ExperimentConfig":
        validate(raw)
        params = dict(raw["parameters"])
        units = raw.get("units", "J-units")
        if units == "physical":
            params = to_j_units(params)
        out = raw.get("output", {})
        return cls(protocol=raw["protocol"], parameters=params,
                   name=raw.get("name", default_name), units=units, seed=raw.get("seed", 0),
                   output_path=out.get("path"), output_format=out.get("format", "csv"),
                   grid=dict(raw.get("grid", {})), grid_cap=raw.get("grid_cap", DEFAULT_GRID_CAP),
                   raw=copy.deepcopy(raw))

    def resolved(self) -> Dict[str, Any]:
        """Everything that determines the numbers, in J units."""
        return {"protocol": self.protocol, "parameters": self.parameters, "seed": self.seed,
                "grid": self.grid}

    def digest(self) -> str:
        payload = json.dumps(self.resolved(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(payload.encode()).hexdigest()[:16]


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", str(path)) from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON at line {exc.lineno}: {exc.msg}", str(path)) from exc
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object", "<root>")
    return ExperimentConfig.from_dict(raw, default_name=path.stem)
