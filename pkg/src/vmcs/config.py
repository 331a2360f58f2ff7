"""Run configuration: JSON schema, validation and defaults."""

from __future__ import annotations

import copy
import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path

import jsonschema

from .eom import GRADIENT_MODES

_NUMBER = {"type": "number"}
_POS_INT = {"type": "integer", "minimum": 1}

SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "vmcs run configuration",
    "type": "object",
    "additionalProperties": False,
    "required": ["lattice", "model"],
    "properties": {
        "lattice": {
            "type": "object",
            "additionalProperties": False,
            "required": ["Lx"],
            "properties": {
                "Lx": _POS_INT,
                "Ly": {**_POS_INT, "default": 1},
                "periodic": {"type": "boolean", "default": True},
            },
        },
        "model": {
            "type": "object",
            "additionalProperties": False,
            "required": ["g", "V", "gamma"],
            "properties": {
                "g": _NUMBER,
                "V": _NUMBER,
                "gamma": {"type": "number", "minimum": 0},
                "v_eff_override": {"type": ["number", "null"], "default": None},
            },
        },
        "ansatz": {
            "type": "object",
            "additionalProperties": False,
            "default": {},
            "properties": {
                "N_c": {**_POS_INT, "default": 1},
                "perturbation": {"type": "number", "minimum": 0, "exclusiveMaximum": 0.5, "default": 0.01},
                "seed": {"type": "integer", "default": 0},
                "symmetrize": {"type": "boolean", "default": True},
                "point_group": {"type": "boolean", "default": False},
                "direction": {
                    "type": "array",
                    "items": _NUMBER,
                    "minItems": 3,
                    "maxItems": 3,
                    "default": [1.0, 0.0, 0.0],
                },
            },
        },
        "integration": {
            "type": "object",
            "additionalProperties": False,
            "default": {},
            "properties": {
                "t_final": {"type": "number", "exclusiveMinimum": 0, "default": 10.0},
                "dt": {"type": "number", "exclusiveMinimum": 0, "default": 0.01},
                "record_every": {**_POS_INT, "default": 10},
                "tail_fraction": {"type": "number", "exclusiveMinimum": 0, "maximum": 0.5, "default": 0.2},
                "max_trace_drift": {"type": "number", "exclusiveMinimum": 0, "default": 0.01},
            },
        },
        "eom": {
            "type": "object",
            "additionalProperties": False,
            "default": {},
            "properties": {
                "epsilon": {"type": "number", "minimum": 1e-12, "maximum": 1e-6, "default": 1e-10},
                "gradient_mode": {"enum": list(GRADIENT_MODES), "default": "closed_form"},
            },
        },
        "output": {
            "type": "object",
            "additionalProperties": False,
            "default": {},
            "properties": {
                "directory": {"type": "string", "default": "vmcs_out"},
                "format": {"enum": ["csv", "json"], "default": "csv"},
                "site_resolved": {"type": "boolean", "default": True},
            },
        },
    },
}

SWEEP_PARAMETERS = ("g", "V", "gamma", "N_c")


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending field."""


@dataclass(frozen=True)
class LatticeConfig:
    Lx: int
    Ly: int
    periodic: bool


@dataclass(frozen=True)
class ModelConfig:
    g: float
    V: float
    gamma: float
    v_eff_override: float | None


@dataclass(frozen=True)
class AnsatzConfig:
    N_c: int
    perturbation: float
    seed: int
    symmetrize: bool
    point_group: bool
    direction: tuple[float, float, float]


@dataclass(frozen=True)
class IntegrationConfig:
    t_final: float
    dt: float
    record_every: int
    tail_fraction: float
    max_trace_drift: float


@dataclass(frozen=True)
class EomOptions:
    epsilon: float
    gradient_mode: str


@dataclass(frozen=True)
class OutputConfig:
    directory: str
    format: str
    site_resolved: bool


@dataclass(frozen=True)
class RunConfig:
    lattice: LatticeConfig
    model: ModelConfig
    ansatz: AnsatzConfig
    integration: IntegrationConfig
    eom: EomOptions
    output: OutputConfig

    def to_dict(self) -> dict:
        out = asdict(self)
        out["ansatz"]["direction"] = list(self.ansatz.direction)
        return out

    def replace(self, section: str, **changes) -> "RunConfig":
        data = self.to_dict()
        data[section].update(changes)
        return parse_config(data)


def _field_path(err: jsonschema.ValidationError) -> str:
    parts = [str(p) for p in err.absolute_path]
    if err.validator == "required" and isinstance(err.instance, dict):
        missing = [k for k in err.validator_value if k not in err.instance]
        parts += missing[:1]
    elif err.validator == "additionalProperties" and isinstance(err.instance, dict):
        allowed = set(err.schema.get("properties", {}))
        extra = sorted(k for k in err.instance if k not in allowed)
        parts += extra[:1]
    return ".".join(parts) or "<root>"


def _fill_defaults(data: dict, schema: dict) -> dict:
    out = copy.deepcopy(data)
    for key, sub in schema.get("properties", {}).items():
        if key not in out and "default" in sub:
            out[key] = copy.deepcopy(sub["default"])
        if sub.get("type") == "object" and isinstance(out.get(key), dict):
            out[key] = _fill_defaults(out[key], sub)
    return out


_VALIDATOR = jsonschema.Draft202012Validator(SCHEMA)


def parse_config(data: dict) -> RunConfig:
    """Validate a configuration mapping and fill in defaults.

    Raises:
        ConfigError: naming the dotted field path of the first problem.
    """
    if not isinstance(data, dict):
        raise ConfigError("<root>: configuration must be a JSON object")
    errors = sorted(_VALIDATOR.iter_errors(data), key=lambda e: (list(e.absolute_path), e.message))
    if errors:
        err = errors[0]
        raise ConfigError(f"{_field_path(err)}: {err.message}")
    full = _fill_defaults(data, SCHEMA)
    for key in ("g", "V", "gamma"):
        if not math.isfinite(full["model"][key]):
            raise ConfigError(f"model.{key}: must be finite")
    lat = full["lattice"]
    if lat["Lx"] * lat["Ly"] < 1:
        raise ConfigError("lattice: no sites")
    d = full["ansatz"]["direction"]
    norm = math.sqrt(sum(x * x for x in d))
    if abs(norm - 1.0) > 1e-12:
        raise ConfigError(f"ansatz.direction: must be a unit vector, norm is {norm}")
    return RunConfig(
        lattice=LatticeConfig(**lat),
        model=ModelConfig(**full["model"]),
        ansatz=AnsatzConfig(**{**full["ansatz"], "direction": tuple(float(x) for x in d)}),
        integration=IntegrationConfig(**full["integration"]),
        eom=EomOptions(**full["eom"]),
        output=OutputConfig(**full["output"]),
    )


def load_config(path) -> RunConfig:
    """Read a configuration file; a run manifest is accepted as well.

    Raises:
        ConfigError: on unreadable JSON or a schema violation.
    """
    try:
        data = json.loads(Path(path).read_text())
    except FileNotFoundError as exc:
        raise ConfigError(f"<root>: cannot read {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"<root>: invalid JSON ({exc})") from exc
    if isinstance(data, dict) and "vmcs_manifest" in data:
        data = data.get("config")
    return parse_config(data)
