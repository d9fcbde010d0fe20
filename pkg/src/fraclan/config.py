"""Flat INI experiment configs with per-command schemas.

A config file holds one ``[command]`` section of ``key = value`` pairs.
Scalars parse as int/float/str, vectors and matrices as JSON-style
bracketed lists.  Unknown keys are rejected outright (typo safety), and
every run writes back a resolved sidecar that re-parses to the same
values.
"""

from __future__ import annotations

import configparser
import json
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError

__all__ = ["COMMANDS", "load_config", "resolve_config", "dump_config", "write_sidecar"]


@dataclass(frozen=True)
class _Field:
    kind: str  # int | float | str | list | matrix | bool
    required: bool = False
    default: object = None


_COMMON = {
    "seed": _Field("int", default=0),
    "threads": _Field("int", default=1),
}

SCHEMAS: dict[str, dict[str, _Field]] = {
    "sample-fbm": {
        **_COMMON,
        "h": _Field("float", required=True),
        "tau": _Field("float", required=True),
        "n_steps": _Field("int", required=True),
        "m_replicas": _Field("int", default=1),
    },
    "solve": {
        **_COMMON,
        "drift": _Field("str", required=True),
        "theta": _Field("list", required=True),
        "sigma": _Field("matrix", default=[[1.0]]),
        "y0": _Field("list", default=[0.0]),
        "h": _Field("float", required=True),
        "tau": _Field("float", required=True),
        "delta": _Field("float", required=True),
        "m_replicas": _Field("int", default=1),
        "coupling": _Field("str", default="w_to_b"),
        "t_minus_factor": _Field("float", default=50.0),
    },
    "lan": {
        **_COMMON,
        "drift": _Field("str", required=True),
        "theta": _Field("list", required=True),
        "u": _Field("list", required=True),
        "h": _Field("float", required=True),
        "tau_list": _Field("list", required=True),
        "delta": _Field("float", required=True),
        "m_replicas": _Field("int", required=True),
        "y0": _Field("list", default=[0.0]),
        "t_minus_factor": _Field("float", default=50.0),
    },
    "gamma": {
        **_COMMON,
        "drift": _Field("str", required=True),
        "theta": _Field("list", required=True),
        "h": _Field("float", required=True),
        "sigma": _Field("float", default=1.0),
        "tau": _Field("float", required=True),
        "delta": _Field("float", required=True),
        "m_replicas": _Field("int", required=True),
        "r_max": _Field("float", required=True),
        "n_r": _Field("int", required=True),
        "m_quad": _Field("int", default=0),  # 0 -> reuse m_replicas
    },
    "mle-fou": {
        **_COMMON,
        "theta": _Field("float", required=True),
        "h": _Field("float", required=True),
        "tau": _Field("float", required=True),
        "delta": _Field("float", required=True),
        "m_replicas": _Field("int", required=True),
        "sigma": _Field("float", default=1.0),
        "grid_points": _Field("int", default=16),
    },
}

COMMANDS = tuple(SCHEMAS)


def _parse_value(command: str, key: str, raw: str, field: _Field):
    raw = raw.strip()
    try:
        if field.kind == "int":
            return int(raw)
        if field.kind == "float":
            return float(raw)
        if field.kind == "bool":
            if raw.lower() in ("true", "yes", "1"):
                return True
            if raw.lower() in ("false", "no", "0"):
                return False
            raise ValueError(raw)
        if field.kind == "str":
            return raw.strip("\"'")
        value = json.loads(raw)
        if field.kind == "list":
            value = [float(v) for v in value]
            return value
        if field.kind == "matrix":
            arr = np.asarray(value, dtype=float)
            if arr.ndim != 2:
                raise ValueError("matrix must be a list of rows")
            return arr.tolist()
    except (ValueError, json.JSONDecodeError) as exc:
        raise ConfigError(
            f"[{command}] bad value for '{key}': {raw!r} ({exc})"
        ) from None
    raise ConfigError(f"internal: unknown field kind {field.kind}")


def resolve_config(command: str, raw_items: dict[str, str]) -> dict:
    """Validate raw string key/values against the schema for ``command``."""
    if command not in SCHEMAS:
        raise ConfigError(f"unknown command '{command}' (choose from {COMMANDS})")
    schema = SCHEMAS[command]
    unknown = sorted(set(raw_items) - set(schema))
    if unknown:
        raise ConfigError(f"[{command}] unknown keys: {', '.join(unknown)}")
    out = {}
    for key, field in schema.items():
        if key in raw_items:
            out[key] = _parse_value(command, key, raw_items[key], field)
        elif field.required:
            raise ConfigError(f"[{command}] missing required key '{key}'")
        else:
            out[key] = field.default
    return out


def load_config(path: str, command: str) -> dict:
    parser = configparser.ConfigParser()
    read = parser.read(path)
    if not read:
        raise ConfigError(f"config file not found: {path}")
    if command not in parser:
        raise ConfigError(f"config file {path} has no [{command}] section")
    return resolve_config(command, dict(parser[command]))


def _format_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (list, tuple)):
        return json.dumps(value)
    return str(value)


def dump_config(command: str, values: dict) -> str:
    # 'threads' is an execution knob, not part of the experiment: leaving it
    # out keeps every emitted file byte-identical across --threads values.
    lines = [f"[{command}]"]
    for key in SCHEMAS[command]:
        if key == "threads":
            continue
        lines.append(f"{key} = {_format_value(values[key])}")
    return "\n".join(lines) + "\n"


def write_sidecar(path, command: str, values: dict) -> None:
    """Write the resolved config next to the outputs; it re-parses to the
    same values via :func:`load_config`."""
    with open(path, "w") as fh:
        fh.write(dump_config(command, values))
