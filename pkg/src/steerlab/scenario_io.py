"""Scenario files: JSON schema, unit conversion and construction of configs.

Rates may be given per field as ``*_hz`` (multiplied by 2 pi) or
``*_rad_s``.  The light coupling may instead be a ``cooperativity``, and
angles may be given as ``theta`` (rad) or ``theta_pi`` (units of pi).
"""

from __future__ import annotations

import copy
import json
import math
from pathlib import Path
from typing import Any

import jsonschema
import numpy as np

from .errors import ConfigError
from .model import TWO_PI, CascadeConfig, ChannelParams, OscillatorParams

_NUM = {"type": "number"}

_GRID = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "min": _NUM,
        "max": _NUM,
        "points": {"type": "integer", "minimum": 1},
        "scale": {"enum": ["lin", "log"]},
        "values": {"type": "array", "items": _NUM, "minItems": 1},
    },
}

_OSC = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "gamma_hz": _NUM,
        "gamma_rad_s": _NUM,
        "cooperativity": _NUM,
        "theta": _NUM,
        "theta_pi": _NUM,
        "gamma0_hz": _NUM,
        "gamma0_rad_s": _NUM,
        "nbar": _NUM,
        "omega_eff_hz": _NUM,
        "omega_eff_rad_s": _NUM,
    },
}

_AXIS = {
    "type": "object",
    "additionalProperties": False,
    "required": ["path", "min", "max", "points"],
    "properties": {
        "path": {"type": "string"},
        "min": _NUM,
        "max": _NUM,
        "points": {"type": "integer", "minimum": 1},
        "scale": {"enum": ["lin", "log"]},
    },
}

SCHEMA: dict[str, Any] = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "first": _OSC,
        "second": _OSC,
        "channel": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"epsilon": _NUM, "phi": _NUM, "phi_pi": _NUM},
        },
        "sweep": {
            "type": "object",
            "additionalProperties": False,
            "required": ["axes"],
            "properties": {"axes": {"type": "array", "items": _AXIS, "minItems": 1, "maxItems": 2}},
        },
        "optimize": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "objective": {"enum": ["e_pm", "e_mp"]},
                "preset": {"enum": ["hot_hot", "hot_vacuum"]},
                "epsilon": _NUM,
                "c_minus": _GRID,
                "modes": {"type": "array", "items": {"enum": ["free_angles", "symmetric_angles"]}},
                "client_first": {"type": "boolean"},
                "free": {"type": "array", "items": {"enum": ["c_plus", "c_minus", "theta_plus", "theta_minus", "phi"]}},
                "bounds": {
                    "type": "object",
                    "additionalProperties": {"type": "array", "items": _NUM, "minItems": 2, "maxItems": 2},
                },
                "mode": {"enum": ["free_angles", "symmetric_angles"]},
                "threshold": _NUM,
                "curve_points": {"type": "integer", "minimum": 0},
            },
        },
        "oracle": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "method": {"enum": ["lyapunov", "mc"]},
                "n_configs": {"type": "integer", "minimum": 1},
                "dt": _NUM,
                "t_end": _NUM,
                "n_traj": {"type": "integer", "minimum": 1},
                "burn_in_fraction": _NUM,
                "scheme": {"enum": ["euler", "midpoint"]},
                "batch_size": {"type": "integer", "minimum": 1},
                "chunk_steps": {"type": "integer", "minimum": 1},
                "z_max": _NUM,
            },
        },
        "conditional": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "monitored_quadratures_pi": {"type": "array", "items": _NUM, "minItems": 1},
                "efficiency": _NUM,
                "best_over_angles": {"type": "boolean"},
            },
        },
    },
}

_VALIDATOR = jsonschema.Draft202012Validator(SCHEMA)

# alternative spellings of one physical quantity; setting one clears the others
_ALIASES = (
    ("gamma_hz", "gamma_rad_s", "cooperativity"),
    ("theta", "theta_pi"),
    ("gamma0_hz", "gamma0_rad_s"),
    ("omega_eff_hz", "omega_eff_rad_s"),
    ("phi", "phi_pi"),
)


def _path(err: jsonschema.ValidationError) -> str:
    parts = [str(p) for p in err.absolute_path]
    if err.validator == "additionalProperties":
        extra = sorted(set(err.instance) - set(err.schema.get("properties", {})))
        parts += extra[:1]
    return ".".join(parts) or "<root>"


def validate_doc(doc: Any) -> None:
    """Schema check; the first error is raised as ConfigError naming the key path."""
    errors = sorted(_VALIDATOR.iter_errors(doc), key=lambda e: list(map(str, e.absolute_path)))
    if errors:
        e = errors[0]
        if e.validator == "additionalProperties":
            raise ConfigError(f"{_path(e)}: unknown key")
        raise ConfigError(f"{_path(e)}: {e.message}")


def load_scenario(path: str | Path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read scenario {path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: malformed JSON: {exc}") from exc
    validate_doc(doc)
    return doc


def _one(sec: dict, where: str, keys: tuple[str, ...], required: bool = True):
    present = [k for k in keys if k in sec]
    if len(present) > 1:
        raise ConfigError(f"{where}.{present[1]}: conflicts with {where}.{present[0]}")
    if not present:
        if required:
            raise ConfigError(f"{where}: one of {', '.join(keys)} is required")
        return None, None
    return present[0], float(sec[present[0]])


def _rate(sec: dict, where: str, base: str, required: bool = True):
    key, val = _one(sec, where, (base + "_hz", base + "_rad_s"), required)
    if key is None:
        return None
    return val * TWO_PI if key.endswith("_hz") else val


def oscillator_from_doc(sec: dict, where: str) -> OscillatorParams:
    gamma0 = _rate(sec, where, "gamma0")
    if "nbar" not in sec:
        raise ConfigError(f"{where}.nbar: required")
    nbar = float(sec["nbar"])
    tkey, tval = _one(sec, where, ("theta", "theta_pi"))
    theta = tval * math.pi if tkey == "theta_pi" else tval
    omega = _rate(sec, where, "omega_eff", required=False)
    gkey, gval = _one(sec, where, ("gamma_hz", "gamma_rad_s", "cooperativity"))
    if gkey == "cooperativity":
        try:
            return OscillatorParams.from_cooperativity(gval, theta, gamma0, nbar, omega)
        except Exception as exc:
            raise ConfigError(f"{where}.cooperativity: {exc}") from exc
    gamma = gval * TWO_PI if gkey == "gamma_hz" else gval
    return OscillatorParams(gamma, theta, gamma0, nbar, omega)


def config_from_doc(doc: dict) -> CascadeConfig:
    for sec in ("first", "second"):
        if sec not in doc:
            raise ConfigError(f"{sec}: required")
    ch = doc.get("channel", {})
    pkey, pval = _one(ch, "channel", ("phi", "phi_pi"), required=False)
    phi = 0.0 if pkey is None else (pval * math.pi if pkey == "phi_pi" else pval)
    return CascadeConfig(
        oscillator_from_doc(doc["first"], "first"),
        oscillator_from_doc(doc["second"], "second"),
        ChannelParams(float(ch.get("epsilon", 0.0)), phi),
    )


def with_override(doc: dict, path: str, value: float) -> dict:
    """Copy of ``doc`` with ``section.key`` set, clearing other spellings of that quantity."""
    try:
        sec, key = path.split(".")
    except ValueError:
        raise ConfigError(f"sweep path {path!r} must look like section.key") from None
    if sec not in ("first", "second", "channel"):
        raise ConfigError(f"sweep path {path!r}: unknown section {sec!r}")
    allowed = SCHEMA["properties"][sec]["properties"]
    if key not in allowed:
        raise ConfigError(f"sweep path {path!r}: unknown key {key!r}")
    out = copy.deepcopy(doc)
    target = out.setdefault(sec, {})
    for group in _ALIASES:
        if key in group:
            for k in group:
                target.pop(k, None)
    target[key] = float(value)
    return out


def grid_values(spec: dict, where: str) -> list[float]:
    if "values" in spec:
        return [float(v) for v in spec["values"]]
    for k in ("min", "max", "points"):
        if k not in spec:
            raise ConfigError(f"{where}.{k}: required")
    lo, hi, n = float(spec["min"]), float(spec["max"]), int(spec["points"])
    if spec.get("scale", "lin") == "log":
        if lo <= 0.0 or hi <= 0.0:
            raise ConfigError(f"{where}: log scale needs positive bounds")
        return [float(v) for v in np.logspace(math.log10(lo), math.log10(hi), n)]
    return [float(v) for v in np.linspace(lo, hi, n)]
