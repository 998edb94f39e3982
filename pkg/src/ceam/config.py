"""JSON run configuration: strict schema, defaults, and conversion to model objects."""

from __future__ import annotations

import copy
import json
import math
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Optional

import jsonschema

from .disorder import DisorderSpec, disorder_from_si, ideal_working_point
from .model import TWO_PI, IdealArraySpec, SIConfig, SystemSpec, homogeneous_system, to_internal_units

MODES = ("sweep", "scaling", "working-point", "disorder", "estimate", "validate-linear-response")
OUT_DIR_ENV = "CEAM_SIM_OUT_DIR"
DEFAULT_OUT_DIR = "ceam-out"

_pos = {"type": "number", "exclusiveMinimum": 0}
_nonneg = {"type": "number", "minimum": 0}
_count = {"type": "integer", "minimum": 1}

SCHEMA: dict[str, Any] = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "ceam-sim run configuration",
    "type": "object",
    "additionalProperties": False,
    "required": ["system"],
    "properties": {
        "mode": {"enum": list(MODES)},
        "master_seed": {"type": "integer", "minimum": 0, "maximum": 2**64 - 1},
        "system": {
            "oneOf": [
                {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["units", "n_atoms", "transition_frequency_hz", "gamma_hz",
                                 "group_velocity_m_s", "detuning_hz"],
                    "properties": {
                        "units": {"const": "si"},
                        "n_atoms": _count,
                        "transition_frequency_hz": _pos,
                        "gamma_hz": _pos,
                        "gamma_prime_hz": _nonneg,
                        "detuning_hz": {"type": "number"},
                        "group_velocity_m_s": _pos,
                        "spacing_m": _pos,
                        "boundary_distance_m": _pos,
                    },
                },
                {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["units", "n_atoms", "detuning"],
                    "properties": {
                        "units": {"const": "internal"},
                        "n_atoms": _count,
                        "detuning": {"type": "number"},
                        "gamma": _pos,
                        "gamma_prime": _nonneg,
                        "spacing": _pos,
                        "boundary_distance": _pos,
                        "probe_frequency": _pos,
                    },
                },
            ]
        },
        "disorder": {
            "oneOf": [
                {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["units"],
                    "properties": {
                        "units": {"const": "si"},
                        "sigma_frequency_hz": _nonneg,
                        "sigma_decay_hz": _nonneg,
                        "sigma_position_m": _nonneg,
                        "truncation": _pos,
                        "n_samples": _count,
                    },
                },
                {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["units"],
                    "properties": {
                        "units": {"const": "internal"},
                        "sigma_omega": _nonneg,
                        "sigma_gamma": _nonneg,
                        "sigma_x": _nonneg,
                        "truncation": _pos,
                        "n_samples": _count,
                    },
                },
            ]
        },
        "estimation": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "shots": _count,
                "repetitions": _count,
                "window_halfwidth": _pos,
                "readout_phase": {"type": "number"},
                "kx_true": _pos,
            },
        },
        "grid": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "points": {"type": "integer", "minimum": 2},
                "kx_min": {"type": "number"},
                "kx_max": {"type": "number"},
            },
        },
        "scaling": {
            "type": "object",
            "additionalProperties": False,
            "required": ["n_list"],
            "properties": {
                "n_list": {"type": "array", "items": _count, "minItems": 1},
                "fit_min_n": _count,
            },
        },
        "linear_response": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "perturbation_scale": _pos,
                "detuning_list": {"type": "array", "items": _pos, "minItems": 2},
                "n_list": {"type": "array", "items": _count, "minItems": 2},
            },
        },
        "output": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "directory": {"type": "string"},
                "prefix": {"type": "string"},
                "format": {"const": "csv"},
            },
        },
    },
}

MODE_BLOCKS = {"scaling": ["scaling"], "disorder": ["disorder"], "estimate": ["estimation"]}


class ConfigError(ValueError):
    def __init__(self, message: str, path: str = ""):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path


@dataclass
class RunConfig:
    mode: str
    raw: dict
    resolved: dict
    system: SystemSpec
    disorder: Optional[DisorderSpec]
    master_seed: int

    @property
    def seed(self) -> int:
        return self.master_seed


def _path(err: jsonschema.ValidationError) -> str:
    return "/".join(str(p) for p in err.absolute_path) or "<root>"


def _leaf(err: jsonschema.ValidationError) -> jsonschema.ValidationError:
    """Descend into the oneOf branch whose ``units`` tag matched."""
    if err.validator != "oneOf" or not err.context:
        return err
    branches: dict[int, list] = {}
    for sub in err.context:
        branches.setdefault(sub.relative_schema_path[0], []).append(sub)
    matching = [
        errs for errs in branches.values()
        if not any(e.validator == "const" and list(e.relative_path) == ["units"] for e in errs)
    ]
    if len(matching) != 1:
        return err
    errs = matching[0]
    unknown = [e for e in errs if e.validator == "additionalProperties"]
    return _leaf(unknown[0] if unknown else errs[0])


def validate_document(doc: Any) -> None:
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = list(validator.iter_errors(doc))
    if errors:
        # best_match would pick a oneOf branch by its own heuristic
        err = _leaf(min(errors, key=jsonschema.exceptions.relevance))
        raise ConfigError(err.message, _path(err))


def system_from_block(block: dict) -> SystemSpec:
    if block["units"] == "si":
        si = SIConfig(
            n_atoms=block["n_atoms"],
            transition_frequency_hz=block["transition_frequency_hz"],
            gamma_hz=block["gamma_hz"],
            group_velocity_m_s=block["group_velocity_m_s"],
            gamma_prime_hz=block.get("gamma_prime_hz", 0.0),
            detuning_hz=block["detuning_hz"],
            spacing_m=block.get("spacing_m"),
            boundary_distance_m=block.get("boundary_distance_m"),
        )
        try:
            spec = to_internal_units(si, kx=None if si.boundary_distance_m is not None else 1.0)
        except ValueError as exc:
            raise ConfigError(str(exc), "system") from None
        if si.boundary_distance_m is None:
            spec = spec.with_boundary_distance(ideal_working_point(spec))
        return spec
    spec = homogeneous_system(
        block["n_atoms"],
        block["detuning"],
        kx=block.get("boundary_distance", 1.0),
        gamma=block.get("gamma", 1.0),
        gamma_prime=block.get("gamma_prime", 0.0),
        spacing=block.get("spacing", TWO_PI),
        probe_frequency=block.get("probe_frequency"),
    )
    if "boundary_distance" not in block:
        spec = spec.with_boundary_distance(ideal_working_point(spec))
    return spec


def ideal_from_system(spec: SystemSpec) -> IdealArraySpec:
    a = spec.atoms[0]
    return IdealArraySpec(spec.n_atoms, a.transition_frequency - spec.probe_frequency, a.guided_decay, a.nonguided_decay)


def disorder_from_block(block: dict, spec: SystemSpec, seed: int) -> DisorderSpec:
    trunc = block.get("truncation", 3.0)
    n = block.get("n_samples", 20)
    if block["units"] == "si":
        if spec.scale is None:
            raise ConfigError("SI disorder widths need an SI system block", "disorder/units")
        return disorder_from_si(
            spec,
            sigma_frequency_hz=block.get("sigma_frequency_hz", 0.0),
            sigma_decay_hz=block.get("sigma_decay_hz", 0.0),
            sigma_position_m=block.get("sigma_position_m", 0.0),
            truncation=trunc,
            n_samples=n,
            master_seed=seed,
        )
    return DisorderSpec(
        block.get("sigma_omega", 0.0), block.get("sigma_gamma", 0.0), block.get("sigma_x", 0.0),
        trunc, n, seed,
    )


def resolve(doc: dict, mode: Optional[str] = None, seed: Optional[int] = None) -> RunConfig:
    validate_document(doc)
    cfg_mode = doc.get("mode")
    if mode is None:
        if cfg_mode is None:
            raise ConfigError("no mode given on the command line or in the config", "mode")
        mode = cfg_mode
    elif cfg_mode is not None and cfg_mode != mode:
        raise ConfigError(f"config is for mode {cfg_mode!r}, not {mode!r}", "mode")
    if mode not in MODES:
        raise ConfigError(f"unknown mode {mode!r}", "mode")
    for block in MODE_BLOCKS.get(mode, []):
        if block not in doc:
            raise ConfigError(f"mode {mode!r} requires a '{block}' block", block)

    resolved = copy.deepcopy(doc)
    resolved["mode"] = mode
    master_seed = seed if seed is not None else doc.get("master_seed", 0)
    resolved["master_seed"] = master_seed

    system = system_from_block(doc["system"])
    sys_block = resolved["system"]
    if sys_block["units"] == "si":
        sys_block.setdefault("gamma_prime_hz", 0.0)
    else:
        sys_block.setdefault("gamma", 1.0)
        sys_block.setdefault("gamma_prime", 0.0)
        sys_block.setdefault("spacing", TWO_PI)
        sys_block.setdefault("probe_frequency", system.probe_frequency)
        sys_block.setdefault("boundary_distance", system.boundary_distance)

    disorder = None
    if "disorder" in doc:
        disorder = disorder_from_block(doc["disorder"], system, master_seed)
        resolved["disorder"].setdefault("truncation", disorder.truncation)
        resolved["disorder"].setdefault("n_samples", disorder.n_samples)

    if "grid" in resolved or mode in ("sweep", "disorder"):
        grid = resolved.setdefault("grid", {})
        grid.setdefault("points", 2001)
        if "kx_min" not in grid or "kx_max" not in grid:
            center = ideal_working_point(system)
            grid.setdefault("kx_min", center - math.pi / 2)
            grid.setdefault("kx_max", center + math.pi / 2)
        if not grid["kx_max"] > grid["kx_min"]:
            raise ConfigError("kx_max must exceed kx_min", "grid")
    if mode == "scaling":
        resolved["scaling"].setdefault("fit_min_n", 8)
    if mode == "estimate":
        est = resolved["estimation"]
        est.setdefault("shots", 100_000)
        est.setdefault("repetitions", 500)
    if mode == "validate-linear-response":
        lr = resolved.setdefault("linear_response", {})
        lr.setdefault("perturbation_scale", 1e-6)
        lr.setdefault("detuning_list", [0.5, 0.75, 1.0, 1.5, 2.0, 3.0, 4.0])
        lr.setdefault("n_list", [8, 16, 32, 64])
    out = resolved.setdefault("output", {})
    out.setdefault("prefix", "")
    out.setdefault("format", "csv")
    return RunConfig(mode, doc, resolved, system, disorder, master_seed)


def load_config(path, mode: Optional[str] = None, seed: Optional[int] = None) -> RunConfig:
    """Read, validate and resolve a JSON config file."""
    text = Path(path).read_text(encoding="utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"not valid JSON: {exc.msg} (line {exc.lineno})", "<file>") from None
    return resolve(doc, mode, seed)


def output_directory(cli_value: Optional[str], config: RunConfig) -> Path:
    if cli_value:
        return Path(cli_value)
    if "directory" in config.resolved.get("output", {}):
        return Path(config.resolved["output"]["directory"])
    return Path(os.environ.get(OUT_DIR_ENV, DEFAULT_OUT_DIR))
