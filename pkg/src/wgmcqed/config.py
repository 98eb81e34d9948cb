"""Run configuration: defaults, schema validation and unit conversion.

Config files are JSON.  Frequencies are given in MHz as nu = omega/2pi
and converted to angular rad/s internally; times in the indicated units
(us, ns); the magnetic field in Gauss.
"""

from __future__ import annotations

import hashlib
import json
import math
from pathlib import Path

import jsonschema

from .atom import AtomParams, GAUSS
from .errors import ConfigError

SCENARIOS = ("fields", "spectrum", "averaged", "fit", "legacy", "pulsed", "transit")

DEFAULTS: dict = {
    "scenario": "spectrum",
    "geometry": "co_TM",
    "g_mhz": 20.0,
    "kappa0_mhz": 5.0,
    "kappa_ext_mhz": 5.0,
    "gamma_pop_mhz": 6.07,
    "b_field_gauss": 4.5,
    "flux_photons_per_s": 1.2e7,
    "refractive_index": 1.45,
    "include_zeeman": True,
    "cutoff_a": 1,
    "cutoff_b": 1,
    "prune_steps": None,
    "detuning_min_mhz": -60.0,
    "detuning_max_mhz": 60.0,
    "n_detunings": 121,
    "g_mean_mhz": 17.0,
    "g_sigma_mhz": 6.0,
    "g_min_mhz": 7.5,
    "g_max_mhz": 30.0,
    "n_nodes": 17,
    "window_ns": 100.0,
    "t_start_ns": None,
    "data_path": None,
    "noise_level": 0.01,
    "n_transits": 100,
    "g_peak_mhz": 30.0,
    "sigma_t_us": 2.0,
    "transit_duration_us": 10.0,
    "transit_dt_ns": 10.0,
    "dt1_us": 1.2,
    "eta1": 6,
    "dt2_us": 1.0,
    "eta2": 2,
    "detector_efficiency": 0.5,
    "spectroscopy_gap_us": 1.0,
    "residual_transmission": 0.01,
    "seed": 1234,
    "out_dir": "out",
}

_number = {"type": "number"}
_pos_number = {"type": "number", "exclusiveMinimum": 0}
_pos_int = {"type": "integer", "minimum": 1}

SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "scenario": {"enum": list(SCENARIOS)},
        "geometry": {"enum": ["co_TM", "co_TE", "counter_TM", "counter_TE"]},
        "g_mhz": {"type": "number", "minimum": 0},
        "kappa0_mhz": _pos_number,
        "kappa_ext_mhz": _pos_number,
        "gamma_pop_mhz": _pos_number,
        "b_field_gauss": _number,
        "flux_photons_per_s": _pos_number,
        "refractive_index": {"type": "number", "exclusiveMinimum": 1},
        "include_zeeman": {"type": "boolean"},
        "cutoff_a": _pos_int,
        "cutoff_b": _pos_int,
        "prune_steps": {"anyOf": [{"type": "null"}, {"type": "integer", "minimum": 1}]},
        "detuning_min_mhz": _number,
        "detuning_max_mhz": _number,
        "n_detunings": {"type": "integer", "minimum": 2},
        "g_mean_mhz": _pos_number,
        "g_sigma_mhz": {"type": "number", "minimum": 0},
        "g_min_mhz": _pos_number,
        "g_max_mhz": _pos_number,
        "n_nodes": _pos_int,
        "window_ns": _pos_number,
        "t_start_ns": {"anyOf": [{"type": "null"}, _pos_number]},
        "data_path": {"anyOf": [{"type": "null"}, {"type": "string"}]},
        "noise_level": {"type": "number", "minimum": 0},
        "n_transits": _pos_int,
        "g_peak_mhz": {"type": "number", "minimum": 0},
        "sigma_t_us": _pos_number,
        "transit_duration_us": _pos_number,
        "transit_dt_ns": _pos_number,
        "dt1_us": _pos_number,
        "eta1": _pos_int,
        "dt2_us": _pos_number,
        "eta2": _pos_int,
        "detector_efficiency": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
        "spectroscopy_gap_us": {"type": "number", "minimum": 0},
        "residual_transmission": {"type": "number", "minimum": 0, "maximum": 1},
        "seed": {"type": "integer", "minimum": 0},
        "out_dir": {"type": "string"},
    },
}

MHZ = 2 * math.pi * 1e6


def load_config(path: str | Path) -> dict:
    """Read, schema-validate and default-fill a JSON config file."""
    try:
        raw = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    if not raw.strip():
        raise ConfigError(f"config file {path} is empty")
    try:
        user = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON in {path} (line {exc.lineno}): {exc.msg}") from exc
    return validate_config(user)


def validate_config(user: dict) -> dict:
    if not isinstance(user, dict):
        raise ConfigError("config root must be a JSON object")
    try:
        jsonschema.validate(user, SCHEMA)
    except jsonschema.ValidationError as exc:
        field = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"config field {field}: {exc.message}") from exc
    cfg = dict(DEFAULTS)
    cfg.update(user)
    if cfg["detuning_min_mhz"] >= cfg["detuning_max_mhz"]:
        raise ConfigError("detuning_min_mhz must be below detuning_max_mhz")
    if cfg["g_min_mhz"] >= cfg["g_max_mhz"]:
        raise ConfigError("g_min_mhz must be below g_max_mhz")
    return cfg


def config_hash(cfg: dict) -> str:
    canonical = json.dumps(cfg, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()[:16]


def atom_params(cfg: dict) -> AtomParams:
    return AtomParams(
        gamma=0.5 * cfg["gamma_pop_mhz"] * MHZ,
        B_z=cfg["b_field_gauss"] * GAUSS,
    )


def model_kwargs(cfg: dict) -> dict:
    return {
        "kappa0": cfg["kappa0_mhz"] * MHZ,
        "kappa_ext": cfg["kappa_ext_mhz"] * MHZ,
        "atom": atom_params(cfg),
        "alpha_in": math.sqrt(cfg["flux_photons_per_s"]),
        "include_zeeman": cfg["include_zeeman"],
        "n_index": cfg["refractive_index"],
        "cutoffs": (cfg["cutoff_a"], cfg["cutoff_b"]),
        "prune_steps": cfg["prune_steps"],
    }
