"""Experiment configuration (YAML) and run manifests.

The config is a strict nested mapping: unknown keys are rejected so that
typos cannot silently fall back to defaults.  Every command stamps a
manifest listing the config hash and the checksums of everything written.
"""

from __future__ import annotations

import copy
import hashlib
import json
import time
from dataclasses import dataclass
from pathlib import Path

import yaml


class ConfigError(ValueError):
    pass


DEFAULTS = {
    "atomic": {
        "n_min": 45,
        "n_max": 51,
        "l_max": None,
        "defects_file": None,
        "b_field_gauss": 3.4,
        "e_direction": [1.0, 0.0, 0.0],
        "b_direction": [0.0, 1.0, 0.0],
        "mw_polarization": [0.0, 0.0, 1.0],
        "reference": {"n": 48, "l": 2, "j": 2.5},
        "laser_detuning_mhz": -130.0,
        "window_ghz": [-1.0, 0.8],
    },
    "surface": {
        "E0_Vcm": 37.2,
        "zeta_um": 70.0,
        "Exy_Vcm": 3.482,
        "Eh_Vcm": 7.2,
        "z_cloud_um": 130.0,
        "sigma_um": 25.0,
        "z_beam_um": 130.0,
        "waist_um": 25.0,
        "laser_linewidth_mhz": 2.0,
        "electrode_distance_um": 10000.0,
        "resonances_vcm": [3.625, 3.570],
    },
    "cavity": {
        "freq_ghz": 20.55,
        "kappa_mhz": 9.0,
        "length_mm": 9.3,
        "capacitance_pf_per_m": 164.0,
        "harmonic": 3,
        "center_width_um": 34.0,
        "gap_um": 14.0,
        "antinode_offset_mm": 0.85,
        "x0_um": 50.0,
        "sigma_um": 25.0,
        "chi_um": 125.0,
    },
    "two_level": {
        "omega12_ghz": 20.5513,
        "linewidth_mhz": 1.1,
        "gamma_khz": 2.7,
        "dipole_ea0": 30.0,
    },
    "sfi": {
        "ramp_file": None,
        "ramp_start_vcm": 7.2,
        "ramp_stop_vcm": 210.0,
        "ramp_duration_us": 1.0,
        "step_ns": 2.0,
        "t1_us": [1.8, 2.0],
        "t2_us": [2.0, 2.1],
        "p_detect": 0.34,
        "a_ratio": 1.0,
        "tof_us": 1.53,
        "n_min": 46,
        "n_max": 50,
    },
    "run": {
        "seed": 12345,
        "output_dir": "out",
        "threads": 1,
        "plots": True,
    },
}


def _merge_strict(base: dict, override: dict, path: str = "") -> dict:
    out = copy.deepcopy(base)
    for key, value in override.items():
        where = f"{path}.{key}" if path else key
        if key not in base:
            raise ConfigError(f"unknown configuration key: {where}")
        if isinstance(base[key], dict) and isinstance(value, dict):
            out[key] = _merge_strict(base[key], value, where)
        else:
            out[key] = value
    return out


@dataclass
class ExperimentConfig:
    data: dict

    @classmethod
    def load(cls, path: str | Path | None = None, overrides: list[str] | None = None):
        data = copy.deepcopy(DEFAULTS)
        if path is not None:
            path = Path(path)
            if not path.exists():
                raise ConfigError(f"config file not found: {path}")
            loaded = yaml.safe_load(path.read_text()) or {}
            if not isinstance(loaded, dict):
                raise ConfigError(f"config root must be a mapping: {path}")
            data = _merge_strict(data, loaded)
        for item in overrides or []:
            if "=" not in item:
                raise ConfigError(f"override must look like section.key=value: {item}")
            dotted, raw = item.split("=", 1)
            keys = dotted.split(".")
            node = data
            for k in keys[:-1]:
                if k not in node or not isinstance(node[k], dict):
                    raise ConfigError(f"unknown configuration key: {dotted}")
                node = node[k]
            if keys[-1] not in node:
                raise ConfigError(f"unknown configuration key: {dotted}")
            node[keys[-1]] = yaml.safe_load(raw)
        cfg = cls(data)
        cfg.validate()
        return cfg

    def validate(self):
        atomic = self.data["atomic"]
        if not 1 <= atomic["n_min"] <= atomic["n_max"]:
            raise ConfigError("atomic.n_min/n_max must satisfy 1 <= n_min <= n_max")
        for name in ("defects_file",):
            path = atomic[name]
            if path is not None and not Path(path).exists():
                raise ConfigError(f"atomic.{name} does not exist: {path}")
        ramp = self.data["sfi"]["ramp_file"]
        if ramp is not None and not Path(ramp).exists():
            raise ConfigError(f"sfi.ramp_file does not exist: {ramp}")
        surf = self.data["surface"]
        if surf["E0_Vcm"] <= 0 or surf["zeta_um"] <= 0 or surf["Exy_Vcm"] < 0:
            raise ConfigError("surface field parameters out of range")
        if self.data["cavity"]["kappa_mhz"] <= 0:
            raise ConfigError("cavity.kappa_mhz must be positive")

    def __getitem__(self, key):
        return self.data[key]

    def hash(self) -> str:
        canonical = json.dumps(self.data, sort_keys=True)
        return hashlib.sha256(canonical.encode()).hexdigest()


TOOL_VERSION = "0.1.0"


@dataclass
class RunManifest:
    config_hash: str
    command: str

    def __post_init__(self):
        self.entries = []
        self.started = time.strftime("%Y-%m-%dT%H:%M:%S")

    def add(self, path: str | Path):
        path = Path(path)
        digest = hashlib.sha256(path.read_bytes()).hexdigest()
        self.entries.append({"file": path.name, "sha256": digest})

    def write(self, directory: str | Path):
        payload = {
            "tool_version": TOOL_VERSION,
            "command": self.command,
            "config_hash": self.config_hash,
            "started": self.started,
            "finished": time.strftime("%Y-%m-%dT%H:%M:%S"),
            "outputs": self.entries,
        }
        out = Path(directory) / "manifest.json"
        out.write_text(json.dumps(payload, indent=2))
        return out
