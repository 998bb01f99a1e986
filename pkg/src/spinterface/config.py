"""INI-style run configuration.

Sections: [spin], [optical], [dynamics], [spectra], [output]. Every key is
optional; unknown sections or keys are rejected so typos do not pass
silently.
"""
from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from .coherent import CoherentParams
from .errors import ConfigError
from .rates import PumpModel
from .spectra import OpticalModel
from .spin import SpinSystem

# key -> (type, default)
SCHEMA = {
    "spin": {
        "D": (float, 3.63),
        "E": (float, 0.0),
        "g": (float, 2.0),
        "spin": (str, "1"),
        "zfs_axis": ("vector", (0.0, 0.0, 1.0)),
        "name": (str, ""),
    },
    "optical": {
        "zpl_wavelength_nm": (float, 1025.0),
        "t_opt_us": (float, 3.3),
        "inhomogeneous_fwhm_GHz": (float, 150.0),
        "homogeneous_fwhm_GHz": (float, 5.0),
        "branching": ("vector", (1 / 3, 1 / 3, 1 / 3)),
        "debye_waller": (float, 1.0),
        "dipole_axis": ("vector", (1.0, 0.0, 0.0)),
    },
    "dynamics": {
        "pump_rate_per_s": (float, None),
        "bright_index": (int, 0),
        "T1_ms": (float, 0.22),
        "collection_efficiency": (float, 1.0),
        "B0_mT": (float, 10.0),
        "rabi_MHz": (float, 12.5),
        "detuning_MHz": (float, 0.0),
        "T2_ns": (float, 640.0),
        "temperature_K": (float, None),
        "ideal_pulses": (bool, False),
    },
    "spectra": {
        "temperature_K": (float, 77.0),
        "odmr_linewidth_GHz": (float, 0.02),
        "esr_frequency_GHz": (float, 9.4),
        "esr_linewidth_mT": (float, 0.5),
        "pl_linewidth_GHz": (float, 5.0),
    },
    "output": {
        "directory": (str, "."),
        "seed": (int, 0),
        "noise": (float, 0.0),
    },
}


def _convert(section, key, raw, kind):
    try:
        if kind is float:
            return float(raw)
        if kind is int:
            return int(raw)
        if kind is bool:
            low = raw.strip().lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if kind == "vector":
            parts = [p for p in raw.replace(",", " ").split() if p]
            return tuple(float(p) for p in parts)
        return raw.strip()
    except ValueError:
        raise ConfigError(f"[{section}] {key}: cannot read {raw!r}") from None


@dataclass
class Config:
    values: dict
    source: str | None = None
    snapshot: dict = field(default_factory=dict)

    def get(self, section, key):
        return self.values[section][key]

    @property
    def spin_system(self) -> SpinSystem:
        s = self.values["spin"]
        try:
            spin = Fraction(s["spin"])
        except (ValueError, ZeroDivisionError):
            raise ConfigError(f"[spin] spin: cannot read {s['spin']!r}") from None
        return SpinSystem(D=s["D"], E=s["E"], g_factor=s["g"], spin_S=spin, zfs_axis=s["zfs_axis"])

    @property
    def optical(self) -> OpticalModel:
        o = self.values["optical"]
        return OpticalModel(zpl_wavelength=o["zpl_wavelength_nm"], t_opt=o["t_opt_us"],
                            inhomogeneous_fwhm=o["inhomogeneous_fwhm_GHz"],
                            homogeneous_fwhm=o["homogeneous_fwhm_GHz"], branching=o["branching"],
                            debye_waller=o["debye_waller"], dipole_axis=o["dipole_axis"])

    @property
    def pump_model(self) -> PumpModel:
        d = self.values["dynamics"]
        optical = self.optical
        W = d["pump_rate_per_s"]
        if W is None:
            W = 1.0 / (optical.t_opt * 1e-6)
        return PumpModel(sys=self.spin_system, optical=optical, W=W, bright_index=d["bright_index"],
                         T1=d["T1_ms"], collection_efficiency=d["collection_efficiency"], B0_mT=d["B0_mT"],
                         temperature=d["temperature_K"])

    @property
    def coherent(self) -> CoherentParams:
        d = self.values["dynamics"]
        return CoherentParams(rabi_frequency=d["rabi_MHz"], detuning=d["detuning_MHz"], T2=d["T2_ns"])

    @property
    def seed(self) -> int:
        return self.values["output"]["seed"]

    @property
    def output_dir(self) -> Path:
        return Path(self.values["output"]["directory"])


def defaults() -> dict:
    return {sec: {k: d for k, (_, d) in keys.items()} for sec, keys in SCHEMA.items()}


def parse_config(text: str, source: str | None = None) -> Config:
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    parser.optionxform = str
    try:
        parser.read_string(text, source=source or "<config>")
    except configparser.Error as exc:
        raise ConfigError(f"malformed configuration: {exc}") from None
    values = defaults()
    snapshot = {}
    for section in parser.sections():
        if section not in SCHEMA:
            raise ConfigError(f"unknown section [{section}]; expected one of {', '.join(SCHEMA)}")
        for key, raw in parser.items(section):
            if key not in SCHEMA[section]:
                raise ConfigError(f"[{section}] unknown key {key!r}")
            kind = SCHEMA[section][key][0]
            values[section][key] = _convert(section, key, raw, kind)
    for sec, keys in values.items():
        snapshot[sec] = {k: (list(v) if isinstance(v, tuple) else v) for k, v in keys.items()}
    for name in ("zfs_axis", "dipole_axis"):
        sec = "spin" if name == "zfs_axis" else "optical"
        if len(values[sec][name]) != 3:
            raise ConfigError(f"[{sec}] {name} needs three components")
    return Config(values=values, source=source, snapshot=snapshot)


def load_config(path) -> Config:
    if path is None:
        return parse_config("")
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"configuration file not found: {path}")
    try:
        text = path.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    return parse_config(text, str(path))
