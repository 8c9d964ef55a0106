"""Plain-text experiment configuration: key=value under section headers.

Archivable INI files drive every run.  Unknown keys are rejected by name,
parsing and serialization round-trip exactly, and the canonical serialized
form is what gets hashed into the run manifest.
"""

from __future__ import annotations

import configparser
import hashlib
import io
from dataclasses import dataclass, field

__all__ = ["ConfigError", "ExperimentConfig", "parse_config", "parse_string",
           "serialize", "config_sha256"]


class ConfigError(ValueError):
    """Invalid or unknown configuration content."""


@dataclass(frozen=True)
class GridConfig:
    nx: int = 33
    ny: int = 73
    nt: int = 129
    x_min: float = 0.0
    x_max: float = 1.0
    L: float = 9.0
    T: float = 1.0


@dataclass(frozen=True)
class WeightConfig:
    x0: float = -1.0
    y0: float = 0.0
    alpha: float | str = "auto"
    beta: float = 0.5
    gamma: float = 0.1
    epsilon: float = 0.5
    L: float = 4.5
    rho: float | str = "auto"
    delta: float | str = "auto"


@dataclass(frozen=True)
class CarlemanConfig:
    s_min: float = 1.0
    s_max: float = 32.0
    s_count: int = 6
    gamma_list: tuple = (0.05, 0.1, 0.2)


@dataclass(frozen=True)
class InverseConfig:
    amplitudes: tuple = (0.1, 0.3, 1.0, 3.0, 10.0)
    noise: float = 0.0
    seed: int = 1234


@dataclass(frozen=True)
class OutputConfig:
    directory: str = "out"
    format: str = "csv"


@dataclass(frozen=True)
class ExperimentConfig:
    grid: GridConfig = field(default_factory=GridConfig)
    weight: WeightConfig = field(default_factory=WeightConfig)
    carleman: CarlemanConfig = field(default_factory=CarlemanConfig)
    inverse: InverseConfig = field(default_factory=InverseConfig)
    output: OutputConfig = field(default_factory=OutputConfig)


_INT_KEYS = {"nx", "ny", "nt", "s_count", "seed"}
_AUTO_KEYS = {"alpha", "rho", "delta"}
_LIST_KEYS = {"gamma_list", "amplitudes"}
_STR_KEYS = {"directory", "format"}

_SECTIONS = {
    "grid": GridConfig,
    "weight": WeightConfig,
    "carleman": CarlemanConfig,
    "inverse": InverseConfig,
    "output": OutputConfig,
}


def _parse_value(section, key, raw):
    raw = raw.strip()
    if key in _STR_KEYS:
        return raw
    if key in _LIST_KEYS:
        try:
            return tuple(float(tok) for tok in raw.split(",") if tok.strip())
        except ValueError as exc:
            raise ConfigError(f"[{section}] {key}: bad list {raw!r}") from exc
    if key in _AUTO_KEYS and section == "weight" and raw == "auto":
        return "auto"
    try:
        return int(raw) if key in _INT_KEYS else float(raw)
    except ValueError as exc:
        raise ConfigError(f"[{section}] {key}: bad value {raw!r}") from exc


def parse_string(text):
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from exc
    parts = {}
    for section in cp.sections():
        if section not in _SECTIONS:
            raise ConfigError(f"unknown section [{section}]")
        cls = _SECTIONS[section]
        known = set(cls.__dataclass_fields__)
        values = {}
        for key, raw in cp.items(section):
            if key not in known:
                raise ConfigError(f"unknown key {key!r} in section [{section}]")
            values[key] = _parse_value(section, key, raw)
        parts[section] = cls(**values)
    return ExperimentConfig(**parts)


def parse_config(path):
    with open(path, "r", encoding="utf-8") as fh:
        return parse_string(fh.read())


def _fmt_value(value):
    if isinstance(value, str):
        return value
    if isinstance(value, tuple):
        return ",".join(f"{v:.17g}" for v in value)
    if isinstance(value, bool):
        return str(value)
    if isinstance(value, int):
        return str(value)
    return f"{value:.17g}"


def serialize(cfg):
    """Canonical text form: fixed section/key order, %.17g floats."""
    out = io.StringIO()
    for section, cls in _SECTIONS.items():
        out.write(f"[{section}]\n")
        obj = getattr(cfg, section)
        for key in cls.__dataclass_fields__:
            out.write(f"{key} = {_fmt_value(getattr(obj, key))}\n")
        out.write("\n")
    return out.getvalue()


def config_sha256(cfg):
    return hashlib.sha256(serialize(cfg).encode("utf-8")).hexdigest()
