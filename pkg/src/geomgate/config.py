"""Run configuration: flat key/value documents with fixed key names.

A config file is either a JSON object or ``key = value`` lines (``#``
comments allowed) whose values are JSON literals.  Complex couplings are
written as ``[re, im]``.  Omitted keys fall back to :data:`DEFAULTS`, which
reproduce the published example.
"""

from __future__ import annotations

import dataclasses
import itertools
import json
import math
import re
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError
from .model import SystemParams

__all__ = [
    "DEFAULTS",
    "PARAM_KEYS",
    "NUMERIC_KEYS",
    "ConfigError",
    "RunConfig",
    "SweepAxis",
    "SweepSpec",
    "load_config",
    "parse_config_text",
    "encode_number",
]

PARAM_KEYS = {
    "nu_mhz": "nu",
    "g0_mhz": "g0",
    "g1_mhz": "g1",
    "omega0_mhz": "omega0",
    "omega1_mhz": "omega1",
    "omega0p_mhz": "omega0p",
    "omega1p_mhz": "omega1p",
    "delta_cap0_mhz": "Delta0",
    "delta_cap1_mhz": "Delta1",
    "delta_small_mhz": "delta",
}
COMPLEX_KEYS = {"g0_mhz", "g1_mhz", "omega0_mhz", "omega1_mhz", "omega0p_mhz", "omega1p_mhz"}

DEFAULTS = {
    "nu_mhz": 26.72,
    "g0_mhz": 20.0,
    "g1_mhz": 20.0,
    "omega0_mhz": 120.0,
    "omega1_mhz": 120.0,
    "omega0p_mhz": None,  # |omega0_mhz|
    "omega1p_mhz": None,  # |omega1_mhz|
    "delta_cap0_mhz": 3000.0,
    "delta_cap1_mhz": 600.0,
    "delta_small_mhz": 35.0,
    "time_us": 0.3448,
    "t_max_us": 1.0,
    "closure_tol": 1e-6,
    "entangle_tol": 1e-6,
    "fock_cutoff": 2,
    "integrator_accuracy": 1e-10,
    "output_path": None,
    "output_format": "json",
}

NUMERIC_KEYS = tuple(k for k in DEFAULTS if k not in ("output_path", "output_format"))

MAX_SWEEP_POINTS = 100_000


class ConfigError(ParameterError):
    """Invalid configuration; ``line`` points into the source text when known."""

    def __init__(self, message, source=None, line=None):
        self.source = source
        self.line = line
        where = ""
        if source is not None:
            where = f"{source}:{line}: " if line is not None else f"{source}: "
        super().__init__(where + message)


def encode_number(value):
    """JSON form of a possibly complex number (``[re, im]`` when complex)."""
    value = complex(value)
    if value.imag == 0:
        return value.real
    return [value.real, value.imag]


def _decode_complex(key, value):
    if isinstance(value, bool):
        raise ParameterError(f"{key} must be a number, got {value!r}")
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, complex):
        return value
    if isinstance(value, (list, tuple)) and len(value) == 2 and all(
            isinstance(v, (int, float)) and not isinstance(v, bool) for v in value):
        return complex(float(value[0]), float(value[1]))
    raise ParameterError(f"{key} must be a number or [re, im], got {value!r}")


def _decode_real(key, value):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ParameterError(f"{key} must be a real number, got {value!r}")
    value = float(value)
    if not math.isfinite(value):
        raise ParameterError(f"{key} must be finite, got {value!r}")
    return value


@dataclass(frozen=True)
class RunConfig:
    nu_mhz: float = DEFAULTS["nu_mhz"]
    g0_mhz: complex = DEFAULTS["g0_mhz"]
    g1_mhz: complex = DEFAULTS["g1_mhz"]
    omega0_mhz: complex = DEFAULTS["omega0_mhz"]
    omega1_mhz: complex = DEFAULTS["omega1_mhz"]
    omega0p_mhz: complex = None
    omega1p_mhz: complex = None
    delta_cap0_mhz: float = DEFAULTS["delta_cap0_mhz"]
    delta_cap1_mhz: float = DEFAULTS["delta_cap1_mhz"]
    delta_small_mhz: float = DEFAULTS["delta_small_mhz"]
    time_us: float = DEFAULTS["time_us"]
    t_max_us: float = DEFAULTS["t_max_us"]
    closure_tol: float = DEFAULTS["closure_tol"]
    entangle_tol: float = DEFAULTS["entangle_tol"]
    fock_cutoff: int = DEFAULTS["fock_cutoff"]
    integrator_accuracy: float = DEFAULTS["integrator_accuracy"]
    output_path: str = None
    output_format: str = "json"

    @classmethod
    def from_mapping(cls, mapping, source=None, lines=None):
        """Build from a flat mapping, rejecting unknown keys and bad values.

        ``lines`` maps keys to source line numbers for error messages.
        """
        lines = lines or {}
        values = {}
        for key, value in mapping.items():
            line = lines.get(key)
            if key not in DEFAULTS:
                raise ConfigError(f"unknown key {key!r}", source, line)
            try:
                values[key] = cls._decode(key, value)
            except ParameterError as exc:
                raise ConfigError(str(exc), source, line) from None
        return cls(**values)

    @staticmethod
    def _decode(key, value):
        if value is None and key in ("omega0p_mhz", "omega1p_mhz", "output_path"):
            return None
        if key in COMPLEX_KEYS:
            return _decode_complex(key, value)
        if key == "fock_cutoff":
            if isinstance(value, bool) or not isinstance(value, (int, float)) or int(value) != value \
                    or value < 1:
                raise ParameterError(f"fock_cutoff must be an integer >= 1, got {value!r}")
            return int(value)
        if key == "output_path":
            if not isinstance(value, str):
                raise ParameterError(f"output_path must be a string, got {value!r}")
            return value
        if key == "output_format":
            if value not in ("json", "csv"):
                raise ParameterError(f"output_format must be 'json' or 'csv', got {value!r}")
            return value
        value = _decode_real(key, value)
        if key in ("time_us",) and value < 0:
            raise ParameterError(f"{key} must be >= 0, got {value!r}")
        if key in ("t_max_us", "closure_tol", "entangle_tol", "integrator_accuracy") and not value > 0:
            raise ParameterError(f"{key} must be > 0, got {value!r}")
        return value

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)

    def with_value(self, key, value):
        """Copy with one key changed, validated like a config entry."""
        if key not in DEFAULTS:
            raise ParameterError(f"unknown key {key!r}")
        return self.replace(**{key: self._decode(key, value)})

    def params(self) -> SystemParams:
        kw = {field: getattr(self, key) for key, field in PARAM_KEYS.items()}
        return SystemParams.build(**kw)

    def resolved(self):
        """Every key with defaults filled in, in JSON-ready form."""
        out = {}
        for key in DEFAULTS:
            value = getattr(self, key)
            if key == "omega0p_mhz" and value is None:
                value = abs(complex(self.omega0_mhz))
            elif key == "omega1p_mhz" and value is None:
                value = abs(complex(self.omega1_mhz))
            if key in COMPLEX_KEYS:
                value = encode_number(value)
            out[key] = value
        return out


_LINE_RE = re.compile(r"^\s*([A-Za-z_][A-Za-z0-9_]*)\s*[=:]\s*(.*?)\s*$")


def parse_config_text(text, source="<config>"):
    """Parse config text into a :class:`RunConfig`."""
    stripped = text.strip()
    if stripped.startswith("{"):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON: {exc.msg}", source, exc.lineno) from None
        if not isinstance(data, dict):
            raise ConfigError("config must be a flat object", source, 1)
        lines = {}
        for key in data:
            for i, raw in enumerate(text.splitlines(), start=1):
                if f'"{key}"' in raw:
                    lines[key] = i
                    break
        for key, value in data.items():
            if isinstance(value, dict):
                raise ConfigError(f"nested value for {key!r}; config must be flat", source, lines.get(key))
        return RunConfig.from_mapping(data, source, lines)

    data, lines = {}, {}
    for i, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0].strip()
        if not body:
            continue
        m = _LINE_RE.match(body)
        if not m:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", source, i)
        key, value_text = m.groups()
        if key in data:
            raise ConfigError(f"duplicate key {key!r}", source, i)
        try:
            value = json.loads(value_text)
        except json.JSONDecodeError:
            value = value_text.strip("'\"")
        data[key], lines[key] = value, i
    return RunConfig.from_mapping(data, source, lines)


def load_config(path):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", path) from None
    return parse_config_text(text, source=str(path))


@dataclass(frozen=True)
class SweepAxis:
    name: str
    start: float
    stop: float
    count: int

    def __post_init__(self):
        if self.name not in NUMERIC_KEYS:
            raise ConfigError(f"cannot sweep {self.name!r}; choose one of {', '.join(NUMERIC_KEYS)}")
        if int(self.count) != self.count or self.count < 2:
            raise ConfigError(f"sweep axis {self.name!r} needs count >= 2, got {self.count!r}")

    @property
    def values(self):
        return np.linspace(self.start, self.stop, int(self.count))

    @classmethod
    def parse(cls, text):
        """``name=start:stop:count``."""
        try:
            name, rng = text.split("=", 1)
            start, stop, count = rng.split(":")
            return cls(name.strip(), float(start), float(stop), int(count))
        except ValueError:
            raise ConfigError(f"bad sweep axis {text!r}; expected name=start:stop:count") from None


@dataclass(frozen=True)
class SweepSpec:
    axes: tuple

    def __post_init__(self):
        if not self.axes:
            raise ConfigError("a sweep needs at least one axis")
        names = [a.name for a in self.axes]
        if len(set(names)) != len(names):
            raise ConfigError(f"duplicate sweep axis in {names}")
        if self.size > MAX_SWEEP_POINTS:
            raise ConfigError(f"sweep has {self.size} points; the cap is {MAX_SWEEP_POINTS}")

    @property
    def size(self):
        return int(np.prod([int(a.count) for a in self.axes]))

    @property
    def names(self):
        return [a.name for a in self.axes]

    def points(self):
        """Grid points in row order, last axis fastest."""
        return itertools.product(*[a.values.tolist() for a in self.axes])
