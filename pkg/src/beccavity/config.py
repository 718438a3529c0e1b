"""Configuration files and physical-quantity strings.

Run specifications are TOML documents with nested sections.  Values that
carry units are strings such as ``"2π×14.1 MHz"``, ``"8.86e7 rad/s"``,
``"1.51 kappa"``, ``"92/ms"`` or ``"2π×1 MHz/ms"``.  Frequencies must say
whether they are cyclic (a leading ``2π×``) or angular (``rad/s``); a bare
``"14.1 MHz"`` or an unsuffixed number is rejected.
"""

from __future__ import annotations

import copy
import math
import re
from pathlib import Path
from typing import Any, Mapping

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from scipy.constants import atomic_mass

from .physics import PhysicalParams, TWO_PI, paper_params


class ConfigError(ValueError):
    """Invalid configuration; ``key`` is the dotted path of the offending entry."""

    def __init__(self, key, message):
        super().__init__(f"{key}: {message}")
        self.key = key


_HZ = {"Hz": 1.0, "kHz": 1e3, "MHz": 1e6, "GHz": 1e9, "THz": 1e12}
_TIME = {"s": 1.0, "ms": 1e-3, "us": 1e-6, "µs": 1e-6, "μs": 1e-6, "ns": 1e-9}
_LENGTH = {"m": 1.0, "mm": 1e-3, "um": 1e-6, "µm": 1e-6, "μm": 1e-6, "nm": 1e-9}
_MASS = {"kg": 1.0, "u": atomic_mass, "amu": atomic_mass}
_ENERGY_LENGTH = {"J m": 1.0, "J*m": 1.0, "J·m": 1.0}

_TWO_PI_PREFIX = re.compile(r"^\s*2\s*(?:π|pi)\s*(?:[×x*·]\s*)?", re.IGNORECASE)
_NUMBER = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*(.*?)\s*$")

QUANTITY_KINDS = ("frequency", "rate", "scan_speed", "time", "length", "mass", "energy_length", "number")


def _split(text, key):
    m = _NUMBER.match(text)
    if not m:
        raise ConfigError(key, f"cannot parse quantity {text!r}")
    return float(m.group(1)), m.group(2)


def _per_time(unit, key):
    """Factor for '1/ms', '/ms', 'per ms' style suffixes."""
    u = re.sub(r"^(?:1\s*/|/|per\s+)\s*", "", unit)
    if u == unit or u not in _TIME:
        raise ConfigError(key, f"expected an inverse time unit, got {unit!r}")
    return 1.0 / _TIME[u]


def parse_quantity(value: Any, kind: str, *, key: str = "value", kappa: float | None = None) -> float:
    """Convert ``value`` to SI (angular frequencies in rad/s).

    ``kind`` is one of :data:`QUANTITY_KINDS`.  Relative frequencies such as
    ``"1.51 kappa"`` need ``kappa`` (rad/s).
    """
    if kind not in QUANTITY_KINDS:
        raise ValueError(f"unknown quantity kind {kind!r}")
    if isinstance(value, bool):
        raise ConfigError(key, "expected a quantity, got a boolean")
    if isinstance(value, (int, float)):
        if kind in ("number",):
            return float(value)
        raise ConfigError(key, f"{kind} value {value!r} needs an explicit unit")
    if not isinstance(value, str):
        raise ConfigError(key, f"expected a string quantity, got {type(value).__name__}")

    text = value.strip()
    cyclic = _TWO_PI_PREFIX.match(text)
    body = text[cyclic.end():] if cyclic else text
    number, unit = _split(body, key)

    if kind == "number":
        if unit or cyclic:
            raise ConfigError(key, f"expected a plain number, got {value!r}")
        return number

    if kind == "frequency":
        if unit == "kappa":
            if cyclic:
                raise ConfigError(key, "a kappa multiple cannot carry 2π")
            if kappa is None:
                raise ConfigError(key, "'kappa' units need the cavity decay rate")
            return number * kappa
        if unit in ("rad/s", "rad s^-1"):
            if cyclic:
                raise ConfigError(key, "2π× and rad/s together are ambiguous")
            return number
        if unit in _HZ:
            if not cyclic:
                raise ConfigError(key, f"{value!r} is ambiguous: write 2π×{number:g} {unit} or give rad/s")
            return TWO_PI * number * _HZ[unit]
        raise ConfigError(key, f"unknown frequency unit in {value!r}")

    if kind == "scan_speed":
        head, _, tail = unit.partition("/")
        if not tail or tail not in _TIME:
            raise ConfigError(key, f"scan speed needs a '<frequency>/<time>' unit, got {value!r}")
        rate = parse_quantity(
            f"{'2π×' if cyclic else ''}{number!r} {head.strip()}", "frequency", key=key, kappa=kappa
        )
        return rate / _TIME[tail]

    if cyclic:
        raise ConfigError(key, f"2π× is only meaningful for frequencies, got {value!r}")
    if kind == "rate":
        if unit in ("1/s", "/s", "Hz"):
            return number
        return number * _per_time(unit, key)
    table = {"time": _TIME, "length": _LENGTH, "mass": _MASS, "energy_length": _ENERGY_LENGTH}[kind]
    if unit not in table:
        raise ConfigError(key, f"unknown {kind} unit in {value!r}")
    return number * table[unit]


def format_frequency(w: float) -> str:
    """Inverse of :func:`parse_quantity` for angular frequencies."""
    return f"2π×{w / TWO_PI!r} Hz"


# keys of the [physics] section and the kind of quantity each carries
PHYSICS_KEYS = {
    "g0": "frequency",
    "kappa": "frequency",
    "gamma": "frequency",
    "delta_a": "frequency",
    "lambda_light": "length",
    "atom_mass": "mass",
    "n_atoms": "number",
    "trap_freqs": "frequency",
    "transverse_overlap": "number",
    "g_1d": "energy_length",
    "loss_rate": "rate",
}


def physics_from_mapping(section: Mapping[str, Any], prefix: str = "physics") -> PhysicalParams:
    """Build :class:`PhysicalParams` from a ``[physics]`` table.

    ``preset = "paper"`` (the default) starts from the experimental
    parameter set and overrides the listed keys; ``preset = "none"`` requires
    every field without a default.
    """
    section = dict(section)
    preset = section.pop("preset", "paper")
    section.pop("n_atoms_jitter", None)
    unknown = set(section) - set(PHYSICS_KEYS)
    if unknown:
        raise ConfigError(f"{prefix}.{sorted(unknown)[0]}", "unknown key")

    values: dict[str, Any] = {}
    kappa_raw = section.get("kappa")
    kappa = None
    if kappa_raw is not None:
        kappa = parse_quantity(kappa_raw, "frequency", key=f"{prefix}.kappa")
    elif preset == "paper":
        kappa = paper_params().kappa
    for name, raw in section.items():
        key = f"{prefix}.{name}"
        kind = PHYSICS_KEYS[name]
        if name == "trap_freqs":
            if not isinstance(raw, (list, tuple)) or len(raw) != 3:
                raise ConfigError(key, "expected a list of three frequencies")
            values[name] = tuple(parse_quantity(v, kind, key=f"{key}[{i}]") for i, v in enumerate(raw))
        else:
            values[name] = parse_quantity(raw, kind, key=key, kappa=kappa if name != "kappa" else None)

    try:
        if preset == "paper":
            return paper_params(**values)
        if preset == "none":
            return PhysicalParams(**values)
    except TypeError as exc:
        raise ConfigError(prefix, str(exc)) from None
    except ValueError as exc:
        raise ConfigError(prefix, str(exc)) from None
    raise ConfigError(f"{prefix}.preset", f"unknown preset {preset!r}")


def load_toml(path: str | Path) -> dict:
    path = Path(path)
    try:
        with path.open("rb") as fh:
            return tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(str(path), f"invalid TOML: {exc}") from None


def _literal(text: str):
    """Interpret an override value as a TOML literal, falling back to a string."""
    try:
        return tomllib.loads(f"v = {text}")["v"]
    except tomllib.TOMLDecodeError:
        return text


def apply_overrides(mapping: Mapping[str, Any], overrides) -> dict:
    """Return a copy of ``mapping`` with ``key.path=value`` overrides applied."""
    out = copy.deepcopy(dict(mapping))
    for item in overrides or ():
        if "=" not in item:
            raise ConfigError(item, "override must look like key.path=value")
        path, text = item.split("=", 1)
        parts = [p.strip() for p in path.strip().split(".")]
        if not all(parts):
            raise ConfigError(path, "empty key in override path")
        node = out
        for part in parts[:-1]:
            child = node.setdefault(part, {})
            if not isinstance(child, dict):
                raise ConfigError(path, f"{part!r} is not a section")
            node = child
        node[parts[-1]] = _literal(text.strip())
    return out


def require(section: Mapping[str, Any], name: str, prefix: str):
    if name not in section:
        raise ConfigError(f"{prefix}.{name}", "missing required key")
    return section[name]


def finite(x: float, key: str) -> float:
    if not math.isfinite(x):
        raise ConfigError(key, "must be finite")
    return x
