"""Experiment orchestration: run specifications, figure recipes and grids.

A run specification is a TOML document::

    kind = "sweep"            # steady | critical | sweep | quench | g2
    name = "fig3c"
    seed = 0

    [physics]                 # starts from the experimental parameter set
    transverse_overlap = 0.6

    [integrator]
    periods = 64
    points = 512
    dt_recoil = 5e-3          # or dt = "0.2 us"

    [protocol]
    eta = "1.51 kappa"
    detuning_min = "-25 kappa"
    detuning_max = "4 kappa"
    scan_speed = "2π×1 MHz/ms"

    [detection]
    dead_time = "50 ns"

Every run writes its outputs plus ``spec.json`` and, last, ``manifest.json``
into its own directory.
"""

from __future__ import annotations

import concurrent.futures
import copy
import hashlib
import itertools
import json
import logging
import math
import os
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np

from . import io
from .config import ConfigError, apply_overrides, load_toml, parse_quantity, physics_from_mapping
from .dynamics import (
    ConvergenceError,
    IntegratorConfig,
    NumericalError,
    Trajectory,
    overlap_curve,
    quench_response,
    scan_protocol,
    sweep_simulation,
)
from .measurement import (
    DetectionConfig,
    TransmissionTrace,
    boxcar_average,
    departure_index,
    dominant_frequency,
    g2_from_counts,
    g2_from_trace,
    hysteresis_window,
    jump_detuning,
    sample_counts,
    spring_frequency,
)
from .physics import TWO_PI, PhysicalParams, SimUnits, derive_params
from .steady_state import (
    NoBistabilityError,
    OverlapCurve,
    bistable_window,
    critical_point,
    critical_point_from_overlap,
    find_critical_numeric,
    resonance_curve,
)

log = logging.getLogger(__name__)

EXPERIMENT_KINDS = ("steady", "critical", "sweep", "quench", "g2")
OUTPUT_ROOT_ENV = "BECCAVITY_OUT"
DEFAULT_OUTPUT_ROOT = "runs"
# boxcar widths of the presentation-layer columns of sweep traces
BOXCAR_WIDTHS = {"box400us": 400e-6, "box100us": 100e-6}

NUMERICAL_ERRORS = (NumericalError, ConvergenceError, NoBistabilityError, FloatingPointError)

_PROTOCOL_KEYS = {
    "steady": {"eta", "detuning_min", "detuning_max", "points"},
    "critical": {"method", "photon_max", "samples", "trap", "interactions"},
    "sweep": {
        "eta", "detuning_min", "detuning_max", "scan_speed", "directions",
        "atom_loss", "interactions", "trap", "spring", "spring_window",
    },
    "quench": {"n_target", "duration", "trap", "interactions"},
    "g2": {
        "source", "eta", "detuning_min", "detuning_max", "scan_speed", "direction",
        "atom_loss", "interactions", "trap", "n_target", "duration",
        "window", "max_lag", "bin_width",
    },
}
_INTEGRATOR_KEYS = {
    "dt", "dt_recoil", "periods", "points", "cavity_mode", "splitting",
    "sample_stride", "snapshot_stride", "alpha_substep",
}
_DETECTION_KEYS = {
    "quantum_efficiency", "mirror_transmission", "optics_loss", "cavity_length",
    "total_roundtrip_loss", "dead_time",
}


def _code_version():
    try:
        from importlib.metadata import version

        return version("artifact")
    except Exception:
        return "unknown"


def _canonical(mapping) -> str:
    return json.dumps(mapping, sort_keys=True, ensure_ascii=False, separators=(",", ":"), default=str)


# -- specification ------------------------------------------------------------
@dataclass(frozen=True)
class ExperimentSpec:
    """Validated run specification.  ``source`` is the raw mapping it came from."""

    kind: str
    physics: PhysicalParams
    integrator: IntegratorConfig
    protocol: Mapping[str, Any]
    detection: DetectionConfig
    output: Path | None
    seed: int
    name: str
    source: Mapping[str, Any] = field(repr=False, default_factory=dict)
    n_atoms_jitter: float = 0.0

    @property
    def spec_hash(self):
        return hashlib.sha256(_canonical(self.source).encode()).hexdigest()

    @classmethod
    def from_mapping(cls, mapping: Mapping[str, Any], name: str | None = None) -> "ExperimentSpec":
        src = copy.deepcopy(dict(mapping))
        kind = src.get("kind")
        if kind not in EXPERIMENT_KINDS:
            raise ConfigError("kind", f"must be one of {EXPERIMENT_KINDS}, got {kind!r}")
        known = {"kind", "name", "seed", "output", "physics", "integrator", "protocol", "detection"}
        extra = set(src) - known
        if extra:
            raise ConfigError(sorted(extra)[0], "unknown top-level key")
        seed = src.get("seed", 0)
        if isinstance(seed, bool) or not isinstance(seed, int) or not 0 <= seed < 2**64:
            raise ConfigError("seed", "must be an unsigned 64-bit integer")

        phys_section = _section(src, "physics")
        jitter = phys_section.get("n_atoms_jitter", 0.0)
        if isinstance(jitter, bool) or not isinstance(jitter, (int, float)) or not 0 <= jitter < 1:
            raise ConfigError("physics.n_atoms_jitter", "must be a relative spread in [0, 1)")
        physics = physics_from_mapping(phys_section)
        integrator = _integrator(_section(src, "integrator"), physics)
        protocol = _protocol(kind, _section(src, "protocol"), physics)
        detection = _detection(_section(src, "detection"), physics, seed)
        output = src.get("output")
        return cls(
            kind=kind,
            physics=physics,
            integrator=integrator,
            protocol=protocol,
            detection=detection,
            output=Path(output) if output else None,
            seed=seed,
            name=str(src.get("name") or name or kind),
            source=src,
            n_atoms_jitter=float(jitter),
        )

    @classmethod
    def from_file(cls, path, overrides: Sequence[str] = ()) -> "ExperimentSpec":
        path = Path(path)
        return cls.from_mapping(apply_overrides(load_toml(path), overrides), name=path.stem)

    def with_overrides(self, overrides: Sequence[str]) -> "ExperimentSpec":
        return type(self).from_mapping(apply_overrides(self.source, overrides), name=self.name)


def _section(src, name):
    value = src.get(name, {})
    if not isinstance(value, dict):
        raise ConfigError(name, "must be a table")
    return value


def _check_keys(section, allowed, prefix):
    extra = set(section) - allowed
    if extra:
        raise ConfigError(f"{prefix}.{sorted(extra)[0]}", "unknown key")


def _int(section, name, default, prefix, minimum=1):
    value = section.get(name, default)
    if isinstance(value, bool) or not isinstance(value, int) or value < minimum:
        raise ConfigError(f"{prefix}.{name}", f"must be an integer >= {minimum}")
    return value


def _bool(section, name, default, prefix):
    value = section.get(name, default)
    if not isinstance(value, bool):
        raise ConfigError(f"{prefix}.{name}", "must be true or false")
    return value


def _integrator(section, p: PhysicalParams) -> IntegratorConfig:
    _check_keys(section, _INTEGRATOR_KEYS, "integrator")
    kw: dict[str, Any] = {}
    if "dt" in section and "dt_recoil" in section:
        raise ConfigError("integrator.dt", "give either dt or dt_recoil, not both")
    if "dt" in section:
        kw["dt"] = parse_quantity(section["dt"], "time", key="integrator.dt")
    if "dt_recoil" in section:
        kw["dt"] = parse_quantity(section["dt_recoil"], "number", key="integrator.dt_recoil") / derive_params(
            p
        ).omega_rec
    for name in ("periods", "points", "sample_stride"):
        if name in section:
            kw[name] = _int(section, name, None, "integrator")
    if "snapshot_stride" in section:
        kw["snapshot_stride"] = _int(section, "snapshot_stride", 0, "integrator", minimum=0)
    for name in ("cavity_mode", "splitting"):
        if name in section:
            kw[name] = section[name]
    if "alpha_substep" in section:
        kw["alpha_substep"] = parse_quantity(section["alpha_substep"], "number", key="integrator.alpha_substep")
    try:
        return IntegratorConfig(**kw)
    except (ValueError, TypeError) as exc:
        raise ConfigError("integrator", str(exc)) from None


def _detection(section, p: PhysicalParams, seed) -> DetectionConfig:
    _check_keys(section, _DETECTION_KEYS, "detection")
    kw: dict[str, Any] = {"kappa": p.kappa, "rng_seed": seed}
    for name in ("quantum_efficiency", "mirror_transmission", "optics_loss", "total_roundtrip_loss"):
        if name in section:
            kw[name] = parse_quantity(section[name], "number", key=f"detection.{name}")
    if "cavity_length" in section:
        kw["cavity_length"] = parse_quantity(section["cavity_length"], "length", key="detection.cavity_length")
    if "dead_time" in section:
        kw["dead_time"] = parse_quantity(section["dead_time"], "time", key="detection.dead_time")
    try:
        return DetectionConfig(**kw)
    except ValueError as exc:
        raise ConfigError("detection", str(exc)) from None


def _pump(value, key, p: PhysicalParams):
    """Pump amplitude; accepts "<x> eta_cr" relative to the analytic critical pump."""
    if isinstance(value, str) and value.strip().endswith("eta_cr"):
        x = parse_quantity(value.strip()[: -len("eta_cr")].strip(), "number", key=key)
        try:
            return x * critical_point(derive_params(p)).eta_cr
        except ValueError as exc:
            raise ConfigError(key, str(exc)) from None
    eta = parse_quantity(value, "frequency", key=key, kappa=p.kappa)
    if eta < 0:
        raise ConfigError(key, "pump amplitude must be non-negative")
    return eta


def _detuning_range(section, p, prefix):
    lo = parse_quantity(_req(section, "detuning_min", prefix), "frequency", key=f"{prefix}.detuning_min", kappa=p.kappa)
    hi = parse_quantity(_req(section, "detuning_max", prefix), "frequency", key=f"{prefix}.detuning_max", kappa=p.kappa)
    if not (math.isfinite(lo) and math.isfinite(hi)) or hi <= lo:
        raise ConfigError(f"{prefix}.detuning_max", "must exceed detuning_min")
    return lo, hi


def _req(section, name, prefix):
    if name not in section:
        raise ConfigError(f"{prefix}.{name}", "missing required key")
    return section[name]


def _scan(section, p, prefix):
    out = {
        "eta": _pump(_req(section, "eta", prefix), f"{prefix}.eta", p),
        "scan_speed": parse_quantity(
            _req(section, "scan_speed", prefix), "scan_speed", key=f"{prefix}.scan_speed", kappa=p.kappa
        ),
        "atom_loss": _bool(section, "atom_loss", True, prefix),
        "interactions": _bool(section, "interactions", True, prefix),
        "trap": _bool(section, "trap", True, prefix),
    }
    if out["scan_speed"] <= 0:
        raise ConfigError(f"{prefix}.scan_speed", "must be positive")
    out["detuning_min"], out["detuning_max"] = _detuning_range(section, p, prefix)
    return out


def _direction(value, key):
    if value not in ("up", "down"):
        raise ConfigError(key, f"direction must be 'up' or 'down', got {value!r}")
    return value


def _protocol(kind, section, p: PhysicalParams) -> dict:
    prefix = "protocol"
    _check_keys(section, _PROTOCOL_KEYS[kind], prefix)
    if kind == "steady":
        etas = _req(section, "eta", prefix)
        etas = etas if isinstance(etas, list) else [etas]
        if not etas:
            raise ConfigError(f"{prefix}.eta", "needs at least one value")
        lo, hi = _detuning_range(section, p, prefix)
        return {
            "eta": [_pump(e, f"{prefix}.eta[{i}]", p) for i, e in enumerate(etas)],
            "eta_labels": [str(e) for e in etas],
            "detuning_min": lo,
            "detuning_max": hi,
            "points": _int(section, "points", 801, prefix, minimum=2),
        }
    if kind == "critical":
        method = section.get("method", "analytic")
        if method not in ("analytic", "numeric", "interacting"):
            raise ConfigError(f"{prefix}.method", "must be analytic, numeric or interacting")
        return {
            "method": method,
            "photon_max": parse_quantity(section.get("photon_max", 0.6), "number", key=f"{prefix}.photon_max"),
            "samples": _int(section, "samples", 13, prefix, minimum=4),
            "trap": _bool(section, "trap", True, prefix),
            "interactions": _bool(section, "interactions", True, prefix),
        }
    if kind == "sweep":
        out = _scan(section, p, prefix)
        dirs = section.get("directions", ["up", "down"])
        if not isinstance(dirs, list) or not dirs:
            raise ConfigError(f"{prefix}.directions", "must be a non-empty list")
        out["directions"] = [_direction(d, f"{prefix}.directions") for d in dirs]
        out["spring"] = _bool(section, "spring", False, prefix)
        out["spring_window"] = parse_quantity(
            section.get("spring_window", "400 us"), "time", key=f"{prefix}.spring_window"
        )
        return out
    if kind == "quench":
        return _quench(section, p, prefix)
    # g2
    source = section.get("source", "sweep")
    if source == "sweep":
        out = _scan(section, p, prefix)
        out["direction"] = _direction(section.get("direction", "down"), f"{prefix}.direction")
    elif source == "quench":
        out = _quench(section, p, prefix)
    else:
        raise ConfigError(f"{prefix}.source", "must be 'sweep' or 'quench'")
    out["source"] = source
    out["window"] = parse_quantity(section.get("window", "400 us"), "time", key=f"{prefix}.window")
    out["max_lag"] = parse_quantity(section.get("max_lag", "100 us"), "time", key=f"{prefix}.max_lag")
    out["bin_width"] = parse_quantity(section.get("bin_width", "0.5 us"), "time", key=f"{prefix}.bin_width")
    if out["window"] < 4 * out["max_lag"]:
        raise ConfigError(f"{prefix}.window", "must be at least four times max_lag")
    return out


def _quench(section, p, prefix):
    n = parse_quantity(_req(section, "n_target", prefix), "number", key=f"{prefix}.n_target")
    if n < 0:
        raise ConfigError(f"{prefix}.n_target", "must be non-negative")
    duration = section.get("duration")
    return {
        "n_target": n,
        "duration": None if duration is None else parse_quantity(duration, "time", key=f"{prefix}.duration"),
        "trap": _bool(section, "trap", False, prefix),
        "interactions": _bool(section, "interactions", False, prefix),
    }


# -- results ------------------------------------------------------------------
@dataclass
class RunResult:
    directory: Path
    manifest: dict
    outputs: list[Path]
    summary: dict
    error: str | None = None

    @property
    def ok(self):
        return self.error is None


def output_root() -> Path:
    return Path(os.environ.get(OUTPUT_ROOT_ENV) or DEFAULT_OUTPUT_ROOT)


def resolve_output(spec: ExperimentSpec, out: str | Path | None = None) -> Path:
    if out is not None:
        return Path(out)
    if spec.output is not None:
        return spec.output
    return output_root() / spec.name


class _Writer:
    def __init__(self, directory: Path):
        self.directory = directory
        self.paths: list[Path] = []

    def text(self, name, text):
        self.paths.append(io.atomic_write(self.directory / name, text))

    def trajectory(self, name, traj):
        self.paths.append(io.write_trajectory(self.directory / name, traj))


def run(spec: ExperimentSpec, out: str | Path | None = None) -> RunResult:
    """Execute ``spec`` and write its artifacts; the manifest is written last."""
    directory = resolve_output(spec, out)
    directory.mkdir(parents=True, exist_ok=True)
    writer = _Writer(directory)
    started = time.perf_counter()
    p = _jittered(spec)
    writer.text("spec.json", json.dumps(spec.source, sort_keys=True, indent=2, ensure_ascii=False, default=str) + "\n")
    summary = _PIPELINES[spec.kind](spec, p, writer)
    if p.n_atoms != spec.physics.n_atoms:
        summary["n_atoms"] = p.n_atoms
    manifest = {
        "name": spec.name,
        "kind": spec.kind,
        "spec_hash": spec.spec_hash,
        "code_version": _code_version(),
        "seed": spec.seed,
        "wall_time": time.perf_counter() - started,
        "outputs": [q.name for q in writer.paths],
        "summary": summary,
    }
    io.atomic_write(directory / "manifest.json", json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return RunResult(directory, manifest, list(writer.paths), summary)


def _jittered(spec: ExperimentSpec) -> PhysicalParams:
    """Atom number with optional Gaussian shot-to-shot jitter drawn from the seed."""
    if spec.n_atoms_jitter == 0:
        return spec.physics
    rng = np.random.default_rng([spec.seed, 0x6A17])
    factor = max(1.0 + spec.n_atoms_jitter * rng.standard_normal(), 1e-3)
    return spec.physics.replace(n_atoms=spec.physics.n_atoms * factor)


def _run_steady(spec, p, writer):
    d = derive_params(p)
    proto = spec.protocol
    rel = np.linspace(proto["detuning_min"], proto["detuning_max"], proto["points"])
    summary: dict[str, Any] = {"dispersive_shift": d.dispersive_shift}
    try:
        cp = critical_point(d)
        summary.update(eta_cr=cp.eta_cr, n_cr=cp.n_cr)
    except ValueError:
        cp = None
    runs = []
    for i, eta in enumerate(proto["eta"]):
        curve = resonance_curve(d.dispersive_shift + rel, eta, d)
        stem = "curve" if len(proto["eta"]) == 1 else f"curve_{i}"
        writer.text(f"{stem}.csv", io.curve_to_csv(curve))
        writer.text(f"{stem}.jsonl", io.curve_to_jsonl(curve))
        window = bistable_window(eta, d) if cp is not None else None
        runs.append(
            {
                "eta": eta,
                "label": proto["eta_labels"][i],
                "n_max": float(max(s.photon_number for _, sols in curve.points for s in sols)),
                "window_low": None if window is None else window[0] - d.dispersive_shift,
                "window_high": None if window is None else window[1] - d.dispersive_shift,
                "window_width": 0.0 if window is None else window[1] - window[0],
            }
        )
    if len(runs) == 1:
        summary.update(runs[0])
    else:
        summary["curves"] = runs
    return summary


def _run_critical(spec, p, writer):
    d = derive_params(p)
    proto = spec.protocol
    try:
        analytic = critical_point(d)
    except ValueError as exc:
        raise NoBistabilityError(str(exc)) from None
    summary = {"method": proto["method"], "eta_cr_analytic": analytic.eta_cr, "n_cr_analytic": analytic.n_cr}
    if proto["method"] == "analytic":
        cp = analytic
    elif proto["method"] == "numeric":
        cp = find_critical_numeric(d)
    else:
        photons, overlaps = overlap_curve(
            np.linspace(0.0, proto["photon_max"], proto["samples"]),
            p,
            spec.integrator,
            trap=proto["trap"],
            interactions=proto["interactions"],
        )
        writer.text("overlap_curve.csv", io.table_to_csv({"photon_number": photons, "overlap": overlaps}))
        cp = critical_point_from_overlap(OverlapCurve(photons, overlaps), d)
    summary.update(eta_cr=cp.eta_cr, n_cr=cp.n_cr)
    return summary


def _scan_trajectory(spec, p, proto, direction):
    lo, hi = proto["detuning_min"], proto["detuning_max"]
    start, stop = (lo, hi) if direction == "up" else (hi, lo)
    protocol = scan_protocol(
        p,
        proto["eta"],
        start,
        stop,
        proto["scan_speed"],
        atom_loss=proto["atom_loss"],
        interactions=proto["interactions"],
        trap=proto["trap"],
    )
    return sweep_simulation(protocol, p, spec.integrator)


def trace_columns(traj: Trajectory) -> dict[str, np.ndarray]:
    """Plot-ready columns; boxcar averages are presentation-layer only."""
    n = traj.photon_number
    cols = {
        "t": traj.times,
        "delta_c": traj.delta_c,
        "relative_detuning": traj.relative_detuning,
        "photon_number": n,
        "overlap": traj.overlap,
        "n_atoms": traj.n_atoms,
    }
    for name, width in BOXCAR_WIDTHS.items():
        cols[f"photon_number_{name}"] = boxcar_average(traj.times, n, width)
    return cols


def _run_sweep(spec, p, writer):
    proto = spec.protocol
    d = derive_params(p)
    summary: dict[str, Any] = {"eta": proto["eta"], "kappa": p.kappa}
    trajs = {}
    for direction in proto["directions"]:
        traj = _scan_trajectory(spec, p, proto, direction)
        trajs[direction] = traj
        writer.trajectory(f"trajectory_{direction}.jsonl", traj)
        writer.text(f"trace_{direction}.csv", io.table_to_csv(trace_columns(traj)))
        summary[f"jump_{direction}"] = jump_detuning(traj.relative_detuning, traj.photon_number, direction)
        summary[f"max_photon_number_{direction}"] = float(traj.photon_number.max())
    if "up" in trajs and "down" in trajs:
        summary["hysteresis_window"] = hysteresis_window(
            trajs["up"].relative_detuning, trajs["up"].photon_number,
            trajs["down"].relative_detuning, trajs["down"].photon_number,
        )
    if proto["spring"] and "down" in trajs:
        bare = 4 * d.omega_rec / TWO_PI
        spring = spring_frequency(TransmissionTrace.from_trajectory(trajs["down"]), bare, window=proto["spring_window"])
        writer.text("g2_down.txt", spring.correlation.to_text())
        summary["bare_frequency"] = bare
        summary["spring_frequency"] = None if spring.peak is None else spring.peak.frequency
        summary["spring_ratio"] = spring.ratio
    return summary


def _quench_trajectory(spec, p, proto):
    return quench_response(
        proto["n_target"], p, spec.integrator, proto["duration"], trap=proto["trap"], interactions=proto["interactions"]
    )


def _run_quench(spec, p, writer):
    proto = spec.protocol
    d = derive_params(p)
    traj = _quench_trajectory(spec, p, proto)
    writer.trajectory("trajectory.jsonl", traj)
    cols = {"t": traj.times, "photon_number": traj.photon_number, "overlap": traj.overlap}
    cols.update({f"momentum_{k}": v for k, v in sorted(traj.momentum.items())})
    writer.text("quench.csv", io.table_to_csv(cols))
    bare = 4 * d.omega_rec / TWO_PI
    peak = dominant_frequency(traj.overlap, traj.times[1] - traj.times[0])
    _snapshots(spec, p, traj, writer)
    return {
        "n_target": proto["n_target"],
        "bare_frequency": bare,
        "peak_frequency": None if peak is None else peak.frequency,
        "peak_width": None if peak is None else peak.width,
        "peak_ratio": None if peak is None else peak.frequency / bare,
    }


def _snapshots(spec, p, traj, writer):
    if not traj.snapshots:
        return
    units = SimUnits.from_params(p)
    for i, (t, psi) in enumerate(traj.snapshots):
        path = io.atomic_write(writer.directory / f"psi_{i:05d}.bin", io.snapshot_to_bytes(psi, t, units))
        writer.paths.append(path)


def _run_g2(spec, p, writer):
    proto = spec.protocol
    d = derive_params(p)
    if proto["source"] == "sweep":
        traj = _scan_trajectory(spec, p, proto, proto["direction"])
    else:
        traj = _quench_trajectory(spec, p, proto)
    writer.trajectory("trajectory.jsonl", traj)
    trace = TransmissionTrace.from_trajectory(traj)
    stop = trace.times[-1]
    if proto["source"] == "sweep" and proto["direction"] == "down":
        stop = trace.times[departure_index(trace.photon_number)]
    start = max(trace.times[0], stop - proto["window"])
    if stop - start < 4 * proto["max_lag"]:
        raise ConfigError("protocol.window", "trajectory too short for the requested window and lag")
    g2_trace = g2_from_trace(trace, proto["max_lag"], (start, stop))
    counts = sample_counts(trace.window(start, stop), spec.detection, seed=spec.seed)
    g2_counts = g2_from_counts(counts, proto["bin_width"], proto["max_lag"], (start, stop))
    writer.text("counts.txt", counts.to_text())
    writer.text("g2_trace.txt", g2_trace.to_text())
    writer.text("g2_counts.txt", g2_counts.to_text())
    bare = 4 * d.omega_rec / TWO_PI
    peak = dominant_frequency(g2_trace.g2 - 1.0, g2_trace.bin_width, min_frequency=0.5 * bare)
    return {
        "window_start": start,
        "window_stop": stop,
        "events": len(counts),
        "count_rate": counts.rate,
        "bare_frequency": bare,
        "g2_frequency": None if peak is None else peak.frequency,
        "g2_ratio": None if peak is None else peak.frequency / bare,
        "g2_zero_trace": float(g2_trace.g2[np.argmin(np.abs(g2_trace.lags))]),
    }


_PIPELINES = {
    "steady": _run_steady,
    "critical": _run_critical,
    "sweep": _run_sweep,
    "quench": _run_quench,
    "g2": _run_g2,
}


# -- recipes ------------------------------------------------------------------
_FULL_MODEL = {"periods": 64, "points": 512, "dt_recoil": 5e-3, "sample_stride": 2}


def figure_recipes() -> list[ExperimentSpec]:
    """Bundled specifications for the resonance-curve and scan figures."""
    fig3_ranges = {"fig3a": (0.22, -6, 4), "fig3b": (0.78, -10, 4), "fig3c": (1.51, -25, 4)}
    mappings = [
        {
            "kind": "steady",
            "name": "fig2",
            "protocol": {
                "eta": ["0.7 eta_cr", "1 eta_cr", "2 eta_cr"],
                "detuning_min": "-8 kappa",
                "detuning_max": "4 kappa",
                "points": 1201,
            },
        }
    ]
    for name, (eta, lo, hi) in fig3_ranges.items():
        mappings.append(
            {
                "kind": "sweep",
                "name": name,
                "physics": {"loss_rate": "92/ms"},
                "integrator": dict(_FULL_MODEL),
                "protocol": {
                    "eta": f"{eta} kappa",
                    "detuning_min": f"{lo} kappa",
                    "detuning_max": f"{hi} kappa",
                    "scan_speed": "2π×1 MHz/ms",
                    "directions": ["up", "down"],
                    "spring": name == "fig3c",
                },
            }
        )
    mappings.append(
        {
            "kind": "sweep",
            "name": "fig4",
            "physics": {"loss_rate": "92/ms"},
            "integrator": dict(_FULL_MODEL),
            "protocol": {
                "eta": f"{math.sqrt(9.5)!r} kappa",
                "detuning_min": "-14 kappa",
                "detuning_max": "6 kappa",
                "scan_speed": "2π×2 MHz/ms",
                "directions": ["up"],
            },
        }
    )
    return [ExperimentSpec.from_mapping(m) for m in mappings]


def recipe(name: str) -> ExperimentSpec:
    for spec in figure_recipes():
        if spec.name == name:
            return spec
    raise KeyError(name)


# -- grids --------------------------------------------------------------------
def _format_override(value) -> str:
    if isinstance(value, str):
        return json.dumps(value, ensure_ascii=False)
    if isinstance(value, bool):
        return "true" if value else "false"
    return repr(value)


def grid_cells(axes: Mapping[str, Sequence[Any]]) -> list[dict[str, Any]]:
    names = list(axes)
    for name in names:
        if not len(axes[name]):
            raise ConfigError(name, "grid axis is empty")
        for v in axes[name]:
            if isinstance(v, float) and not math.isfinite(v):
                raise ConfigError(name, "grid axis values must be finite")
    return [dict(zip(names, combo)) for combo in itertools.product(*(axes[n] for n in names))]


def _run_cell(source, name, overrides, out):
    try:
        spec = ExperimentSpec.from_mapping(apply_overrides(source, overrides), name=name)
        return run(spec, out)
    except Exception as exc:  # recorded per cell; the grid carries on
        return RunResult(Path(out), {}, [], {}, error=f"{type(exc).__name__}: {exc}")


def grid_run(
    base: ExperimentSpec,
    axes: Mapping[str, Sequence[Any]],
    out: str | Path | None = None,
    workers: int | None = None,
) -> list[RunResult]:
    """Run the Cartesian product of ``axes`` (dotted keys -> values) in parallel.

    Cell ``i`` writes to ``<out>/cell_<i>``; a ``grid.csv`` summary table and
    ``grid.json`` are written to ``<out>``.  Failed cells carry ``error``.
    """
    root = resolve_output(base, out)
    cells = grid_cells(axes)
    jobs = []
    for i, cell in enumerate(cells):
        overrides = [f"{k}={_format_override(v)}" for k, v in cell.items()]
        jobs.append((dict(base.source), f"{base.name}_{i:04d}", overrides, root / f"cell_{i:04d}"))
    workers = workers if workers is not None else min(len(jobs), os.cpu_count() or 1)
    if workers <= 1 or len(jobs) == 1:
        results = [_run_cell(*job) for job in jobs]
    else:
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_cell, *zip(*jobs)))
    _write_grid_summary(root, cells, results)
    return results


def _flat_scalars(summary):
    return {k: v for k, v in summary.items() if isinstance(v, (int, float, str, bool)) or v is None}


def _write_grid_summary(root: Path, cells, results):
    scalar_keys: list[str] = []
    for r in results:
        for k in _flat_scalars(r.summary):
            if k not in scalar_keys:
                scalar_keys.append(k)
    axis_keys = list(cells[0]) if cells else []
    lines = [",".join(["cell", *axis_keys, "status", *scalar_keys])]
    for i, (cell, r) in enumerate(zip(cells, results)):
        flat = _flat_scalars(r.summary)
        row = [str(i), *(json.dumps(cell[k], ensure_ascii=False) for k in axis_keys)]
        row.append("ok" if r.ok else "failed")
        row += ["" if flat.get(k) is None else str(flat[k]) for k in scalar_keys]
        lines.append(",".join(c.replace(",", ";") for c in row))
    io.atomic_write(root / "grid.csv", "\n".join(lines) + "\n")
    record = [
        {"cell": i, "axes": cell, "ok": r.ok, "error": r.error, "directory": str(r.directory), "summary": r.summary}
        for i, (cell, r) in enumerate(zip(cells, results))
    ]
    io.atomic_write(root / "grid.json", json.dumps(record, indent=2, sort_keys=True, default=str) + "\n")
