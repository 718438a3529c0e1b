"""Readers and writers for curves, trajectories, snapshots, counts and g2.

Formats:

* resonance curves: comma-separated text with columns
  ``delta_c, n1, n2, n3, stable1, stable2, stable3`` (missing branches empty),
  or JSON lines with one detuning per record;
* trajectories: JSON lines, one record per sample with keys ``t``,
  ``alpha_re``, ``alpha_im``, ``overlap``, ``norm``, ``n_atoms`` and
  ``momentum`` (fractions keyed by order);
* wavefunction snapshots: little-endian binary, a header of M (int64),
  L (float64, metres) and t (float64, seconds) followed by M interleaved
  real/imaginary float64 pairs;
* count records: one timestamp per line with 17 significant digits;
* correlation functions: two whitespace-separated columns (tau, g2).
"""

from __future__ import annotations

import json
import math
import os
import struct
import tempfile
from pathlib import Path

import numpy as np

from .dynamics import Grid, Trajectory, Wavefunction
from .measurement import CorrelationFunction, CountRecord
from .physics import SimUnits
from .steady_state import ResonanceCurve, SteadyStateSolution, Stability

CURVE_COLUMNS = ("delta_c", "n1", "n2", "n3", "stable1", "stable2", "stable3")
SNAPSHOT_HEADER = struct.Struct("<qdd")


def atomic_write(path: str | Path, data: str | bytes):
    """Write ``data`` to ``path`` through a temporary file and a rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    mode = "wb" if isinstance(data, bytes) else "w"
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, mode, **({} if mode == "wb" else {"encoding": "utf-8", "newline": "\n"})) as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def _num(x):
    return repr(float(x))


# -- resonance curves ---------------------------------------------------------
def curve_to_csv(curve: ResonanceCurve) -> str:
    lines = [",".join(CURVE_COLUMNS)]
    for dc, sols in curve.points:
        n = [_num(s.photon_number) for s in sols] + [""] * (3 - len(sols))
        st = [str(int(s.stable)) for s in sols] + [""] * (3 - len(sols))
        lines.append(",".join([_num(dc), *n, *st]))
    return "\n".join(lines) + "\n"


def _curve_point(dc, ns, flags, overlaps=None):
    sols = []
    for i, (n, flag) in enumerate(zip(ns, flags)):
        o = overlaps[i] if overlaps is not None else math.nan
        sols.append(SteadyStateSolution(n, o, Stability.STABLE if flag else Stability.UNSTABLE))
    return (dc, tuple(sols))


def curve_from_csv(text: str, eta: float = math.nan) -> ResonanceCurve:
    rows = [r for r in text.splitlines() if r.strip()]
    if not rows or tuple(rows[0].split(",")) != CURVE_COLUMNS:
        raise ValueError("not a resonance-curve table")
    points = []
    for row in rows[1:]:
        cells = row.split(",")
        ns = [float(c) for c in cells[1:4] if c]
        flags = [c == "1" for c in cells[4:7] if c]
        points.append(_curve_point(float(cells[0]), ns, flags))
    return ResonanceCurve(eta, points)


def curve_to_jsonl(curve: ResonanceCurve) -> str:
    out = []
    for dc, sols in curve.points:
        rec = {
            "delta_c": float(dc),
            "eta": float(curve.eta),
            "n": [float(s.photon_number) for s in sols],
            "overlap": [float(s.overlap) for s in sols],
            "stable": [bool(s.stable) for s in sols],
        }
        out.append(json.dumps(rec))
    return "\n".join(out) + "\n"


def curve_from_jsonl(text: str) -> ResonanceCurve:
    points, eta = [], math.nan
    for line in text.splitlines():
        if not line.strip():
            continue
        rec = json.loads(line)
        eta = rec.get("eta", eta)
        points.append(_curve_point(rec["delta_c"], rec["n"], rec["stable"], rec.get("overlap")))
    return ResonanceCurve(eta, points)


# -- trajectories -------------------------------------------------------------
def trajectory_records(traj: Trajectory):
    """Yield one JSON-ready dict per sample."""
    keys = sorted(traj.momentum)
    for i in range(len(traj)):
        yield {
            "t": float(traj.times[i]),
            "alpha_re": float(traj.alpha[i].real),
            "alpha_im": float(traj.alpha[i].imag),
            "overlap": float(traj.overlap[i]),
            "norm": float(traj.norm[i]),
            "n_atoms": float(traj.n_atoms[i]),
            "energy": float(traj.energy[i]),
            "delta_c": float(traj.delta_c[i]),
            "eta": float(traj.eta[i]),
            "resonance_shift": float(traj.resonance_shift[i]),
            "momentum": {k: float(traj.momentum[k][i]) for k in keys},
        }


def trajectory_to_jsonl(traj: Trajectory) -> str:
    return "".join(json.dumps(r) + "\n" for r in trajectory_records(traj))


def write_trajectory(path: str | Path, traj: Trajectory):
    """Stream the trajectory to ``path`` record by record, then rename into place."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(f".{path.name}.tmp")
    with tmp.open("w", encoding="utf-8", newline="\n") as fh:
        for rec in trajectory_records(traj):
            fh.write(json.dumps(rec) + "\n")
    os.replace(tmp, path)
    return path


def trajectory_from_jsonl(text: str) -> Trajectory:
    recs = [json.loads(line) for line in text.splitlines() if line.strip()]
    if not recs:
        raise ValueError("empty trajectory")

    def col(name, default=math.nan):
        return np.array([r.get(name, default) for r in recs], dtype=float)

    momentum = {k: np.array([r["momentum"][k] for r in recs]) for k in recs[0].get("momentum", {})}
    return Trajectory(
        times=col("t"),
        alpha=col("alpha_re") + 1j * col("alpha_im"),
        overlap=col("overlap"),
        norm=col("norm"),
        energy=col("energy"),
        n_atoms=col("n_atoms"),
        delta_c=col("delta_c"),
        eta=col("eta"),
        resonance_shift=col("resonance_shift"),
        momentum=momentum,
    )


# -- wavefunction snapshots ---------------------------------------------------
def snapshot_to_bytes(psi: Wavefunction, t: float, units: SimUnits) -> bytes:
    """Binary snapshot; the domain length and amplitudes are stored in SI.

    Amplitudes are rescaled by sqrt(k) so that sum |psi|^2 dx = 1 holds with
    dx in metres.
    """
    m = psi.grid.points
    length = units.length_to_si(psi.grid.length)
    values = np.asarray(psi.values, dtype=np.complex128) * math.sqrt(units.k_wave)
    body = np.empty(2 * m, dtype="<f8")
    body[0::2] = values.real
    body[1::2] = values.imag
    return SNAPSHOT_HEADER.pack(m, length, float(t)) + body.tobytes()


def snapshot_from_bytes(data: bytes, units: SimUnits):
    """Inverse of :func:`snapshot_to_bytes`; returns (Wavefunction, t)."""
    m, length, t = SNAPSHOT_HEADER.unpack_from(data)
    body = np.frombuffer(data, dtype="<f8", offset=SNAPSHOT_HEADER.size)
    if body.size != 2 * m:
        raise ValueError(f"snapshot body holds {body.size} floats, expected {2 * m}")
    periods = units.length_to_internal(length) / math.pi
    if abs(periods - round(periods)) > 1e-6:
        raise ValueError("snapshot length is not an integer number of lattice periods")
    grid = Grid(int(round(periods)), int(m))
    values = (body[0::2] + 1j * body[1::2]) / math.sqrt(units.k_wave)
    return Wavefunction(values, grid), t


# -- counts and correlations --------------------------------------------------
def write_counts(path, record: CountRecord):
    return atomic_write(path, record.to_text())


def read_counts(path, start, stop, dead_time=0.0) -> CountRecord:
    return CountRecord.from_text(Path(path).read_text(), start, stop, dead_time)


def write_correlation(path, g2: CorrelationFunction):
    return atomic_write(path, g2.to_text())


def read_correlation(path) -> CorrelationFunction:
    return CorrelationFunction.from_text(Path(path).read_text())


# -- columnar tables ----------------------------------------------------------
def table_to_csv(columns: dict[str, np.ndarray]) -> str:
    names = list(columns)
    data = np.column_stack([np.asarray(columns[k], dtype=float) for k in names])
    lines = [",".join(names)]
    lines += [",".join(_num(v) for v in row) for row in data]
    return "\n".join(lines) + "\n"


def table_from_csv(text: str) -> dict[str, np.ndarray]:
    rows = [r for r in text.splitlines() if r.strip()]
    names = rows[0].split(",")
    data = np.array([[float(c) for c in r.split(",")] for r in rows[1:]], dtype=float).reshape(-1, len(names))
    return {k: data[:, i] for i, k in enumerate(names)}
