"""Steady states of the pumped BEC-cavity system.

With the two-mode ansatz psi = c0 + c2 sqrt(2) cos(2kx) the ground-state
overlap is linear in the photon number, so the cavity acts as a Kerr medium
and the photon balance

    n (kappa^2 + (delta + s n)^2) = eta^2,      delta = Delta_c - N_eff U0 / 2

is a cubic in n.  ``s`` is ``DerivedParams.shift_per_photon``.

Detunings and pump amplitudes are angular frequencies; any consistent unit
works as long as ``DerivedParams`` uses the same one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple, Sequence

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq, minimize_scalar

from .physics import DerivedParams

ONSET_PREFACTOR = 8.0 / (3.0 * math.sqrt(3.0))
SHALLOW_C2_LIMIT = 0.3


class Stability(str, Enum):
    STABLE = "stable"
    UNSTABLE = "unstable"


class NoBistabilityError(RuntimeError):
    pass


@dataclass(frozen=True)
class TwoModeState:
    c0: float
    c2: float

    @property
    def overlap(self):
        # <psi|cos^2|psi> over one period with c0^2 + c2^2 = 1
        return 0.5 + self.c0 * self.c2 / math.sqrt(2.0)

    @property
    def shallow(self):
        return abs(self.c2) <= SHALLOW_C2_LIMIT


@dataclass(frozen=True)
class SteadyStateSolution:
    photon_number: float
    overlap: float
    stability: Stability

    @property
    def stable(self):
        return self.stability is Stability.STABLE


@dataclass(frozen=True)
class CriticalPoint:
    eta_cr: float
    n_cr: float


@dataclass
class ResonanceCurve:
    eta: float
    points: list[tuple[float, tuple[SteadyStateSolution, ...]]]

    @property
    def detunings(self):
        return np.array([dc for dc, _ in self.points])

    def branch_table(self):
        """Columns (delta_c, n1, n2, n3, stable1, stable2, stable3), NaN padded."""
        m = len(self.points)
        n = np.full((m, 3), np.nan)
        stable = np.zeros((m, 3), dtype=bool)
        for i, (_, sols) in enumerate(self.points):
            for j, sol in enumerate(sols):
                n[i, j] = sol.photon_number
                stable[i, j] = sol.stable
        return self.detunings, n, stable


class Overlap(NamedTuple):
    value: float
    clamped: bool


def two_mode_overlap(n, d: DerivedParams) -> Overlap:
    """Ground-state overlap 1/2 - n U0 / (16 omega_rec), clamped to [0, 1].

    Works on scalars and arrays; ``clamped`` marks values outside the
    two-mode ansatz.
    """
    raw = 0.5 - np.asarray(n, dtype=float) * d.u0 / (16.0 * d.omega_rec)
    value = np.clip(raw, 0.0, 1.0)
    clamped = raw != value
    if value.ndim == 0:
        return Overlap(float(value), bool(clamped))
    return Overlap(value, clamped)


def variational_ground_state(depth: float) -> TwoModeState:
    """Lowest-energy two-mode state in the lattice depth*cos^2(kx).

    ``depth`` is in units of hbar omega_rec.  In the basis {1, sqrt(2) cos 2kx}
    the single-particle Hamiltonian is depth*[[1/2, sqrt2/4], [sqrt2/4, 1/2]]
    + diag(0, 4).
    """
    h = depth * np.array([[0.5, math.sqrt(2) / 4], [math.sqrt(2) / 4, 0.5]]) + np.diag([0.0, 4.0])
    _, vecs = np.linalg.eigh(h)
    c0, c2 = vecs[:, 0]
    if c0 < 0:
        c0, c2 = -c0, -c2
    return TwoModeState(float(c0), float(c2))


def _balance(n, delta, s, kappa, eta):
    return n * (kappa**2 + (delta + s * n) ** 2) - eta**2


def _balance_slope(n, delta, s, kappa):
    y = delta + s * n
    return kappa**2 + y**2 + 2.0 * s * n * y


def _cubic_real_roots(a, b, c, e):
    """Real roots of a x^3 + b x^2 + c x + e with a != 0 (depressed-cubic form)."""
    b, c, e = b / a, c / a, e / a
    p = c - b * b / 3.0
    q = 2.0 * b**3 / 27.0 - b * c / 3.0 + e
    shift = -b / 3.0
    disc = (q / 2.0) ** 2 + (p / 3.0) ** 3
    scale = max(abs(q / 2.0) ** 2, abs(p / 3.0) ** 3, 1e-300)
    if disc > 1e-14 * scale:
        sq = math.sqrt(disc)
        u = np.cbrt(-q / 2.0 + sq)
        v = np.cbrt(-q / 2.0 - sq)
        return [u + v + shift]
    if p == 0.0:
        return [shift]
    if disc >= -1e-14 * scale:
        # (near) double root
        u = np.cbrt(-q / 2.0)
        return sorted({2.0 * u + shift, -u + shift})
    r = 2.0 * math.sqrt(-p / 3.0)
    arg = np.clip(3.0 * q / (p * r), -1.0, 1.0)
    phi = math.acos(arg) / 3.0
    return sorted(r * math.cos(phi - 2.0 * math.pi * k / 3.0) + shift for k in range(3))


def _polish(n, delta, s, kappa, eta, steps=3):
    for _ in range(steps):
        slope = _balance_slope(n, delta, s, kappa)
        if slope == 0.0:
            break
        step = _balance(n, delta, s, kappa, eta) / slope
        n_new = n - step
        if not np.isfinite(n_new):
            break
        n = n_new
    return n


def _solution(n, delta, s, d):
    slope = _balance_slope(n, delta, s, d.kappa)
    stability = Stability.STABLE if slope >= 0 else Stability.UNSTABLE
    overlap = two_mode_overlap(n, d).value
    return SteadyStateSolution(float(n), overlap, stability)


def photon_balance_roots(delta_c: float, eta: float, d: DerivedParams) -> list[SteadyStateSolution]:
    """All non-negative steady states at one detuning, sorted by photon number."""
    if eta < 0:
        raise ValueError("eta must be non-negative")
    kappa, s = d.kappa, d.shift_per_photon
    delta = delta_c - d.dispersive_shift
    if eta == 0:
        return [SteadyStateSolution(0.0, 0.5, Stability.STABLE)]
    if s == 0:
        n = eta**2 / (kappa**2 + delta**2)
        return [_solution(n, delta, s, d)]
    roots = _cubic_real_roots(s * s, 2.0 * delta * s, kappa**2 + delta**2, -(eta**2))
    roots = [_polish(r, delta, s, kappa, eta) for r in roots]
    roots = sorted(r for r in roots if r > 0)
    # collapse numerically coincident roots of a double root
    unique = []
    for r in roots:
        if unique and abs(r - unique[-1]) <= 1e-9 * max(r, 1e-300):
            continue
        unique.append(r)
    return [_solution(r, delta, s, d) for r in unique]


def resonance_curve(delta_cs: Sequence[float], eta: float, d: DerivedParams) -> ResonanceCurve:
    return ResonanceCurve(eta, [(float(dc), tuple(photon_balance_roots(dc, eta, d))) for dc in delta_cs])


def critical_point(d: DerivedParams) -> CriticalPoint:
    """Closed-form onset of bistability: n_cr = 8/(3 sqrt 3) * kappa / s."""
    s = d.shift_per_photon
    if s == 0 or d.u0 == 0:
        raise ValueError("no Kerr shift (U0 = 0): the system has no bistability")
    n_cr = ONSET_PREFACTOR * d.kappa / abs(s)
    return CriticalPoint(eta_cr=d.kappa * math.sqrt(n_cr), n_cr=n_cr)


def cubic_discriminant(delta: float, eta: float, s: float, kappa: float) -> float:
    """Discriminant of the photon-balance cubic; positive means three real roots."""
    a, b, c, e = s * s, 2.0 * delta * s, kappa**2 + delta**2, -(eta**2)
    return 18 * a * b * c * e - 4 * b**3 * e + b * b * c * c - 4 * a * c**3 - 27 * a * a * e * e


def _scan_radius(eta, d):
    # the bistable interval lies between the tilted peak (-s n_peak) and zero
    return 3.0 * d.kappa + abs(d.shift_per_photon) * (eta / d.kappa) ** 2


def _most_bistable_delta(eta, d, points=2001):
    """Detuning (relative to the dispersive shift) maximizing the discriminant."""
    s, kappa = d.shift_per_photon, d.kappa
    radius = _scan_radius(eta, d)
    side = -1.0 if s > 0 else 1.0
    deltas = side * np.linspace(0.0, radius, points)
    scale = (kappa**2 + (s * eta**2 / kappa**2) ** 2) ** 4

    def objective(x):
        return -cubic_discriminant(x, eta, s, kappa) / scale

    vals = objective(deltas)
    i = int(np.argmin(vals))
    lo, hi = sorted((deltas[max(i - 1, 0)], deltas[min(i + 1, points - 1)]))
    res = minimize_scalar(objective, bounds=(lo, hi), method="bounded", options={"xatol": 1e-15 * radius})
    best = float(res.x) if res.fun <= vals[i] else float(deltas[i])
    return best, radius


def find_critical_numeric(d: DerivedParams, eta_ceiling: float | None = None, rtol: float = 1e-4) -> CriticalPoint:
    """Bisection on eta for the onset of three roots.

    For each trial eta the detuning with the largest cubic discriminant is
    located (grid scan plus bounded refinement) and the roots there are
    counted with :func:`photon_balance_roots`.  The pump is first doubled
    from a tiny value until three roots appear or ``eta_ceiling`` is passed.
    """
    if d.u0 == 0 or d.shift_per_photon == 0:
        raise NoBistabilityError("U0 = 0: no Kerr shift, no bistability up to any pump strength")
    kappa = d.kappa
    if eta_ceiling is None:
        eta_ceiling = 1e3 * kappa

    def bistable(eta):
        delta, _ = _most_bistable_delta(eta, d)
        return len(photon_balance_roots(delta + d.dispersive_shift, eta, d)) == 3

    hi = 1e-3 * kappa
    while not bistable(hi):
        if hi >= eta_ceiling:
            raise NoBistabilityError(f"no bistable detuning found for eta up to {eta_ceiling:.6g}")
        hi = min(2.0 * hi, eta_ceiling)
    lo = 0.5 * hi
    while hi - lo > rtol * hi * 0.25:
        mid = 0.5 * (lo + hi)
        if bistable(mid):
            hi = mid
        else:
            lo = mid
    eta_cr = 0.5 * (lo + hi)
    return CriticalPoint(eta_cr=eta_cr, n_cr=(eta_cr / kappa) ** 2)


def turning_points(eta: float, s: float, kappa: float) -> tuple[float, float] | None:
    """Detunings delta (relative to the dispersive shift) bounding the bistable interval.

    Along the folded branch delta(n) = -s n - sqrt(eta^2/n - kappa^2) the
    turning points satisfy eta^2 n^3 - kappa^2 n^4 = eta^4 / (4 s^2), whose
    left-hand side peaks at n = 3 n_peak / 4.  Solving in n keeps the result
    well conditioned at the onset, where delta(n) is flat.
    """
    if eta <= 0 or s == 0:
        return None
    n_peak = (eta / kappa) ** 2
    target = eta**4 / (4.0 * s * s)

    def h(n):
        return (eta**2 * n**3 - kappa**2 * n**4) / target - 1.0

    n_top = 0.75 * n_peak
    if h(n_top) <= 0:
        return None
    n1 = brentq(h, 0.0, n_top, xtol=1e-16 * n_peak, rtol=1e-15)
    n2 = brentq(h, n_top, n_peak, xtol=1e-16 * n_peak, rtol=1e-15)

    def delta(n):
        return -abs(s) * n - math.sqrt(max(eta**2 / n - kappa**2, 0.0))

    a, b = sorted((delta(n1), delta(n2)))
    return (a, b) if s > 0 else (-b, -a)


def bistable_window(eta: float, d: DerivedParams) -> tuple[float, float] | None:
    """Detuning interval (Delta_c) with three steady states, or None."""
    if eta < 0:
        raise ValueError("eta must be non-negative")
    if eta == 0 or d.shift_per_photon == 0:
        return None
    if eta <= critical_point(d).eta_cr:
        return None
    tp = turning_points(eta, d.shift_per_photon, d.kappa)
    if tp is None:
        return None
    return tp[0] + d.dispersive_shift, tp[1] + d.dispersive_shift


def hysteresis_path(direction: str, eta: float, d: DerivedParams, delta_cs: Sequence[float]):
    """Quasi-static scan following the stable branch connected to the start.

    ``direction`` is "up" (increasing Delta_c) or "down".  Returns arrays
    (delta_c, n) ordered along the scan.
    """
    grid = np.sort(np.asarray(delta_cs, dtype=float))
    if direction == "down":
        grid = grid[::-1]
    elif direction != "up":
        raise ValueError(f"direction must be 'up' or 'down', got {direction!r}")
    path = np.empty_like(grid)
    prev = None
    for i, dc in enumerate(grid):
        stable = [sol.photon_number for sol in photon_balance_roots(dc, eta, d) if sol.stable]
        if prev is None:
            n = stable[0]
        else:
            n = min(stable, key=lambda x: abs(x - prev))
        path[i] = prev = n
    return grid, path


# -- steady states for a tabulated overlap curve ------------------------------
class OverlapCurve:
    """Ground-state overlap O(n) tabulated on a photon-number grid.

    Used for steady states beyond the two-mode model (trap, interactions).
    """

    def __init__(self, photon_numbers, overlaps):
        n = np.asarray(photon_numbers, dtype=float)
        o = np.asarray(overlaps, dtype=float)
        if n.ndim != 1 or n.shape != o.shape or n.size < 4:
            raise ValueError("need at least four (n, overlap) samples")
        order = np.argsort(n)
        self.n = n[order]
        self.overlap = o[order]
        self._spline = CubicSpline(self.n, self.overlap)

    @property
    def n_max(self):
        return float(self.n[-1])

    def __call__(self, n):
        return self._spline(n)

    def slope(self, n):
        return self._spline(n, 1)


def _onset_measure(n_peak, slope_fn, d, samples=400):
    # fold condition: 2 |f'(n)| n^{3/2} sqrt(n_peak - n) / n_peak = kappa
    def g(n):
        fprime = np.abs(d.n_eff * d.u0 * slope_fn(n))
        return 2.0 * fprime * n**1.5 * np.sqrt(np.maximum(n_peak - n, 0.0)) / n_peak

    n = n_peak * np.linspace(0.0, 1.0, samples + 2)[1:-1]
    vals = g(n)
    i = int(np.argmax(vals))
    lo, hi = n[max(i - 1, 0)], n[min(i + 1, samples - 1)]
    res = minimize_scalar(lambda x: -g(x), bounds=(lo, hi), method="bounded", options={"xatol": 1e-12 * n_peak})
    return float(max(vals[i], -res.fun))


def critical_point_from_overlap(curve: OverlapCurve, d: DerivedParams) -> CriticalPoint:
    """Onset of bistability for an arbitrary overlap curve O(n).

    The resonant photon number n_peak = eta^2/kappa^2 at onset is the smallest
    one for which the detuning along a branch, f(n) +- kappa sqrt(n_peak/n - 1)
    with f = N_eff U0 O(n), stops being monotonic.
    """
    kappa = d.kappa
    peaks = np.geomspace(curve.n_max * 1e-3, curve.n_max, 200)
    measure = np.array([_onset_measure(p, curve.slope, d) for p in peaks]) - kappa
    above = np.nonzero(measure > 0)[0]
    if above.size == 0:
        raise NoBistabilityError(f"no bistability for photon numbers up to {curve.n_max:.4g}")
    i = above[0]
    if i == 0:
        raise NoBistabilityError("overlap table starts above onset; extend it to smaller n")
    n_cr = brentq(lambda p: _onset_measure(p, curve.slope, d) - kappa, peaks[i - 1], peaks[i], rtol=1e-10)
    return CriticalPoint(eta_cr=kappa * math.sqrt(n_cr), n_cr=n_cr)


def general_balance_roots(delta_c: float, eta: float, curve: OverlapCurve, d: DerivedParams, samples=4000):
    """Steady states for a tabulated overlap curve, by sign scan plus brentq."""
    kappa = d.kappa
    top = min((eta / kappa) ** 2, curve.n_max)
    if eta == 0:
        return [SteadyStateSolution(0.0, float(curve(0.0)), Stability.STABLE)]

    def residual(n):
        return n * (kappa**2 + (delta_c - d.n_eff * d.u0 * curve(n)) ** 2) - eta**2

    grid = np.linspace(0.0, top * (1 + 1e-12), samples)
    vals = residual(grid)
    roots = []
    for a, b, fa, fb in zip(grid[:-1], grid[1:], vals[:-1], vals[1:]):
        if fa == 0:
            roots.append(a)
        elif fa * fb < 0:
            roots.append(brentq(residual, a, b, xtol=1e-14 * top))
    out = []
    h = 1e-6 * top
    for r in roots:
        slope = (residual(r + h) - residual(max(r - h, 0.0))) / (r + h - max(r - h, 0.0))
        stab = Stability.STABLE if slope >= 0 else Stability.UNSTABLE
        out.append(SteadyStateSolution(float(r), float(curve(r)), stab))
    return out


def general_turning_points(eta: float, curve: OverlapCurve, d: DerivedParams, samples=20000):
    """Turning points (Delta_c_low, Delta_c_high) of a tabulated-overlap curve.

    Each branch is parametrized by n: Delta_c = f(n) +- kappa sqrt(n_peak/n - 1);
    the turning points are the interior extrema of that parametrization.
    Returns None when the curve is single valued.
    """
    kappa = d.kappa
    n_peak = (eta / kappa) ** 2
    if n_peak > curve.n_max:
        raise ValueError("overlap table does not reach the resonant photon number")
    n = n_peak * np.linspace(0.0, 1.0, samples + 2)[1:-1]
    f = d.n_eff * d.u0 * curve(n)
    width = kappa * np.sqrt(n_peak / n - 1.0)
    extrema = []
    for sign in (+1.0, -1.0):
        dc = f + sign * width
        ddc = np.diff(dc)
        flips = np.nonzero(np.sign(ddc[:-1]) != np.sign(ddc[1:]))[0]
        for j in flips:
            extrema.append(dc[j + 1])
    if len(extrema) < 2:
        return None
    return float(min(extrema)), float(max(extrema))
