"""Mean-field dynamics of the condensate in the cavity lattice.

The condensate wavefunction obeys a 1D Gross-Pitaevskii equation with the
lattice |alpha|^2 U0 cos^2(kx); the cavity amplitude obeys

    i dalpha/dt = -(Delta_c - U0 N_eff O + i kappa) alpha + i eta,
    O = <psi|cos^2(kx)|psi>.

Internally everything runs in reduced units: hbar = 1, x in 1/k (one
lattice period is pi), frequencies in omega_rec, time in 1/omega_rec.  The
kinetic operator is then -d^2/dx^2.  Public functions take and return SI.
"""

from __future__ import annotations

import cmath
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import brentq

from .physics import PhysicalParams, SimUnits, derive_params
from .steady_state import photon_balance_roots, two_mode_overlap

log = logging.getLogger(__name__)

CAVITY_MODES = ("full_ode", "adiabatic", "frozen")
SPLITTINGS = ("strang", "lie")


class NumericalError(RuntimeError):
    """Integration produced non-finite values; carries the last good state."""

    def __init__(self, message, time=None, psi=None, alpha=None):
        super().__init__(message)
        self.time = time
        self.psi = psi
        self.alpha = alpha


class ConvergenceError(RuntimeError):
    def __init__(self, message, energies=()):
        super().__init__(message)
        self.energies = list(energies)


# -- grid and wavefunction ----------------------------------------------------
@dataclass(frozen=True)
class Grid:
    """Periodic grid of ``points`` samples over ``periods`` lattice periods."""

    periods: int = 64
    points: int = 1024

    def __post_init__(self):
        if self.periods < 1 or int(self.periods) != self.periods:
            raise ValueError("periods must be a positive integer")
        if self.points < 2 or self.points & (self.points - 1):
            raise ValueError(f"points must be a power of two, got {self.points}")

    @property
    def length(self):
        return self.periods * math.pi

    @property
    def dx(self):
        return self.length / self.points

    @property
    def x(self):
        return (np.arange(self.points) - self.points // 2) * self.dx

    @property
    def k(self):
        return 2.0 * np.pi * np.fft.fftfreq(self.points, d=self.dx)


@dataclass
class Wavefunction:
    """Condensate wavefunction in reduced units, normalized as sum |psi|^2 dx = 1."""

    values: np.ndarray
    grid: Grid

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex)
        if self.values.shape != (self.grid.points,):
            raise ValueError("wavefunction does not match its grid")

    @classmethod
    def uniform(cls, grid: Grid):
        return cls(np.full(grid.points, 1.0 / math.sqrt(grid.length), dtype=complex), grid)

    def norm(self):
        return float(np.sum(np.abs(self.values) ** 2) * self.grid.dx)

    def normalized(self):
        return Wavefunction(self.values / math.sqrt(self.norm()), self.grid)

    def overlap(self):
        return lattice_overlap(self.values, self.grid)

    def _check(self, other):
        if other.grid != self.grid:
            raise ValueError("wavefunctions live on different grids")

    def inner(self, other):
        self._check(other)
        return complex(np.vdot(self.values, other.values) * self.grid.dx)


def lattice_overlap(values, grid: Grid):
    return float(np.sum(np.abs(values) ** 2 * np.cos(grid.x) ** 2) * grid.dx)


@dataclass(frozen=True)
class MomentumPopulations:
    """Populations of the diffraction orders p = 2 j hbar k.

    Every grid momentum closer than hbar k to an even order is attributed to
    it; ``odd`` collects the components sitting exactly on odd multiples of
    hbar k, which the cos^2 lattice cannot populate from even initial data.
    """

    p0: float
    plus2: float
    minus2: float
    plus4: float
    minus4: float
    remainder: float
    odd: float

    @property
    def total(self):
        return self.p0 + self.plus2 + self.minus2 + self.plus4 + self.minus4 + self.remainder


def momentum_populations(psi: Wavefunction) -> MomentumPopulations:
    grid = psi.grid
    weights = np.abs(np.fft.fft(psi.values)) ** 2
    weights /= weights.sum()
    k = grid.k
    order = np.rint(k / 2.0)
    on_order = np.abs(k - 2.0 * order) < 1.0 - 1e-9
    odd = np.abs(np.abs(k - 2.0 * order) - 1.0) < 1e-9

    def pick(j):
        return float(weights[on_order & (order == j)].sum())

    named = {j: pick(j) for j in (0, 1, -1, 2, -2)}
    remainder = float(1.0 - sum(named.values()))
    return MomentumPopulations(
        p0=named[0],
        plus2=named[1],
        minus2=named[-1],
        plus4=named[2],
        minus4=named[-2],
        remainder=max(remainder, 0.0),
        odd=float(weights[odd].sum()),
    )


def antisymmetric_fraction(psi: Wavefunction):
    """Norm of the part of psi that is odd under x -> -x."""
    v = psi.values
    mirrored = np.roll(v[::-1], 1)  # index j -> M - j, i.e. x -> -x
    odd = 0.5 * (v - mirrored)
    return float(np.sum(np.abs(odd) ** 2) * psi.grid.dx)


# -- protocols and configuration ----------------------------------------------
@dataclass(frozen=True)
class Schedule:
    """Piecewise-linear schedule through (time, value) breakpoints, SI units."""

    times: tuple[float, ...]
    values: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "times", tuple(float(t) for t in self.times))
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        if len(self.times) != len(self.values) or not self.times:
            raise ValueError("schedule needs matching, non-empty times and values")
        if any(b <= a for a, b in zip(self.times, self.times[1:])):
            raise ValueError("schedule breakpoints must be strictly increasing")

    @classmethod
    def constant(cls, value):
        return cls((0.0,), (value,))

    @classmethod
    def ramp(cls, duration, start, stop):
        return cls((0.0, duration), (start, stop))

    def __call__(self, t):
        return np.interp(t, self.times, self.values)


@dataclass(frozen=True)
class DriveProtocol:
    """Pump amplitude and cavity-pump detuning schedules (rad/s) over ``duration`` s."""

    eta: Schedule
    delta_c: Schedule
    duration: float
    atom_loss: bool = False
    interactions: bool = False
    trap: bool = False

    def __post_init__(self):
        if self.duration <= 0:
            raise ValueError("duration must be positive")


@dataclass(frozen=True)
class IntegratorConfig:
    """Numerical settings.  ``dt`` is in seconds; None means 1e-3 / omega_rec."""

    dt: float | None = None
    periods: int = 64
    points: int = 1024
    cavity_mode: str = "full_ode"
    splitting: str = "strang"
    sample_stride: int = 10
    snapshot_stride: int = 0
    alpha_substep: float = 0.1
    imag_dt: tuple[float, ...] = (0.05, 0.01, 0.002)
    imag_tol: float = 1e-12
    imag_max_iter: int = 200_000

    def __post_init__(self):
        if self.dt is not None and self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.cavity_mode not in CAVITY_MODES:
            raise ValueError(f"cavity_mode must be one of {CAVITY_MODES}")
        if self.splitting not in SPLITTINGS:
            raise ValueError(f"splitting must be one of {SPLITTINGS}")
        if self.sample_stride < 1:
            raise ValueError("sample_stride must be >= 1")
        Grid(self.periods, self.points)

    @property
    def grid(self):
        return Grid(self.periods, self.points)

    def dt_internal(self, units: SimUnits):
        return 1e-3 if self.dt is None else units.time_to_internal(self.dt)


# -- reduced model ------------------------------------------------------------
@dataclass
class _Model:
    """Equation coefficients in reduced units."""

    units: SimUnits
    grid: Grid
    u0: float
    n_eff0: float
    kappa: float
    loss: float
    trap: np.ndarray
    g: float
    cos2: np.ndarray = field(init=False)
    k2: np.ndarray = field(init=False)

    def __post_init__(self):
        self.cos2 = np.cos(self.grid.x) ** 2
        self.k2 = self.grid.k**2

    @classmethod
    def build(cls, p: PhysicalParams, grid: Grid, *, trap=True, interactions=True, atom_loss=False):
        d = derive_params(p)
        units = SimUnits(d.omega_rec, d.k_wave)
        if trap and p.trap_freqs[0] > 0:
            potential = units.trap_coefficient(p.trap_freqs[0], p.atom_mass) * grid.x**2
        else:
            potential = np.zeros(grid.points)
        return cls(
            units=units,
            grid=grid,
            u0=units.freq_to_internal(d.u0),
            n_eff0=d.n_eff,
            kappa=units.freq_to_internal(p.kappa),
            loss=(p.loss_rate / p.n_atoms / d.omega_rec) if atom_loss else 0.0,
            trap=potential,
            g=units.g1d_to_internal(p.g_1d) if interactions else 0.0,
        )

    def n_eff(self, t):
        return self.n_eff0 * math.exp(-self.loss * t) if self.loss else self.n_eff0

    def overlap(self, psi):
        return float(np.dot(np.abs(psi) ** 2, self.cos2) * self.grid.dx)

    def energy(self, psi, photons):
        dx = self.grid.dx
        dens = np.abs(psi) ** 2
        phik = np.fft.fft(psi)
        kinetic = np.sum(self.k2 * np.abs(phik) ** 2) * dx / self.grid.points
        potential = np.sum((self.u0 * photons * self.cos2 + self.trap) * dens) * dx
        return float(kinetic + potential + 0.5 * self.g * np.sum(dens**2) * dx)


def _alpha_step(alpha, delta, eta, kappa, h):
    """Exact step of dalpha/dt = (i delta - kappa) alpha + eta.

    Returns the new amplitude and the time integral of |alpha|^2 over h.
    """
    lam = complex(-kappa, delta)
    a_ss = -eta / lam
    a = alpha - a_ss
    e = cmath.exp(lam * h)
    new = a_ss + a * e
    integral = (
        abs(a_ss) ** 2 * h
        + 2.0 * (a_ss.conjugate() * a * (e - 1.0) / lam).real
        + abs(a) ** 2 * (-math.expm1(-2.0 * kappa * h)) / (2.0 * kappa)
    )
    return new, integral


# -- trajectory ---------------------------------------------------------------
@dataclass
class Trajectory:
    """Sampled history of a run.  Times in s, frequencies in rad/s.

    ``energy`` is the Gross-Pitaevskii energy per atom in units of
    hbar omega_rec; ``resonance_shift`` is N_eff(t) U0 / 2, so
    ``delta_c - resonance_shift`` is the detuning corrected for atom loss.
    """

    times: np.ndarray
    alpha: np.ndarray
    overlap: np.ndarray
    norm: np.ndarray
    energy: np.ndarray
    n_atoms: np.ndarray
    delta_c: np.ndarray
    eta: np.ndarray
    resonance_shift: np.ndarray
    momentum: dict[str, np.ndarray]
    snapshots: list[tuple[float, Wavefunction]] = field(default_factory=list)
    final_psi: Wavefunction | None = None

    @property
    def photon_number(self):
        return np.abs(self.alpha) ** 2

    @property
    def relative_detuning(self):
        return self.delta_c - self.resonance_shift

    def __len__(self):
        return len(self.times)


class _Recorder:
    keys = ("p0", "plus2", "minus2", "plus4", "minus4", "remainder", "odd")

    def __init__(self):
        self.rows = []
        self.snapshots = []

    def add(self, model, t, psi, alpha, photons, delta_c, eta):
        pops = momentum_populations(Wavefunction(psi, model.grid))
        n_eff = model.n_eff(t)
        self.rows.append(
            (
                t,
                alpha,
                model.overlap(psi),
                float(np.sum(np.abs(psi) ** 2) * model.grid.dx),
                model.energy(psi, photons),
                n_eff,
                delta_c,
                eta,
                0.5 * n_eff * model.u0,
                tuple(getattr(pops, key) for key in self.keys),
            )
        )

    def build(self, model, p, final_psi):
        u = model.units
        cols = list(zip(*self.rows))
        mom = np.array(cols[9])
        return Trajectory(
            times=u.time_to_si(np.array(cols[0])),
            alpha=np.array(cols[1], dtype=complex),
            overlap=np.array(cols[2]),
            norm=np.array(cols[3]),
            energy=np.array(cols[4]),
            n_atoms=np.array(cols[5]) / p.transverse_overlap,
            delta_c=u.freq_to_si(np.array(cols[6])),
            eta=u.freq_to_si(np.array(cols[7])),
            resonance_shift=u.freq_to_si(np.array(cols[8])),
            momentum={key: mom[:, i] for i, key in enumerate(self.keys)},
            snapshots=[(u.time_to_si(t), w) for t, w in self.snapshots],
            final_psi=final_psi,
        )


# -- ground state -------------------------------------------------------------
def ground_state_imaginary_time(
    photons: float,
    p: PhysicalParams,
    cfg: IntegratorConfig = IntegratorConfig(),
    *,
    trap: bool = True,
    interactions: bool = True,
    initial: Wavefunction | None = None,
    energies: list | None = None,
) -> Wavefunction:
    """Lowest-energy state of the GPE in the fixed lattice photons*U0*cos^2(kx).

    Split-step imaginary-time propagation with renormalization, run through
    the decreasing steps ``cfg.imag_dt``; each stage stops once the energy
    changes by less than ``cfg.imag_tol`` (hbar omega_rec) per step.  If
    ``energies`` is a list, the energy after every step is appended to it.
    """
    if photons < 0:
        raise ValueError("photon number must be non-negative")
    grid = cfg.grid
    model = _Model.build(p, grid, trap=trap, interactions=interactions)
    psi = (initial.values if initial is not None else _initial_guess(model)).astype(complex)
    if initial is not None and initial.grid != grid:
        raise ValueError("initial wavefunction lives on a different grid")
    dx = grid.dx
    psi = psi / math.sqrt(np.sum(np.abs(psi) ** 2) * dx)
    lattice = model.u0 * photons * model.cos2
    history = energies if energies is not None else []
    energy = model.energy(psi, photons)
    history.append(energy)
    iterations = 0
    for dtau in cfg.imag_dt:
        kin = np.exp(-model.k2 * dtau)
        while True:
            half = np.exp(-0.5 * dtau * (lattice + model.trap + model.g * np.abs(psi) ** 2))
            psi = np.fft.ifft(kin * np.fft.fft(half * psi))
            psi *= np.exp(-0.5 * dtau * (lattice + model.trap + model.g * np.abs(psi) ** 2))
            psi /= math.sqrt(np.sum(np.abs(psi) ** 2) * dx)
            new = model.energy(psi, photons)
            history.append(new)
            iterations += 1
            if not np.isfinite(new):
                raise ConvergenceError("imaginary-time propagation diverged", history)
            change = abs(new - energy)
            energy = new
            if change < cfg.imag_tol:
                break
            if iterations >= cfg.imag_max_iter:
                raise ConvergenceError(
                    f"no convergence after {iterations} steps (last change {change:.3e})", history
                )
    if not trap:
        # a homogeneous ground state is real; drop the arbitrary global phase
        psi = np.abs(psi) * np.sign(psi.real + (psi.real == 0))
    return Wavefunction(psi, grid)


def _initial_guess(model):
    x = model.grid.x
    coeff = model.trap[model.grid.points // 2 + 1] / x[model.grid.points // 2 + 1] ** 2 if model.trap.any() else 0.0
    if coeff > 0 and model.g > 0:
        mu = (0.75 * model.g * math.sqrt(coeff)) ** (2.0 / 3.0)
        psi = np.sqrt(np.clip(mu - model.trap, 0.0, None) / model.g) + 0j
        if psi.any():
            return psi
    if coeff > 0:
        width = coeff**-0.25
        return np.exp(-0.5 * (x / width) ** 2) + 0j
    return np.ones_like(x, dtype=complex)


def overlap_curve(photon_numbers: Sequence[float], p: PhysicalParams, cfg: IntegratorConfig = IntegratorConfig(), **kw):
    """Ground-state overlap for each photon number, warm-starting from the previous state."""
    out = []
    psi = None
    for n in sorted(photon_numbers):
        psi = ground_state_imaginary_time(n, p, cfg, initial=psi, **kw)
        out.append(psi.overlap())
    return np.array(sorted(photon_numbers)), np.array(out)


# -- real-time evolution ------------------------------------------------------
def evolve(
    psi0: Wavefunction,
    alpha0: complex,
    proto: DriveProtocol,
    p: PhysicalParams,
    cfg: IntegratorConfig = IntegratorConfig(),
    progress: Callable[[float], None] | None = None,
) -> Trajectory:
    """Integrate the coupled condensate-cavity equations.

    The wavefunction takes symmetric split steps (potential, kinetic,
    potential).  The cavity amplitude takes exact exponential steps with the
    overlap frozen; the lattice kick uses the exact time integral of
    |alpha|^2 over the step.  With ``splitting="strang"`` the cavity is
    advanced in two half steps around the kinetic step, the second using the
    overlap after it; with ``"lie"`` it takes one full step first.

    ``cavity_mode="adiabatic"`` slaves alpha to its instantaneous steady
    state, ``"frozen"`` holds alpha (and thus the lattice depth) at alpha0.
    """
    grid = psi0.grid
    if grid != cfg.grid:
        raise ValueError("initial wavefunction does not live on the configured grid")
    model = _Model.build(p, grid, trap=proto.trap, interactions=proto.interactions, atom_loss=proto.atom_loss)
    u = model.units
    dt = cfg.dt_internal(u)
    steps = max(1, int(round(u.time_to_internal(proto.duration) / dt)))
    mode = cfg.cavity_mode
    strang = cfg.splitting == "strang"
    n_sub = max(1, math.ceil(model.kappa * dt / cfg.alpha_substep))
    # cavity sub-intervals per step: two half steps (strang) or one full step
    n_mid = 2 * n_sub if strang else n_sub
    h_sub = dt / n_mid
    kinetic = np.exp(-1j * model.k2 * dt)
    base = model.trap
    kappa = model.kappa
    u0 = model.u0

    def schedules(t_si):
        """Pump and loss-corrected coupling at the given SI times, reduced units."""
        t = u.time_to_internal(t_si)
        eta = u.freq_to_internal(proto.eta(t_si))
        delta = u.freq_to_internal(proto.delta_c(t_si))
        coupling = model.n_eff0 * np.exp(-model.loss * t) * u0
        return eta.tolist(), delta.tolist(), coupling.tolist()

    def cavity(alpha, overlap, eta, delta, coupling, j0, count):
        """Advance alpha over ``count`` sub-intervals with the overlap frozen."""
        if mode == "frozen":
            return alpha, abs(alpha) ** 2 * h_sub * count
        total = 0.0
        if mode == "adiabatic":
            for j in range(j0, j0 + count):
                alpha = eta[j] / complex(kappa, overlap * coupling[j] - delta[j])
                total += abs(alpha) ** 2 * h_sub
            return alpha, total
        for j in range(j0, j0 + count):
            alpha, part = _alpha_step(alpha, delta[j] - coupling[j] * overlap, eta[j], kappa, h_sub)
            total += part
        return alpha, total

    def kick(psi, photon_time, h):
        phase = u0 * photon_time * model.cos2 + h * (base + model.g * np.abs(psi) ** 2)
        return psi * np.exp(-1j * phase)

    psi = psi0.values.copy()
    alpha = complex(alpha0)
    overlap = model.overlap(psi)
    if mode == "adiabatic":
        e0, d0, c0 = schedules(np.zeros(1))
        alpha = e0[0] / complex(kappa, overlap * c0[0] - d0[0])
    rec = _Recorder()

    def record(t):
        t_si = u.time_to_si(t)
        rec.add(model, t, psi, alpha, abs(alpha) ** 2,
                u.freq_to_internal(float(proto.delta_c(t_si))), u.freq_to_internal(float(proto.eta(t_si))))

    record(0.0)
    block = 2048
    offsets = (np.arange(n_mid) + 0.5) * h_sub
    for first in range(1, steps + 1, block):
        last_step = min(first + block - 1, steps)
        starts = (np.arange(first, last_step + 1) - 1) * dt
        eta_b, delta_b, coupling_b = schedules(u.time_to_si((starts[:, None] + offsets).ravel()))
        for i in range(first, last_step + 1):
            good = (psi, alpha)
            j = (i - first) * n_mid
            if strang:
                alpha, ia = cavity(alpha, overlap, eta_b, delta_b, coupling_b, j, n_sub)
                psi = kick(psi, ia, 0.5 * dt)
                psi = np.fft.ifft(kinetic * np.fft.fft(psi))
                overlap = model.overlap(psi)
                alpha, ib = cavity(alpha, overlap, eta_b, delta_b, coupling_b, j + n_sub, n_sub)
                psi = kick(psi, ib, 0.5 * dt)
            else:
                alpha, total = cavity(alpha, overlap, eta_b, delta_b, coupling_b, j, n_sub)
                psi = kick(psi, 0.5 * total, 0.5 * dt)
                psi = np.fft.ifft(kinetic * np.fft.fft(psi))
                psi = kick(psi, 0.5 * total, 0.5 * dt)
                overlap = model.overlap(psi)
            t = i * dt
            if i % cfg.sample_stride == 0 or i == steps:
                if not (cmath.isfinite(alpha) and np.all(np.isfinite(psi))):
                    raise NumericalError(
                        f"non-finite state at t = {u.time_to_si(t):.6e} s",
                        time=u.time_to_si(t - cfg.sample_stride * dt),
                        psi=Wavefunction(good[0], grid),
                        alpha=good[1],
                    )
                record(t)
                if progress is not None:
                    progress(i / steps)
            if cfg.snapshot_stride and i % cfg.snapshot_stride == 0:
                rec.snapshots.append((t, Wavefunction(psi.copy(), grid)))
    return rec.build(model, p, Wavefunction(psi, grid))


# -- protocols ----------------------------------------------------------------
def scan_protocol(
    p: PhysicalParams,
    eta: float,
    detuning_start: float,
    detuning_stop: float,
    scan_speed: float,
    *,
    atom_loss=True,
    interactions=True,
    trap=True,
) -> DriveProtocol:
    """Linear detuning ramp at ``scan_speed`` (rad/s per s).

    Start and stop detunings are given relative to the empty-lattice
    resonance N_eff U0 / 2 at t = 0; the up or down direction follows from
    their order.
    """
    if scan_speed <= 0:
        raise ValueError("scan_speed must be positive")
    shift = derive_params(p).dispersive_shift
    duration = abs(detuning_stop - detuning_start) / scan_speed
    return DriveProtocol(
        eta=Schedule.constant(eta),
        delta_c=Schedule.ramp(duration, shift + detuning_start, shift + detuning_stop),
        duration=duration,
        atom_loss=atom_loss,
        interactions=interactions,
        trap=trap,
    )


def quiet_start(p: PhysicalParams, proto: DriveProtocol, cfg: IntegratorConfig, rtol: float = 1e-6):
    """Ground state and cavity amplitude in mutual equilibrium at t = 0.

    Solves n (kappa^2 + det(n)^2) = eta^2, where det(n) uses the overlap of the
    ground state in the lattice of n photons.  The lowest solution is taken;
    the two-mode roots seed the bracket.
    """
    d = derive_params(p)
    eta = float(proto.eta(0.0))
    delta_c = float(proto.delta_c(0.0))
    kw = dict(trap=proto.trap, interactions=proto.interactions)
    cache = {}
    state = {"psi": ground_state_imaginary_time(0.0, p, cfg, **kw)}

    def ground(n):
        if n not in cache:
            state["psi"] = cache[n] = ground_state_imaginary_time(n, p, cfg, initial=state["psi"], **kw)
        return cache[n]

    def balance(n):
        det = delta_c - d.n_eff * d.u0 * ground(n).overlap()
        return n * (p.kappa**2 + det**2) - eta**2

    if eta == 0:
        return ground(0.0), 0j
    n_top = (eta / p.kappa) ** 2
    guess = photon_balance_roots(delta_c, eta, d)[0].photon_number
    lo, hi = 0.8 * guess, min(1.25 * guess, n_top)
    if not (balance(lo) < 0 <= balance(hi)):
        # fall back to the first sign change on a coarse grid
        grid = np.linspace(0.0, n_top, 17)
        vals = [balance(x) if x > 0 else -(eta**2) for x in grid]
        i = next(j for j in range(16) if vals[j] < 0 <= vals[j + 1])
        lo, hi = grid[i], grid[i + 1]
    n = brentq(balance, lo, hi, xtol=rtol * guess, rtol=rtol)
    psi = ground(n)
    det = delta_c - d.n_eff * d.u0 * psi.overlap()
    return psi, eta / complex(p.kappa, -det)


def sweep_simulation(proto: DriveProtocol, p: PhysicalParams, cfg: IntegratorConfig = IntegratorConfig(), **kw) -> Trajectory:
    """Detuning scan starting from the self-consistent state at the first detuning."""
    psi, alpha = quiet_start(p, proto, cfg)
    return evolve(psi, alpha, proto, p, cfg, **kw)


def quench_protocol(n_target: float, p: PhysicalParams, duration: float, *, trap=False, interactions=False):
    """Sudden pump turn-on tuned so the steady state sits on resonance with n_target photons."""
    d = derive_params(p)
    overlap = two_mode_overlap(n_target, d).value
    return DriveProtocol(
        eta=Schedule.constant(p.kappa * math.sqrt(n_target)),
        delta_c=Schedule.constant(d.n_eff * d.u0 * overlap),
        duration=duration,
        trap=trap,
        interactions=interactions,
    )


def quench_response(
    n_target: float,
    p: PhysicalParams,
    cfg: IntegratorConfig = IntegratorConfig(periods=2, points=64),
    duration: float | None = None,
    *,
    trap=False,
    interactions=False,
) -> Trajectory:
    """Drive switched on abruptly with the condensate in its n = 0 ground state.

    The default duration covers 50 periods of the bare 4 omega_rec oscillation.
    """
    d = derive_params(p)
    if duration is None:
        duration = 50 * 2 * math.pi / (4 * d.omega_rec)
    proto = quench_protocol(n_target, p, duration, trap=trap, interactions=interactions)
    psi = ground_state_imaginary_time(0.0, p, cfg, trap=trap, interactions=interactions)
    return evolve(psi, 0j, proto, p, cfg)


# -- two-mode reference dynamics ----------------------------------------------
def two_mode_rhs(state, p: PhysicalParams, delta_c: float, eta: float):
    """Right-hand side of the two-mode + cavity equations in reduced units.

    ``state`` = (c0, c2, alpha) as complex numbers; detuning and pump in
    rad/s.  Returns the time derivatives (per 1/omega_rec).
    """
    d = derive_params(p)
    u0 = d.u0 / d.omega_rec
    kappa = p.kappa / d.omega_rec
    dc, et = delta_c / d.omega_rec, eta / d.omega_rec
    c0, c2, alpha = state
    depth = u0 * abs(alpha) ** 2
    r2 = math.sqrt(2.0) / 4.0
    dc0 = -1j * (depth * (0.5 * c0 + r2 * c2))
    dc2 = -1j * (depth * (r2 * c0 + 0.5 * c2) + 4.0 * c2)
    overlap = 0.5 * (abs(c0) ** 2 + abs(c2) ** 2) + 2 * r2 * (np.conj(c0) * c2).real
    dalpha = 1j * (dc - d.n_eff * u0 * overlap + 1j * kappa) * alpha + et
    return np.array([dc0, dc2, dalpha])


def two_mode_linear_stability(photons: float, p: PhysicalParams, delta_c: float, eta: float, h=1e-7):
    """Eigenvalues (units of omega_rec) of the two-mode dynamics linearized at a steady state.

    The steady state has the variational ground state at ``photons`` and the
    matching cavity amplitude.  Perturbations are taken in the frame
    co-rotating with the condensate's chemical potential; the two neutral
    modes from norm and global phase are removed.
    """
    from .steady_state import variational_ground_state

    d = derive_params(p)
    depth = d.u0 / d.omega_rec * photons
    gs = variational_ground_state(depth)
    r2 = math.sqrt(2.0) / 4.0
    mu = depth * (0.5 + r2 * gs.c2 / gs.c0)
    kappa = p.kappa / d.omega_rec
    det = delta_c / d.omega_rec - d.n_eff * d.u0 / d.omega_rec * gs.overlap
    alpha = (eta / d.omega_rec) / complex(kappa, -det)

    def rhs(vec):
        c0 = complex(vec[0], vec[1])
        c2 = complex(vec[2], vec[3])
        a = complex(vec[4], vec[5])
        f = two_mode_rhs((c0, c2, a), p, delta_c, eta)
        f[0] += 1j * mu * c0
        f[1] += 1j * mu * c2
        return np.array([f[0].real, f[0].imag, f[1].real, f[1].imag, f[2].real, f[2].imag])

    x0 = np.array([gs.c0, 0.0, gs.c2, 0.0, alpha.real, alpha.imag])
    jac = np.empty((6, 6))
    for j in range(6):
        step = np.zeros(6)
        step[j] = h * max(1.0, abs(x0[j]))
        jac[:, j] = (rhs(x0 + step) - rhs(x0 - step)) / (2 * step[j])
    eig = np.linalg.eigvals(jac)
    # drop the two eigenvalues closest to zero (norm and phase)
    order = np.argsort(np.abs(eig))
    return eig[order[2:]]
