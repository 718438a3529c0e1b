"""Physical parameters of the BEC-cavity system and their derived quantities.

All inputs are SI with angular frequencies in rad/s.  The simulation
modules work in reduced units (hbar = 1, lengths in 1/k, frequencies in
omega_rec, times in 1/omega_rec); :class:`SimUnits` converts between the two.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

from scipy.constants import atomic_mass, hbar

TWO_PI = 2.0 * math.pi

RB87_MASS = 86.909180527 * atomic_mass
RB87_SCATTERING_LENGTH = 5.3e-9

#: warn threshold for the dispersive-regime ratios
REGIME_WARN_THRESHOLD = 0.1


def thomas_fermi_g1d(scattering_length, atom_mass, n_atoms, radius_y, radius_z):
    """Mean-field coefficient of a unit-normalized 1D wavefunction.

    The 3D contact coupling 4 pi hbar^2 a / m is integrated over a
    transverse Thomas-Fermi disc with radii (radius_y, radius_z), whose
    effective area is 3 pi Ry Rz / 4.  The result is multiplied by the atom
    number because the 1D wavefunction is normalized to one, not to N.
    """
    g3d = 4.0 * math.pi * hbar**2 * scattering_length / atom_mass
    area = 0.75 * math.pi * radius_y * radius_z
    return n_atoms * g3d / area


@dataclass(frozen=True)
class PhysicalParams:
    """Experimental parameters.  Frequencies are angular (rad/s)."""

    g0: float
    kappa: float
    gamma: float
    delta_a: float
    lambda_light: float
    atom_mass: float
    n_atoms: float
    trap_freqs: tuple[float, float, float] = (0.0, 0.0, 0.0)
    transverse_overlap: float = 1.0
    g_1d: float = 0.0
    loss_rate: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "trap_freqs", tuple(float(w) for w in self.trap_freqs))
        if len(self.trap_freqs) != 3:
            raise ValueError("trap_freqs needs three entries (wx, wy, wz)")
        if self.kappa <= 0:
            raise ValueError(f"kappa must be positive, got {self.kappa}")
        if self.g0 < 0:
            raise ValueError(f"g0 must be non-negative, got {self.g0}")
        if self.lambda_light <= 0 or self.atom_mass <= 0:
            raise ValueError("lambda_light and atom_mass must be positive")
        if self.n_atoms <= 0:
            raise ValueError(f"n_atoms must be positive, got {self.n_atoms}")
        if not 0.0 < self.transverse_overlap <= 1.0:
            raise ValueError(f"transverse_overlap must lie in (0, 1], got {self.transverse_overlap}")
        if self.gamma < 0 or self.loss_rate < 0 or self.g_1d < 0:
            raise ValueError("gamma, loss_rate and g_1d must be non-negative")

    @property
    def dispersive_valid(self):
        """True when the far-detuned (dispersive) approximation holds."""
        return validity_report(self).passed

    def replace(self, **changes):
        return replace(self, **changes)


def paper_params(**overrides):
    """Parameter set of the 87Rb experiment, with keyword overrides.

    ``g_1d`` defaults to :func:`thomas_fermi_g1d` evaluated for a = 5.3 nm and
    Thomas-Fermi radii Ry = 19.3 um, Rz = 3.4 um.
    """
    n_atoms = overrides.get("n_atoms", 1e5)
    values = dict(
        g0=TWO_PI * 14.1e6,
        kappa=TWO_PI * 1.3e6,
        gamma=TWO_PI * 3.0e6,
        delta_a=TWO_PI * 58e9,
        lambda_light=780e-9,
        atom_mass=RB87_MASS,
        n_atoms=n_atoms,
        trap_freqs=(TWO_PI * 220.0, TWO_PI * 48.0, TWO_PI * 202.0),
        transverse_overlap=0.6,
        g_1d=thomas_fermi_g1d(RB87_SCATTERING_LENGTH, RB87_MASS, n_atoms, 19.3e-6, 3.4e-6),
        loss_rate=92e3,
    )
    values.update(overrides)
    return PhysicalParams(**values)


@dataclass(frozen=True)
class DerivedParams:
    """Quantities derived from :class:`PhysicalParams`.

    ``u0`` is the light shift of a maximally coupled atom per photon and sets
    the lattice depth.  The transverse overlap reduces the number of atoms
    that collectively shift the cavity, ``n_eff = transverse_overlap * N``,
    which enters the dispersive shift and the Kerr coefficient.
    """

    u0: float
    k_wave: float
    omega_rec: float
    n_eff: float
    dispersive_shift: float
    shift_per_photon: float
    kappa: float

    def with_u0(self, u0):
        """Same system with a different per-photon light shift."""
        return replace(
            self,
            u0=u0,
            dispersive_shift=0.5 * self.n_eff * u0,
            shift_per_photon=self.n_eff * u0**2 / (16.0 * self.omega_rec),
        )


def derive_params(p: PhysicalParams) -> DerivedParams:
    if p.delta_a == 0:
        raise ValueError("delta_a = 0: the dispersive model is undefined on atomic resonance")
    u0 = p.g0**2 / p.delta_a
    k = TWO_PI / p.lambda_light
    omega_rec = hbar * k**2 / (2.0 * p.atom_mass)
    n_eff = p.transverse_overlap * p.n_atoms
    return DerivedParams(
        u0=u0,
        k_wave=k,
        omega_rec=omega_rec,
        n_eff=n_eff,
        dispersive_shift=0.5 * n_eff * u0,
        shift_per_photon=n_eff * u0**2 / (16.0 * omega_rec),
        kappa=p.kappa,
    )


@dataclass(frozen=True)
class RegimeReport:
    collective_ratio: float
    gamma_ratio: float
    threshold: float = REGIME_WARN_THRESHOLD

    @property
    def collective_flag(self):
        return "pass" if self.collective_ratio < self.threshold else "warn"

    @property
    def gamma_flag(self):
        return "pass" if self.gamma_ratio < self.threshold else "warn"

    @property
    def passed(self):
        return self.collective_flag == "pass" and self.gamma_flag == "pass"


def validity_report(p: PhysicalParams) -> RegimeReport:
    """Ratios sqrt(N) g0 / |delta_a| and gamma / |delta_a| with pass/warn flags."""
    if p.delta_a == 0:
        return RegimeReport(math.inf if p.g0 > 0 else 0.0, math.inf if p.gamma > 0 else 0.0)
    da = abs(p.delta_a)
    return RegimeReport(math.sqrt(p.n_atoms) * p.g0 / da, p.gamma / da)


@dataclass(frozen=True)
class SimUnits:
    """Reduced units: hbar = 1, length 1/k, frequency omega_rec, time 1/omega_rec."""

    omega_rec: float
    k_wave: float
    hbar: float = field(default=hbar)

    @classmethod
    def from_params(cls, p: PhysicalParams):
        d = derive_params(p)
        return cls(omega_rec=d.omega_rec, k_wave=d.k_wave)

    @property
    def energy(self):
        return self.hbar * self.omega_rec

    def freq_to_internal(self, w):
        return w / self.omega_rec

    def freq_to_si(self, w):
        return w * self.omega_rec

    def time_to_internal(self, t):
        return t * self.omega_rec

    def time_to_si(self, t):
        return t / self.omega_rec

    def length_to_internal(self, x):
        return x * self.k_wave

    def length_to_si(self, x):
        return x / self.k_wave

    def energy_to_internal(self, e):
        return e / self.energy

    def energy_to_si(self, e):
        return e * self.energy

    def g1d_to_internal(self, g):
        # g |psi|^2 with psi in m^-1/2: energy * length
        return g * self.k_wave / self.energy

    def g1d_to_si(self, g):
        return g * self.energy / self.k_wave

    def trap_coefficient(self, omega_x, atom_mass):
        """Coefficient c of V_ext = c * x^2 in reduced units."""
        return 0.5 * atom_mass * omega_x**2 / (self.k_wave**2 * self.energy)
