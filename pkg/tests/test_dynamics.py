import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from beccavity.dynamics import (
    ConvergenceError,
    DriveProtocol,
    Grid,
    IntegratorConfig,
    NumericalError,
    Schedule,
    Wavefunction,
    antisymmetric_fraction,
    evolve,
    ground_state_imaginary_time,
    momentum_populations,
    quench_response,
    quiet_start,
    two_mode_linear_stability,
)
from beccavity.measurement import dominant_frequency
from beccavity.physics import TWO_PI, derive_params, paper_params
from beccavity.steady_state import bistable_window, photon_balance_roots, two_mode_overlap

SMALL = IntegratorConfig(periods=2, points=64)


def ansatz(grid, c0, c2):
    return Wavefunction(c0 + c2 * math.sqrt(2) * np.cos(2 * grid.x), grid).normalized()


def test_grid_validation():
    with pytest.raises(ValueError):
        Grid(4, 100)
    g = Grid(4, 128)
    assert g.length == pytest.approx(4 * math.pi)
    assert g.dx == pytest.approx(4 * math.pi / 128)
    with pytest.raises(ValueError):
        Wavefunction.uniform(g).overlap if False else Wavefunction.uniform(g).inner(Wavefunction.uniform(Grid(4, 64)))


def test_uniform_state_properties():
    psi = Wavefunction.uniform(Grid(8, 256))
    assert psi.norm() == pytest.approx(1.0, abs=1e-12)
    assert psi.overlap() == pytest.approx(0.5, abs=1e-14)
    pops = momentum_populations(psi)
    assert pops.p0 == pytest.approx(1.0, abs=1e-14)
    assert pops.plus2 < 1e-28 and pops.minus2 < 1e-28


def test_momentum_populations_of_ansatz():
    grid = Grid(4, 128)
    c2 = 0.1
    psi = ansatz(grid, math.sqrt(1 - c2**2), c2)
    pops = momentum_populations(psi)
    assert pops.plus2 == pytest.approx(c2**2 / 2, rel=1e-10)
    assert pops.minus2 == pytest.approx(c2**2 / 2, rel=1e-10)
    total = pops.p0 + pops.plus2 + pops.minus2 + pops.plus4 + pops.minus4 + pops.remainder
    assert total == pytest.approx(1.0, abs=1e-10)


@settings(max_examples=50, deadline=None)
@given(coeffs=st.lists(st.complex_numbers(max_magnitude=1.0, allow_nan=False, allow_infinity=False), min_size=8, max_size=8))
def test_momentum_fractions_sum_to_one(coeffs):
    grid = Grid(4, 128)
    rng_x = grid.x
    values = sum(c * np.exp(1j * m * rng_x) for m, c in zip(range(-4, 4), coeffs))
    if np.sum(np.abs(values) ** 2) < 1e-12:
        return
    pops = momentum_populations(Wavefunction(values, grid).normalized())
    total = pops.p0 + pops.plus2 + pops.minus2 + pops.plus4 + pops.minus4 + pops.remainder
    assert total == pytest.approx(1.0, abs=1e-10)


def test_ground_state_without_lattice_is_uniform(params):
    psi = ground_state_imaginary_time(0.0, params, SMALL, trap=False, interactions=False)
    assert np.allclose(np.abs(psi.values), np.abs(psi.values[0]), atol=1e-12)
    assert psi.overlap() == pytest.approx(0.5, abs=1e-12)


def test_ground_state_matches_two_mode_overlap(params, derived):
    psi = ground_state_imaginary_time(0.2, params, SMALL, trap=False, interactions=False)
    two_mode = two_mode_overlap(0.2, derived).value
    assert abs(psi.overlap() - two_mode) / abs(0.5 - two_mode) < 0.01


def test_deep_lattice_overlap(params, derived):
    n = 20 * derived.omega_rec / derived.u0
    psi = ground_state_imaginary_time(n, params, SMALL, trap=False, interactions=False)
    assert psi.overlap() < 0.3
    from beccavity.steady_state import variational_ground_state

    assert not variational_ground_state(20.0).shallow


def test_imaginary_time_energy_descends(params):
    history = []
    cfg = IntegratorConfig(periods=64, points=512)
    ground_state_imaginary_time(0.3, params, cfg, trap=True, interactions=True, energies=history)
    steps = np.diff(history)
    assert np.all(steps <= 1e-13 * np.abs(history[:-1]).max())
    assert history[-1] < history[0]


def test_imaginary_time_reports_non_convergence(params):
    cfg = IntegratorConfig(periods=2, points=64, imag_max_iter=3)
    with pytest.raises(ConvergenceError) as info:
        ground_state_imaginary_time(0.5, params, cfg, trap=False, interactions=False)
    assert len(info.value.energies) >= 3


def test_empty_cavity_decay(params):
    d = derive_params(params)
    grid = SMALL.grid
    duration = 3.0 / params.kappa
    proto = DriveProtocol(Schedule.constant(0.0), Schedule.constant(d.dispersive_shift), duration)
    cfg = IntegratorConfig(periods=2, points=64, dt=duration / 4000, sample_stride=40)
    psi0 = Wavefunction.uniform(grid)
    quiet = params.replace(trap_freqs=(0, 0, 0), g_1d=0.0)
    traj = evolve(psi0, 1.0 + 0j, proto, quiet, cfg)
    expected = np.exp(-2 * params.kappa * traj.times)
    assert np.max(np.abs(traj.photon_number / expected - 1)) < 1e-10
    # without atom-light coupling nothing acts on the uniform state
    traj = evolve(psi0, 1.0 + 0j, proto, quiet.replace(g0=0.0), cfg)
    assert np.allclose(traj.final_psi.values, psi0.values * traj.final_psi.values[0] / psi0.values[0], atol=1e-12)


def test_norm_conserved_over_long_run(params, derived):
    steps = 100_000
    dt = 1e-3 / derived.omega_rec
    eta = 0.5 * params.kappa
    proto = DriveProtocol(
        Schedule.constant(eta), Schedule.constant(derived.dispersive_shift), steps * dt, interactions=True
    )
    cfg = IntegratorConfig(periods=2, points=64, sample_stride=1000)
    psi0 = ground_state_imaginary_time(0.0, params, cfg, trap=False, interactions=True)
    traj = evolve(psi0, 0j, proto, params, cfg)
    assert len(traj) == steps // 1000 + 1
    assert np.max(np.abs(traj.norm - 1)) < 1e-8


def test_frozen_lattice_conserves_energy(params):
    cfg = IntegratorConfig(periods=2, points=64, cavity_mode="frozen", sample_stride=100)
    d = derive_params(params)
    psi0 = Wavefunction.uniform(cfg.grid)
    steps = 10_000
    cfg = IntegratorConfig(periods=2, points=64, cavity_mode="frozen", sample_stride=100, dt=2.5e-4 / d.omega_rec)
    proto = DriveProtocol(Schedule.constant(0.0), Schedule.constant(0.0), steps * cfg.dt, interactions=True)
    traj = evolve(psi0, complex(math.sqrt(0.5)), proto, params, cfg)
    assert np.ptp(traj.overlap) > 1e-3  # the condensate is really moving
    assert np.max(np.abs(traj.energy - traj.energy[0])) < 1e-8


def test_parity_is_preserved(params):
    cfg = IntegratorConfig(periods=16, points=256, sample_stride=500)
    d = derive_params(params)
    psi0 = ground_state_imaginary_time(0.0, params, cfg, trap=True, interactions=True)
    assert antisymmetric_fraction(psi0) < 1e-20
    proto = DriveProtocol(
        Schedule.constant(params.kappa), Schedule.constant(d.dispersive_shift), 5e-4, trap=True, interactions=True
    )
    traj = evolve(psi0, 0j, proto, params, cfg)
    # a trapped cloud has weight at odd multiples of k, so only the mirror symmetry is tested
    assert antisymmetric_fraction(traj.final_psi) < 1e-10


def test_relaxes_onto_single_root(params, derived):
    k = params.kappa
    eta = 0.3 * k
    delta_c = derived.dispersive_shift + 2 * k
    ramp = 2e-3
    proto = DriveProtocol(Schedule((0.0, ramp, ramp + 5e-4), (0.0, eta, eta)), Schedule.constant(delta_c), ramp + 5e-4)
    cfg = IntegratorConfig(periods=1, points=32, dt=5e-3 / derived.omega_rec, sample_stride=20)
    psi0 = ground_state_imaginary_time(0.0, params, cfg, trap=False, interactions=False)
    traj = evolve(psi0, 0j, proto, params, cfg)
    (root,) = photon_balance_roots(delta_c, eta, derived)
    assert traj.photon_number[-1] == pytest.approx(root.photon_number, rel=0.01)


def test_quiet_start_is_self_consistent(params, derived):
    k = params.kappa
    proto = DriveProtocol(
        Schedule.constant(0.5 * k), Schedule.constant(derived.dispersive_shift - 0.5 * k), 1e-4
    )
    psi, alpha = quiet_start(params, proto, IntegratorConfig(periods=1, points=32))
    n = abs(alpha) ** 2
    roots = [s.photon_number for s in photon_balance_roots(proto.delta_c(0.0), 0.5 * k, derived)]
    assert min(abs(n - r) / r for r in roots) < 0.01


def test_non_finite_state_is_reported(params):
    cfg = IntegratorConfig(periods=2, points=64, sample_stride=1)
    bad = Wavefunction.uniform(cfg.grid)
    bad.values[3] = np.nan
    proto = DriveProtocol(Schedule.constant(0.0), Schedule.constant(0.0), 1e-6)
    with pytest.raises(NumericalError):
        evolve(bad, 0j, proto, params, cfg)


def test_zero_quench_stays_put(params):
    traj = quench_response(0.0, params, duration=2e-4)
    assert np.max(np.abs(traj.overlap - 0.5)) < 1e-12


def test_weak_quench_frequency(params, derived):
    traj = quench_response(0.01, params)
    peak = dominant_frequency(traj.overlap, traj.times[1] - traj.times[0])
    bare = 4 * derived.omega_rec / TWO_PI
    assert peak.frequency == pytest.approx(bare, rel=0.02)


def test_adiabatic_cavity_tracks_full_equations(params, derived):
    # kappa / (4 omega_rec) ~ 86, above the 50x guard
    assert params.kappa / (4 * derived.omega_rec) > 50
    full = quench_response(0.05, params, IntegratorConfig(periods=1, points=32, sample_stride=5))
    adi = quench_response(0.05, params, IntegratorConfig(periods=1, points=32, sample_stride=5, cavity_mode="adiabatic"))
    assert np.max(np.abs(adi.overlap - full.overlap) / full.overlap) < 0.01


def test_strong_quench_gives_pulsed_transmission(params, derived):
    # pump switched on resonance with the unperturbed lattice
    proto = DriveProtocol(Schedule.constant(2 * params.kappa), Schedule.constant(derived.dispersive_shift), 1e-3)
    cfg = IntegratorConfig(periods=1, points=32, sample_stride=5)
    psi = ground_state_imaginary_time(0.0, params, cfg, trap=False, interactions=False)
    traj = evolve(psi, 0j, proto, params, cfg)
    n = traj.photon_number[len(traj) // 4 :]
    assert n.max() > 5 * n.min()


def test_middle_root_is_dynamically_unstable(params, derived):
    eta = 0.78 * params.kappa
    lo, hi = bistable_window(eta, derived)
    dc = 0.5 * (lo + hi)
    low, mid, high = photon_balance_roots(dc, eta, derived)
    assert np.max(two_mode_linear_stability(mid.photon_number, params, dc, eta).real) > 0
    assert np.max(two_mode_linear_stability(low.photon_number, params, dc, eta).real) < 1e-3


def test_refinement_convergence_on_scan_segment(params, derived):
    """Halving dt and doubling M barely moves the end state of a short scan."""
    k = params.kappa
    base = dict(periods=64, sample_stride=1000)
    speed = TWO_PI * 1e6 / 1e-3
    duration = 0.5 * k / speed
    proto = DriveProtocol(
        Schedule.constant(0.78 * k),
        Schedule.ramp(duration, derived.dispersive_shift + 1.5 * k, derived.dispersive_shift + 1.0 * k),
        duration,
        atom_loss=True,
        interactions=True,
        trap=True,
    )
    ends = []
    for points, dt in ((512, 1e-3), (1024, 5e-4)):
        cfg = IntegratorConfig(points=points, dt=dt / derived.omega_rec, **base)
        psi, alpha = quiet_start(params, proto, cfg)
        traj = evolve(psi, alpha, proto, params, cfg)
        ends.append((traj.overlap[-1], traj.photon_number[-1]))
    (o1, n1), (o2, n2) = ends
    assert abs(o1 - o2) < 1e-4
    assert abs(n1 - n2) / n2 < 1e-4
