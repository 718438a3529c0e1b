import dataclasses
import math

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from beccavity.physics import TWO_PI, derive_params, paper_params
from beccavity.steady_state import (
    NoBistabilityError,
    OverlapCurve,
    Stability,
    bistable_window,
    critical_point,
    critical_point_from_overlap,
    find_critical_numeric,
    general_balance_roots,
    general_turning_points,
    hysteresis_path,
    photon_balance_roots,
    resonance_curve,
    two_mode_overlap,
    variational_ground_state,
)


def brute_force_roots(delta, eta, s, kappa, n_top):
    """Sign changes of the balance polynomial on a dense grid, refined by bisection."""
    n = np.linspace(0, n_top, 400001)
    f = n * (kappa**2 + (delta + s * n) ** 2) - eta**2
    idx = np.nonzero(np.sign(f[:-1]) != np.sign(f[1:]))[0]
    roots = []
    for i in idx:
        a, b = n[i], n[i + 1]
        for _ in range(80):
            m = 0.5 * (a + b)
            fm = m * (kappa**2 + (delta + s * m) ** 2) - eta**2
            fa = a * (kappa**2 + (delta + s * a) ** 2) - eta**2
            a, b = (m, b) if np.sign(fm) == np.sign(fa) else (a, m)
        roots.append(0.5 * (a + b))
    return roots


def residual(n, delta, eta, d):
    return n * (d.kappa**2 + (delta + d.shift_per_photon * n) ** 2) - eta**2


def test_zero_pump_single_stable_root(derived):
    for dc in (-1e9, 0.0, derived.dispersive_shift, 5e8):
        sols = photon_balance_roots(dc, 0.0, derived)
        assert len(sols) == 1 and sols[0].photon_number == 0 and sols[0].stable


def test_lorentzian_limit_without_kerr(derived):
    d = derived.with_u0(0.0)
    k = d.kappa
    eta = 0.8 * k
    for dc in np.linspace(-5 * k, 5 * k, 41):
        sols = photon_balance_roots(dc, eta, d)
        assert len(sols) == 1
        assert sols[0].photon_number == pytest.approx(eta**2 / (k**2 + dc**2), rel=1e-14)
    peak = max(s.photon_number for _, sols in resonance_curve(np.linspace(-k, k, 201), eta, d).points for s in sols)
    assert abs(peak - eta**2 / k**2) <= 1e-12 * eta**2 / k**2


def test_roots_match_brute_force_scan(derived):
    cp = critical_point(derived)
    eta = 2 * cp.eta_cr
    lo, hi = bistable_window(eta, derived)
    for dc in np.linspace(lo - 2 * derived.kappa, hi + 2 * derived.kappa, 13):
        delta = dc - derived.dispersive_shift
        found = [s.photon_number for s in photon_balance_roots(dc, eta, derived)]
        oracle = brute_force_roots(delta, eta, derived.shift_per_photon, derived.kappa, 1.01 * (eta / derived.kappa) ** 2)
        assert len(found) == len(oracle)
        np.testing.assert_allclose(found, oracle, rtol=1e-8)


def test_three_roots_exist_at_twice_critical_pump(derived):
    eta = 2 * critical_point(derived).eta_cr
    lo, hi = bistable_window(eta, derived)
    counts = [len(photon_balance_roots(dc, eta, derived)) for dc in np.linspace(lo, hi, 50)[1:-1]]
    assert set(counts) == {3}


@settings(max_examples=300, deadline=None)
@given(rel=st.floats(-30, 10), eta_k=st.floats(0.01, 3.0))
def test_roots_residual_count_and_stability(derived, rel, eta_k):
    k = derived.kappa
    eta = eta_k * k
    delta = rel * k
    sols = photon_balance_roots(derived.dispersive_shift + delta, eta, derived)
    assert 1 <= len(sols) <= 3
    ns = [s.photon_number for s in sols]
    assert ns == sorted(ns) and all(n >= 0 for n in ns)
    for n in ns:
        assert abs(residual(n, delta, eta, derived)) < 1e-10 * eta**2
    if len(sols) == 3:
        assert [s.stability for s in sols] == [Stability.STABLE, Stability.UNSTABLE, Stability.STABLE]


def test_critical_point_paper_value(derived):
    cp = critical_point(derived)
    assert cp.n_cr == pytest.approx(0.18, rel=0.10)
    assert cp.n_cr == pytest.approx((cp.eta_cr / derived.kappa) ** 2, rel=1e-14)
    # closed form written out with the prefactor 8 / (3 sqrt 3)
    expected = 8 / (3 * math.sqrt(3)) * 16 * derived.kappa * derived.omega_rec / (derived.n_eff * derived.u0**2)
    assert cp.n_cr == pytest.approx(expected, rel=1e-12)


def test_critical_point_full_overlap_value():
    cp = critical_point(derive_params(paper_params(transverse_overlap=1.0)))
    assert cp.n_cr == pytest.approx(0.10, rel=0.05)


def test_critical_point_scales_inversely_with_n_u0_squared(derived):
    doubled = dataclasses.replace(derived, n_eff=2 * derived.n_eff, shift_per_photon=2 * derived.shift_per_photon)
    assert critical_point(doubled).n_cr == pytest.approx(0.5 * critical_point(derived).n_cr, rel=1e-14)


def test_critical_point_rejects_zero_shift(derived):
    with pytest.raises(ValueError):
        critical_point(derived.with_u0(0.0))
    with pytest.raises(NoBistabilityError):
        find_critical_numeric(derived.with_u0(0.0))


def test_numeric_oracle_ceiling_diagnostic(derived):
    with pytest.raises(NoBistabilityError, match="no bistable"):
        find_critical_numeric(derived, eta_ceiling=0.5 * critical_point(derived).eta_cr)


def test_numeric_critical_point_paper(derived):
    num = find_critical_numeric(derived)
    assert num.n_cr == pytest.approx(critical_point(derived).n_cr, rel=1e-3)


def test_mirrored_kerr_sign_mirrors_window(derived):
    mirror = dataclasses.replace(derived, shift_per_photon=-derived.shift_per_photon)
    eta = 1.51 * derived.kappa
    lo, hi = bistable_window(eta, derived)
    mlo, mhi = bistable_window(eta, mirror)
    shift = derived.dispersive_shift
    assert mlo - shift == pytest.approx(-(hi - shift), rel=1e-8)
    assert mhi - shift == pytest.approx(-(lo - shift), rel=1e-8)
    assert find_critical_numeric(mirror).eta_cr == pytest.approx(find_critical_numeric(derived).eta_cr, rel=1e-4)


def test_window_absent_below_threshold_and_small_at_onset(derived):
    cp = critical_point(derived)
    assert bistable_window(0.9 * cp.eta_cr, derived) is None
    w = bistable_window(cp.eta_cr * (1 + 1e-6), derived)
    assert w is not None
    assert 0 < w[1] - w[0] < derived.kappa / 100


def test_window_edges_are_turning_points(derived):
    eta = 1.51 * derived.kappa
    lo, hi = bistable_window(eta, derived)
    step = 1e-6 * derived.kappa
    assert len(photon_balance_roots(lo + step, eta, derived)) == 3
    assert len(photon_balance_roots(lo - step, eta, derived)) == 1
    assert len(photon_balance_roots(hi - step, eta, derived)) == 3
    assert len(photon_balance_roots(hi + step, eta, derived)) == 1


@settings(max_examples=40, deadline=None)
@given(a=st.floats(1.0, 6.0), b=st.floats(1.0, 6.0))
def test_window_width_monotone_in_pump(derived, a, b):
    assume(abs(a - b) > 1e-3)
    eta_cr = critical_point(derived).eta_cr
    lo_eta, hi_eta = sorted((a, b))

    def width(x):
        w = bistable_window(x * eta_cr, derived)
        return 0.0 if w is None else w[1] - w[0]

    assert width(hi_eta) >= width(lo_eta)


def test_hysteresis_paths(derived):
    k = derived.kappa
    grid = derived.dispersive_shift + np.linspace(-25 * k, 5 * k, 3001)
    # below threshold: identical
    eta = 0.5 * critical_point(derived).eta_cr
    (gu, nu), (gd, nd) = hysteresis_path("up", eta, derived, grid), hysteresis_path("down", eta, derived, grid)
    np.testing.assert_array_equal(nu, nd[::-1])

    eta = 1.51 * k
    lo, hi = bistable_window(eta, derived)
    gu, nu = hysteresis_path("up", eta, derived, grid)
    gd, nd = hysteresis_path("down", eta, derived, grid)
    nd_up_order = nd[::-1]
    outside = (gu < lo) | (gu > hi)
    assert np.max(np.abs(nu[outside] - nd_up_order[outside])) < 1e-10
    inside = ~outside
    assert np.all(np.abs(nu[inside] - nd_up_order[inside]) > 0)
    up_jump = gu[np.argmax(np.diff(nu)) + 1]
    down_jump = gd[np.argmax(-np.diff(nd)) + 1]
    assert up_jump >= down_jump
    assert lo - 0.02 * k <= down_jump <= hi + 0.02 * k
    assert lo - 0.02 * k <= up_jump <= hi + 0.02 * k


def test_hysteresis_without_kerr_is_lorentzian(derived):
    d = derived.with_u0(0.0)
    k = d.kappa
    grid = np.linspace(-5 * k, 5 * k, 101)
    _, nu = hysteresis_path("up", 0.5 * k, d, grid)
    _, nd = hysteresis_path("down", 0.5 * k, d, grid)
    np.testing.assert_allclose(nu, (0.5 * k) ** 2 / (k**2 + grid**2), rtol=1e-14)
    np.testing.assert_allclose(nd[::-1], nu, rtol=1e-14)


def test_two_mode_overlap_examples(derived):
    assert two_mode_overlap(0.0, derived).value == 0.5
    assert not two_mode_overlap(0.0, derived).clamped
    d1 = derive_params(paper_params(transverse_overlap=1.0))
    assert two_mode_overlap(1.0, d1).value == pytest.approx(0.5 - 3.43 / (16 * 3.77), abs=1e-3)
    big = two_mode_overlap(1e4, derived)
    assert big.value == 0.0 and big.clamped
    arr = two_mode_overlap(np.linspace(0, 5, 50), derived)
    assert np.all(np.diff(arr.value) < 0)


def test_variational_state_limits():
    s = variational_ground_state(0.0)
    assert (s.c0, s.c2) == (1.0, 0.0)
    for depth in (0.5, 3.0, -2.0):
        st_ = variational_ground_state(depth)
        assert st_.c0**2 + st_.c2**2 == pytest.approx(1.0, abs=1e-14)
    neg = variational_ground_state(-1.0)
    assert neg.c2 > 0 and neg.overlap > 0.5
    pos = variational_ground_state(1.0)
    assert pos.c2 < 0 and pos.overlap < 0.5


def ansatz_energy(theta, depth, points=4096):
    """Energy of c0 + c2 sqrt2 cos 2x on one period by direct quadrature (x in 1/k)."""
    x = np.linspace(0, np.pi, points, endpoint=False)
    c0, c2 = np.cos(theta), np.sin(theta)
    psi = (c0 + c2 * np.sqrt(2) * np.cos(2 * x)) / np.sqrt(np.pi)
    dpsi = -2 * c2 * np.sqrt(2) * np.sin(2 * x) / np.sqrt(np.pi)
    dx = np.pi / points
    return np.sum(dpsi**2 + depth * np.cos(x) ** 2 * psi**2) * dx


@pytest.mark.parametrize("depth", [1e-4, 0.3, 2.0, -1.5])
def test_variational_state_against_direct_minimization(depth):
    thetas = np.linspace(-np.pi / 2, np.pi / 2, 20001)
    energies = np.array([ansatz_energy(t, depth, 512) for t in thetas[::50]])
    t0 = thetas[::50][np.argmin(energies)]
    fine = np.linspace(t0 - 0.01, t0 + 0.01, 2001)
    best = fine[np.argmin([ansatz_energy(t, depth, 512) for t in fine])]
    s = variational_ground_state(depth)
    assert s.c0 == pytest.approx(np.cos(best), abs=2e-5)
    assert s.c2 == pytest.approx(np.sin(best), abs=2e-5)


def test_variational_state_first_order_perturbation():
    eps = 1e-5
    # <2|V|0> = eps sqrt2/4, energy gap 4 hbar omega_rec
    assert variational_ground_state(eps).c2 == pytest.approx(-eps * math.sqrt(2) / 16, rel=1e-4)


def test_variational_overlap_matches_formula_to_first_order(derived):
    n = 1e-3
    depth = n * derived.u0 / derived.omega_rec
    assert variational_ground_state(depth).overlap == pytest.approx(two_mode_overlap(n, derived).value, abs=1e-8)


def test_shallow_flag():
    assert variational_ground_state(1.0).shallow
    assert not variational_ground_state(20.0).shallow


def linear_curve(d, n_max=2.0):
    n = np.linspace(0, n_max, 41)
    return OverlapCurve(n, 0.5 - n * d.u0 / (16 * d.omega_rec))


def test_tabulated_overlap_reproduces_two_mode_results(derived):
    curve = linear_curve(derived, 3.0)
    assert critical_point_from_overlap(curve, derived).n_cr == pytest.approx(critical_point(derived).n_cr, rel=1e-6)
    eta = 1.51 * derived.kappa
    lo, hi = bistable_window(eta, derived)
    tp = general_turning_points(eta, curve, derived)
    assert tp[0] == pytest.approx(lo, abs=1e-3 * derived.kappa)
    assert tp[1] == pytest.approx(hi, abs=1e-3 * derived.kappa)
    dc = 0.5 * (lo + hi)
    ref = photon_balance_roots(dc, eta, derived)
    got = general_balance_roots(dc, eta, curve, derived)
    np.testing.assert_allclose([s.photon_number for s in got], [s.photon_number for s in ref], rtol=1e-8)
    assert [s.stability for s in got] == [s.stability for s in ref]


def test_tabulated_overlap_without_bistability(derived):
    flat = OverlapCurve(np.linspace(0, 1, 10), np.full(10, 0.5))
    with pytest.raises(NoBistabilityError):
        critical_point_from_overlap(flat, derived)


def test_critical_numeric_agrees_with_closed_form_on_random_grid():
    rng = np.random.default_rng(2024)
    for _ in range(25):
        p = paper_params(
            g0=TWO_PI * 14.1e6 * 10 ** rng.uniform(-0.5, 0.5),
            n_atoms=10 ** rng.uniform(4, 6),
            kappa=TWO_PI * 1.3e6 * 10 ** rng.uniform(-0.5, 0.5),
        )
        d = derive_params(p)
        assert find_critical_numeric(d).n_cr == pytest.approx(critical_point(d).n_cr, rel=1e-2)
