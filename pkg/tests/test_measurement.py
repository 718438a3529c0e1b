import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from beccavity.measurement import (
    CorrelationFunction,
    CountRecord,
    DetectionConfig,
    TransmissionTrace,
    boxcar_average,
    departure_index,
    dead_time_corrected,
    dominant_frequency,
    expected_detection_rate,
    g2_estimate,
    g2_from_counts,
    g2_from_trace,
    hysteresis_window,
    jump_index,
    photon_number_from_rate,
    sample_counts,
    spring_frequency,
)

TWO_PI = 2 * math.pi


def constant_trace(n, duration, samples=2001):
    t = np.linspace(0.0, duration, samples)
    return TransmissionTrace(t, np.full_like(t, n))


# -- calibration chain --------------------------------------------------------
def test_calibration_chain_values():
    cfg = DetectionConfig()
    assert cfg.free_spectral_range == pytest.approx(842.1e9, rel=1e-3)
    assert cfg.finesse == pytest.approx(3.24e5, rel=0.01)
    assert cfg.roundtrip_loss == pytest.approx(19.4e-6, rel=0.01)
    assert cfg.output_fraction == pytest.approx(0.1186, rel=1e-3)
    assert expected_detection_rate(1.0, cfg) == pytest.approx(8.23e5, rel=0.01)
    assert expected_detection_rate(0.0, cfg) == 0.0


def test_lossless_limit():
    cfg = DetectionConfig(quantum_efficiency=1.0, optics_loss=0.0, mirror_transmission=1e-5, total_roundtrip_loss=1e-5)
    assert expected_detection_rate(3.0, cfg) == pytest.approx(2 * cfg.kappa * 3.0, rel=1e-14)


@settings(max_examples=100, deadline=None)
@given(n=st.floats(0.0, 1e4, allow_nan=False))
def test_calibration_round_trip(n):
    cfg = DetectionConfig()
    back = photon_number_from_rate(expected_detection_rate(n, cfg), cfg)
    assert back == pytest.approx(n, rel=1e-12, abs=1e-300)


def test_detection_config_validation():
    with pytest.raises(ValueError):
        DetectionConfig(quantum_efficiency=1.5)
    with pytest.raises(ValueError):
        DetectionConfig(mirror_transmission=1e-3)  # above the total loss
    with pytest.raises(ValueError):
        DetectionConfig(total_roundtrip_loss=0.0, mirror_transmission=0.0)
    with pytest.raises(ValueError):
        expected_detection_rate(-1.0, DetectionConfig())


# -- photon counting ----------------------------------------------------------
def test_no_light_no_counts():
    record = sample_counts(constant_trace(0.0, 1e-3), DetectionConfig(), seed=1)
    assert len(record) == 0


def test_poisson_rate_within_three_sigma():
    cfg = DetectionConfig(dead_time=0.0)
    duration = 0.05
    record = sample_counts(constant_trace(2.0, duration), cfg, seed=7)
    expected = expected_detection_rate(2.0, cfg) * duration
    assert abs(len(record) - expected) < 3 * math.sqrt(expected)


def test_dead_time_matches_nonparalyzable_formula():
    base = DetectionConfig()
    n = 1.0
    rate = expected_detection_rate(n, base)
    tau = 0.1 / rate
    cfg = DetectionConfig(dead_time=tau)
    duration = 0.05
    record = sample_counts(constant_trace(n, duration), cfg, seed=3)
    expected = rate / (1 + rate * tau) * duration
    # the variance of a dead-time-limited count is reduced, so the Poisson bound is conservative
    assert abs(len(record) - expected) < 3 * math.sqrt(expected)
    assert np.all(np.diff(record.timestamps) >= tau)
    corrected = dead_time_corrected(record.rate, tau)
    assert corrected == pytest.approx(rate, rel=3 / math.sqrt(expected) * 1.2)


def test_dead_time_monotone():
    trace = constant_trace(5.0, 0.01)
    rates = [sample_counts(trace, DetectionConfig(dead_time=tau), seed=11).rate for tau in (0.0, 50e-9, 200e-9, 1e-6)]
    assert all(a > b for a, b in zip(rates, rates[1:]))


def test_seeded_counts_are_identical():
    trace = constant_trace(1.0, 2e-3)
    a = sample_counts(trace, DetectionConfig(), seed=42)
    b = sample_counts(trace, DetectionConfig(), seed=42)
    c = sample_counts(trace, DetectionConfig(), seed=43)
    assert a.to_text().encode() == b.to_text().encode()
    assert a.to_text() != c.to_text()


def test_count_record_text_round_trip():
    record = sample_counts(constant_trace(1.0, 1e-3), DetectionConfig(), seed=5)
    back = CountRecord.from_text(record.to_text(), record.start, record.stop)
    np.testing.assert_array_equal(back.timestamps, record.timestamps)


def test_count_record_rejects_unsorted():
    with pytest.raises(ValueError):
        CountRecord(np.array([1.0, 0.5]), 0.0, 2.0)


# -- correlations -------------------------------------------------------------
def test_g2_of_constant_trace_is_one():
    g = g2_from_trace(constant_trace(0.7, 1e-3), max_lag=1e-4)
    np.testing.assert_allclose(g.g2, 1.0, atol=1e-12)


def test_g2_of_cosine_modulation():
    omega = TWO_PI * 20e3
    period = TWO_PI / omega
    t = np.arange(0, 200 * period, period / 100)
    trace = TransmissionTrace(t, 1.0 + np.cos(omega * t))
    g = g2_from_trace(trace, max_lag=5 * period)
    np.testing.assert_allclose(g.g2, 1 + 0.5 * np.cos(omega * g.lags), atol=0.01)


def test_g2_is_symmetric_and_nonnegative():
    rng = np.random.default_rng(0)
    t = np.linspace(0, 1e-3, 1001)
    trace = TransmissionTrace(t, 1 + 0.5 * np.sin(TWO_PI * 30e3 * t + rng.uniform(0, 6)))
    g = g2_from_trace(trace, max_lag=1e-4)
    np.testing.assert_allclose(g.g2, g.g2[::-1], atol=0)
    assert np.all(g.g2 >= 0)


def test_g2_window_and_degenerate_input_errors():
    trace = constant_trace(1.0, 1e-3)
    with pytest.raises(ValueError):
        g2_from_trace(trace, max_lag=4e-4)
    with pytest.raises(ValueError):
        g2_from_trace(constant_trace(0.0, 1e-3), max_lag=1e-4)
    with pytest.raises(ValueError):
        g2_from_trace(trace, max_lag=1e-5, window=(5e-4, 5e-4))
    with pytest.raises(ValueError):
        g2_estimate(CountRecord(np.array([1e-4]), 0.0, 1e-3), max_lag=1e-5)


def test_correlation_text_round_trip():
    g = g2_from_trace(constant_trace(1.0, 1e-3), max_lag=1e-4)
    back = CorrelationFunction.from_text(g.to_text())
    np.testing.assert_array_equal(back.lags, g.lags)
    np.testing.assert_array_equal(back.g2, g.g2)


def test_trace_and_count_estimators_agree():
    """20 random oscillatory traces; the count estimator sits within 3 sigma of the trace estimator."""
    rng = np.random.default_rng(2024)
    cfg = DetectionConfig(dead_time=0.0)
    bin_width = 2e-6
    duration = 20e-3
    t = np.arange(0.0, duration + bin_width / 4, bin_width / 4)
    failures = 0
    for i in range(20):
        f = rng.uniform(10e3, 50e3)
        depth = rng.uniform(0.2, 0.9)
        n = 5.0 * (1 + depth * np.cos(TWO_PI * f * t + rng.uniform(0, TWO_PI)))
        trace = TransmissionTrace(t, n)
        max_lag = 50e-6
        counts = sample_counts(trace, cfg, seed=i)
        gc = g2_from_counts(counts, bin_width, max_lag)
        # the trace estimator on the same bins: average n over each bin
        edges = np.arange(0, duration + 1e-12, bin_width)
        binned = TransmissionTrace(edges[:-1], np.interp(edges[:-1] + bin_width / 2, t, n))
        gt = g2_from_trace(binned, max_lag)
        mean_counts = counts.rate * bin_width
        bins = duration / bin_width
        sigma = math.sqrt(1 / (bins * mean_counts**2) + 2 / (bins * mean_counts))
        failures += int(np.max(np.abs(gc.g2 - gt.g2)) > 3 * sigma)
    assert failures == 0


# -- spectra ------------------------------------------------------------------
def test_dominant_frequency_of_sinusoid():
    dt = 1e-6
    t = np.arange(0, 2e-3, dt)
    peak = dominant_frequency(np.sin(TWO_PI * 15e3 * t), dt)
    assert peak.frequency == pytest.approx(15e3, rel=0.005)
    assert 0 < peak.width < 5e3


def test_dominant_frequency_two_tone():
    dt = 1e-6
    t = np.arange(0, 2e-3, dt)
    series = np.sin(TWO_PI * 15e3 * t) + 3 * np.sin(TWO_PI * 42e3 * t)
    assert dominant_frequency(series, dt).frequency == pytest.approx(42e3, rel=0.005)


def test_dominant_frequency_flat_series():
    assert dominant_frequency(np.full(100, 3.0), 1e-6) is None


@settings(max_examples=30, deadline=None)
@given(f=st.floats(5e3, 100e3), phase=st.floats(0, TWO_PI))
def test_dominant_frequency_property(f, phase):
    dt = 1e-6
    t = np.arange(0, 16 / f + 1e-3, dt)
    assert dominant_frequency(np.cos(TWO_PI * f * t + phase), dt).frequency == pytest.approx(f, rel=0.01)


# -- scan analysis ------------------------------------------------------------
def test_boxcar_average():
    t = np.arange(100) * 1e-6
    v = np.where(np.arange(100) % 2 == 0, 1.0, 3.0)
    smooth = boxcar_average(t, v, 10e-6)
    assert smooth.shape == v.shape
    np.testing.assert_allclose(smooth[10:-10], 2.0, atol=1e-12)
    np.testing.assert_array_equal(boxcar_average(t, v, 1e-7), v)


def test_jump_detectors_on_triangle():
    # upward scan: slow rise then abrupt fall; downward scan: abrupt rise then slow fall
    up = np.concatenate((np.linspace(0, 1, 50), np.zeros(50)))
    down = up[::-1]
    assert jump_index(up, "up") == 25
    assert jump_index(down, "down") == 74
    with pytest.raises(ValueError):
        jump_index(up, "sideways")


def test_departure_index_ignores_pulsing_tail():
    n = np.concatenate((np.zeros(10), np.ones(30), np.zeros(5), [1.8, 0.0, 1.8], np.zeros(10)))
    assert departure_index(n) == 39
    assert departure_index(np.ones(5)) == 4


def test_hysteresis_window_sign():
    # upper branch reached at -1.5 going up, held down to -3 going down
    x = np.linspace(-5, 0, 101)
    up = ((x >= -1.5) & (x < -1)).astype(float)
    down_x = x[::-1]
    down = ((down_x >= -3) & (down_x < -1)).astype(float)
    assert hysteresis_window(x, up, down_x, down) == pytest.approx(1.5, abs=1e-12)


def test_spring_frequency_on_synthetic_down_scan():
    bare = 15.1e3
    dt = 1e-6
    t = np.arange(0, 2e-3, dt)
    n = np.where(t < 1.5e-3, 1.0 + 0.3 * np.cos(TWO_PI * 2.5 * bare * t), 0.01)
    result = spring_frequency(TransmissionTrace(t, n), bare, window=400e-6)
    assert result.window[1] == pytest.approx(1.5e-3, abs=2 * dt)
    assert result.ratio == pytest.approx(2.5, rel=0.02)
