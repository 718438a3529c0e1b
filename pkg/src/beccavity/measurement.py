"""Detection chain and observables of the cavity transmission.

Covers the conversion between intracavity photon number and detector count
rate, Poisson photon-counting with detector dead time, the intensity
correlation g2(tau), spectral peak finding, and the analysis of detuning
scans (branch jumps, hysteresis windows, optical-spring frequency).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.constants import c as SPEED_OF_LIGHT

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class DetectionConfig:
    """Single-photon detection behind the output-coupling mirror.

    ``total_roundtrip_loss`` defaults to the value implied by the cavity
    linewidth and length, 4 kappa L / c (equivalently 2 pi / finesse).
    """

    quantum_efficiency: float = 0.5
    mirror_transmission: float = 2.3e-6
    optics_loss: float = 0.15
    kappa: float = TWO_PI * 1.3e6
    cavity_length: float = 178e-6
    total_roundtrip_loss: float | None = None
    dead_time: float = 50e-9
    rng_seed: int = 0

    def __post_init__(self):
        for name in ("quantum_efficiency", "mirror_transmission", "optics_loss"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {value}")
        if self.kappa <= 0 or self.cavity_length <= 0:
            raise ValueError("kappa and cavity_length must be positive")
        if self.dead_time < 0:
            raise ValueError("dead_time must be non-negative")
        loss = self.roundtrip_loss
        if self.total_roundtrip_loss is not None and loss == 0:
            raise ValueError("total_roundtrip_loss must be positive")
        if not 0.0 <= loss <= 1.0:
            raise ValueError(f"round-trip loss must lie in [0, 1], got {loss}")
        if self.mirror_transmission > loss:
            raise ValueError("mirror transmission exceeds the total round-trip loss")

    @property
    def free_spectral_range(self):
        """In Hz."""
        return SPEED_OF_LIGHT / (2.0 * self.cavity_length)

    @property
    def finesse(self):
        return self.free_spectral_range / (2.0 * self.kappa / TWO_PI)

    @property
    def roundtrip_loss(self):
        if self.total_roundtrip_loss is not None:
            return self.total_roundtrip_loss
        return TWO_PI / self.finesse

    @property
    def output_fraction(self):
        return self.mirror_transmission / self.roundtrip_loss

    @property
    def efficiency(self):
        """Detected photons per photon leaving the cavity."""
        return self.output_fraction * (1.0 - self.optics_loss) * self.quantum_efficiency


def expected_detection_rate(n, cfg: DetectionConfig):
    """Mean count rate (1/s) for intracavity photon number ``n``."""
    n = np.asarray(n, dtype=float)
    if np.any(n < 0):
        raise ValueError("photon number must be non-negative")
    if cfg.roundtrip_loss == 0:
        raise ValueError("total round-trip loss is zero")
    rate = n * 2.0 * cfg.kappa * cfg.efficiency
    return float(rate) if rate.ndim == 0 else rate


def photon_number_from_rate(rate, cfg: DetectionConfig):
    """Inverse of :func:`expected_detection_rate`."""
    if cfg.roundtrip_loss == 0:
        raise ValueError("total round-trip loss is zero")
    n = np.asarray(rate, dtype=float) / (2.0 * cfg.kappa * cfg.efficiency)
    return float(n) if n.ndim == 0 else n


def dead_time_corrected(measured_rate, dead_time):
    """True rate behind a non-paralyzable detector: m / (1 - m tau)."""
    m = np.asarray(measured_rate, dtype=float)
    if np.any(m * dead_time >= 1):
        raise ValueError("measured rate saturates the detector")
    out = m / (1.0 - m * dead_time)
    return float(out) if out.ndim == 0 else out


# -- traces and counts --------------------------------------------------------
@dataclass
class TransmissionTrace:
    """Expected intracavity photon number n(t) = |alpha(t)|^2."""

    times: np.ndarray
    photon_number: np.ndarray

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.photon_number = np.asarray(self.photon_number, dtype=float)
        if self.times.shape != self.photon_number.shape or self.times.ndim != 1:
            raise ValueError("times and photon numbers must be matching 1D arrays")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")
        if np.any(self.photon_number < 0):
            raise ValueError("photon number must be non-negative")

    @classmethod
    def from_trajectory(cls, traj):
        return cls(traj.times, traj.photon_number)

    def window(self, start=None, stop=None):
        lo = self.times[0] if start is None else start
        hi = self.times[-1] if stop is None else stop
        sel = (self.times >= lo) & (self.times <= hi)
        return TransmissionTrace(self.times[sel], self.photon_number[sel])


@dataclass
class CountRecord:
    """Detector click times (s) within [start, stop]."""

    timestamps: np.ndarray
    start: float
    stop: float
    dead_time: float = 0.0

    def __post_init__(self):
        self.timestamps = np.asarray(self.timestamps, dtype=float)
        if np.any(np.diff(self.timestamps) <= 0):
            raise ValueError("timestamps must be strictly increasing")

    def __len__(self):
        return len(self.timestamps)

    @property
    def rate(self):
        return len(self.timestamps) / (self.stop - self.start)

    def bin_counts(self, width, start=None, stop=None):
        """Counts per bin; returns (bin_starts, counts)."""
        lo = self.start if start is None else start
        hi = self.stop if stop is None else stop
        nbins = int(math.floor((hi - lo) / width + 1e-9))
        edges = lo + width * np.arange(nbins + 1)
        counts, _ = np.histogram(self.timestamps, bins=edges)
        return edges[:-1], counts

    def to_text(self):
        return "".join(f"{t:.17g}\n" for t in self.timestamps)

    @classmethod
    def from_text(cls, text, start, stop, dead_time=0.0):
        values = [float(line) for line in text.split()]
        return cls(np.array(values), start, stop, dead_time)


def _apply_dead_time(events, dead_time):
    if dead_time <= 0 or len(events) == 0:
        return events
    kept = np.empty_like(events)
    count = 0
    last = -math.inf
    for t in events.tolist():
        if t - last >= dead_time:
            kept[count] = t
            count += 1
            last = t
    return kept[:count]


def sample_counts(trace: TransmissionTrace, cfg: DetectionConfig, seed=None) -> CountRecord:
    """Photon clicks for the trace as an inhomogeneous Poisson process.

    The intensity is expected_detection_rate(n(t)), taken constant at the
    interval mean between trace samples.  Events are generated by inverting
    the integrated intensity, then thinned by a non-paralyzable dead time.
    """
    rng = np.random.default_rng(cfg.rng_seed if seed is None else seed)
    t = trace.times
    rate = expected_detection_rate(trace.photon_number, cfg)
    seg = 0.5 * (rate[1:] + rate[:-1]) * np.diff(t)
    cumulative = np.concatenate(([0.0], np.cumsum(seg)))
    total = cumulative[-1]
    n_events = rng.poisson(total) if total > 0 else 0
    if n_events == 0:
        return CountRecord(np.empty(0), t[0], t[-1], cfg.dead_time)
    u = np.sort(rng.uniform(0.0, total, n_events))
    idx = np.clip(np.searchsorted(cumulative, u, side="right") - 1, 0, len(seg) - 1)
    frac = (u - cumulative[idx]) / seg[idx]
    events = t[idx] + frac * (t[idx + 1] - t[idx])
    events = np.unique(events)  # ties have probability zero but floats can collide
    return CountRecord(_apply_dead_time(events, cfg.dead_time), t[0], t[-1], cfg.dead_time)


# -- correlations -------------------------------------------------------------
@dataclass
class CorrelationFunction:
    lags: np.ndarray
    g2: np.ndarray
    window: tuple[float, float]
    bin_width: float
    estimator: str

    def to_text(self):
        return "".join(f"{tau:.17g} {g:.17g}\n" for tau, g in zip(self.lags, self.g2))

    @classmethod
    def from_text(cls, text, window=(0.0, 0.0), bin_width=0.0, estimator="text"):
        data = np.loadtxt(text.splitlines(), ndmin=2)
        return cls(data[:, 0], data[:, 1], window, bin_width, estimator)


def _autocorrelation(values, max_shift, shot_noise=False):
    out = np.empty(max_shift + 1)
    for k in range(max_shift + 1):
        a = values[: len(values) - k]
        b = values[k:]
        num = np.mean(a * b)
        if k == 0 and shot_noise:
            num -= np.mean(a)
        out[k] = num / (np.mean(a) * np.mean(b))
    return out


def _symmetric(lags, g):
    return np.concatenate((-lags[:0:-1], lags)), np.concatenate((g[:0:-1], g))


def g2_from_trace(trace: TransmissionTrace, max_lag, window=None) -> CorrelationFunction:
    """<n(t) n(t+tau)> / <n>^2 over the window.

    Irregularly sampled traces are linearly resampled at their median spacing.
    """
    lo, hi = window if window is not None else (trace.times[0], trace.times[-1])
    _check_window(lo, hi, max_lag)
    part = trace.window(lo, hi)
    if len(part.times) < 2:
        raise ValueError("empty correlation window")
    dt = np.diff(part.times)
    values = part.photon_number
    step = dt.mean()
    if np.ptp(dt) > 1e-6 * step:
        step = float(np.median(dt))
        grid = part.times[0] + step * np.arange(int((part.times[-1] - part.times[0]) / step) + 1)
        values = np.interp(grid, part.times, values)
    if values.mean() <= 0:
        raise ValueError("mean photon number vanishes in the window")
    shifts = int(round(max_lag / step))
    g = _autocorrelation(values, shifts)
    lags, vals = _symmetric(step * np.arange(shifts + 1), g)
    return CorrelationFunction(lags, vals, (lo, hi), step, "trace")


def g2_from_counts(record: CountRecord, bin_width, max_lag, window=None) -> CorrelationFunction:
    """Normalized coincidence histogram of binned clicks.

    The zero-lag bin has the Poissonian self-coincidence <c> removed.
    """
    lo, hi = window if window is not None else (record.start, record.stop)
    _check_window(lo, hi, max_lag)
    _, counts = record.bin_counts(bin_width, lo, hi)
    counts = counts.astype(float)
    if counts.size < 2:
        raise ValueError("empty correlation window")
    if counts.mean() <= 0:
        raise ValueError("no counts in the correlation window")
    shifts = int(round(max_lag / bin_width))
    g = _autocorrelation(counts, shifts, shot_noise=True)
    lags, vals = _symmetric(bin_width * np.arange(shifts + 1), g)
    return CorrelationFunction(lags, vals, (lo, hi), bin_width, "counts")


def g2_estimate(source, max_lag, window=None, bin_width=None) -> CorrelationFunction:
    if isinstance(source, CountRecord):
        if bin_width is None:
            raise ValueError("count records need a bin width")
        return g2_from_counts(source, bin_width, max_lag, window)
    return g2_from_trace(source, max_lag, window)


def _check_window(lo, hi, max_lag):
    if hi <= lo:
        raise ValueError("empty correlation window")
    if hi - lo < 4 * max_lag * (1 - 1e-9):  # tolerate round-off in window arithmetic
        raise ValueError("window must be at least four times the maximum lag")


# -- spectra ------------------------------------------------------------------
@dataclass(frozen=True)
class SpectralPeak:
    frequency: float
    width: float
    power: float


def dominant_frequency(series, dt, min_frequency=0.0, pad=8) -> SpectralPeak | None:
    """Strongest spectral line of a real series sampled every ``dt``.

    Hann-windowed, zero-padded periodogram; the peak is refined by a
    parabola through the three highest bins and its width is the full width
    at half maximum.  Frequencies are in cycles per unit of ``dt``.  Returns
    None for a flat series.
    """
    x = np.asarray(series, dtype=float)
    x = x - x.mean()
    if x.size < 4 or not np.any(np.abs(x) > 1e-14 * (1.0 + np.abs(series).max())):
        return None
    nfft = pad * x.size
    power = np.abs(np.fft.rfft(x * np.hanning(x.size), nfft)) ** 2
    freqs = np.fft.rfftfreq(nfft, dt)
    usable = freqs >= min_frequency
    usable[0] = False
    if not usable.any():
        return None
    i = int(np.argmax(np.where(usable, power, -np.inf)))
    if 0 < i < len(power) - 1:
        a, b, c = power[i - 1], power[i], power[i + 1]
        denom = a - 2 * b + c
        shift = min(max(0.5 * (a - c) / denom, -0.5), 0.5) if denom != 0 else 0.0
    else:
        shift = 0.0
    df = freqs[1] - freqs[0]
    peak_f = max(freqs[i] + shift * df, 0.0)
    half = 0.5 * power[i]
    left = i
    while left > 0 and power[left] > half:
        left -= 1
    right = i
    while right < len(power) - 1 and power[right] > half:
        right += 1

    def cross(j, k):
        # linear interpolation of the half-maximum crossing between bins j and k
        pj, pk = power[j], power[k]
        return freqs[j] + (half - pj) / (pk - pj) * (freqs[k] - freqs[j]) if pk != pj else freqs[j]

    width = cross(right - 1, right) - cross(left, left + 1)
    return SpectralPeak(float(peak_f), float(abs(width)), float(power[i]))


# -- scan analysis ------------------------------------------------------------
def boxcar_average(times, values, width):
    """Running mean over ``width`` seconds (uniform sampling assumed)."""
    step = np.mean(np.diff(times))
    w = max(1, int(round(width / step)))
    if w == 1:
        return np.asarray(values, dtype=float).copy()
    kernel = np.ones(w) / w
    padded = np.pad(np.asarray(values, dtype=float), (w // 2, w - 1 - w // 2), mode="edge")
    return np.convolve(padded, kernel, mode="valid")


def jump_index(photon_number, direction):
    """Sample index of the branch transition in a detuning scan.

    The transition is where the trace crosses half of its maximum: the first
    upward crossing for an "up" scan and the last sample above it for a
    "down" scan.  Without bistability both land on the steep flank of the
    resonance.
    """
    n = np.asarray(photon_number, dtype=float)
    above = n >= 0.5 * n.max()
    if direction == "up":
        return int(np.argmax(above))
    if direction == "down":
        return len(n) - 1 - int(np.argmax(above[::-1]))
    raise ValueError(f"direction must be 'up' or 'down', got {direction!r}")


def departure_index(photon_number):
    """Last sample of quiet upper-branch motion in a downward scan.

    Self-pulsing after the branch has destabilized drives the trace well above
    the upper branch, so the departure is taken as the first fall below half
    of the maximum after the first rise above it.
    """
    n = np.asarray(photon_number, dtype=float)
    above = n >= 0.5 * n.max()
    first = int(np.argmax(above))
    below = ~above[first:]
    if not below.any():
        return len(n) - 1
    return first + int(np.argmax(below)) - 1


def jump_detuning(detuning, photon_number, direction):
    return float(np.asarray(detuning)[jump_index(photon_number, direction)])


def hysteresis_window(up_detuning, up_n, down_detuning, down_n):
    """Width of the hysteresis loop, jump(up) - jump(down); zero or less means none."""
    return jump_detuning(up_detuning, up_n, "up") - jump_detuning(down_detuning, down_n, "down")


@dataclass
class SpringAnalysis:
    """Oscillation of the transmission just before the system leaves the upper branch."""

    window: tuple[float, float]
    correlation: CorrelationFunction
    peak: SpectralPeak | None
    bare_frequency: float
    details: dict = field(default_factory=dict)

    @property
    def ratio(self):
        return math.nan if self.peak is None else self.peak.frequency / self.bare_frequency


def spring_frequency(trace: TransmissionTrace, bare_frequency, window=400e-6, max_lag=None, direction="down"):
    """g2 oscillation frequency in the ``window`` seconds before the branch jump.

    ``bare_frequency`` (Hz) is the frequency the result is compared with,
    normally 4 omega_rec / 2 pi.  For a downward scan the end of the window is
    the departure from the upper branch (:func:`departure_index`).
    """
    if direction == "down":
        i = departure_index(trace.photon_number)
    else:
        i = jump_index(trace.photon_number, direction)
    t_jump = trace.times[i]
    lo = max(trace.times[0], t_jump - window)
    if max_lag is None:
        max_lag = (t_jump - lo) / 4.0
    g2 = g2_from_trace(trace, max_lag, (lo, t_jump))
    peak = dominant_frequency(g2.g2 - 1.0, g2.bin_width, min_frequency=0.5 * bare_frequency)
    return SpringAnalysis((lo, t_jump), g2, peak, bare_frequency, {"jump_time": t_jump})
