"""Filtering, spectra, heartbeat detection, and the simulated cardiac wave.

Filter design and zero-phase application are delegated to scipy.signal
(Butterworth via bilinear transform with pre-warping, second-order-section
evaluation); everything is re-exposed behind explicit contracts so the
rest of the pipeline never touches scipy directly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import signal as _signal

from ._util import readonly
from .errors import ConfigError, DimensionError, NumericError, RangeError

#: Detection band and refractory period for the heartbeat picker.
HEARTBEAT_BAND_HZ = (0.8, 2.0)
HEARTBEAT_REFRACTORY_S = 0.4
_HEARTBEAT_MIN_DURATION_S = 5.0
_ROLLING_STD_WINDOW_S = 5.0


@dataclass(frozen=True)
class FilterSpec:
    """A designed band-pass filter in second-order-section form."""

    low_cut_hz: float
    high_cut_hz: float
    order: int
    sampling_rate_hz: float
    sos: np.ndarray
    kind: str = "bandpass"

    def __post_init__(self) -> None:
        object.__setattr__(self, "sos", readonly(self.sos))

    @property
    def n_sections(self) -> int:
        return self.sos.shape[0]

    @property
    def feedforward(self) -> list[list[float]]:
        """Per-section numerator (b) coefficients."""
        return [list(sec[:3]) for sec in self.sos]

    @property
    def feedback(self) -> list[list[float]]:
        """Per-section denominator (a) coefficients."""
        return [list(sec[3:]) for sec in self.sos]

    def is_stable(self) -> bool:
        """All feedback roots strictly inside the unit circle."""
        for sec in self.sos:
            roots = np.roots(sec[3:])
            if roots.size and np.abs(roots).max() >= 1.0:
                return False
        return True

    def response(self, freqs_hz: np.ndarray) -> np.ndarray:
        """Complex frequency response evaluated on the unit circle."""
        freqs_hz = np.atleast_1d(np.asarray(freqs_hz, dtype=np.float64))
        z = np.exp(-2j * np.pi * freqs_hz / self.sampling_rate_hz)
        h = np.ones_like(z)
        for sec in self.sos:
            num = sec[0] + sec[1] * z + sec[2] * z * z
            den = sec[3] + sec[4] * z + sec[5] * z * z
            h *= num / den
        return h

    def gain_db(self, freq_hz: float) -> float:
        mag = np.abs(self.response(np.array([freq_hz])))[0]
        if mag == 0.0:
            return -math.inf
        return 20.0 * math.log10(mag)


@dataclass(frozen=True)
class CardiacWaveConfig:
    """Shape of the Gaussian pulses summed into the cardiac reference wave."""

    amplitude: float = 1.0
    sigma_s: float = 0.05
    support_radius_sigmas: float = 5.0

    def __post_init__(self) -> None:
        if not (self.amplitude > 0 and np.isfinite(self.amplitude)):
            raise ConfigError(f"amplitude must be positive, got {self.amplitude}")
        if not (self.sigma_s > 0 and np.isfinite(self.sigma_s)):
            raise ConfigError(f"sigma_s must be positive, got {self.sigma_s}")
        if not self.support_radius_sigmas > 0:
            raise ConfigError(
                f"support_radius_sigmas must be positive, got {self.support_radius_sigmas}"
            )


def design_bandpass(
    low_cut_hz: float,
    high_cut_hz: float,
    sampling_rate_hz: float,
    order: int = 4,
) -> FilterSpec:
    """Design a stable Butterworth band-pass filter.

    Cutoffs must satisfy 0 < low < high < Nyquist. The very low default
    cut (0.001 Hz at 10 Hz sampling) is numerically delicate, which is why
    the design is kept in second-order sections and checked for stability.
    """
    nyquist = sampling_rate_hz / 2.0
    if not (
        np.isfinite(low_cut_hz)
        and np.isfinite(high_cut_hz)
        and 0.0 < low_cut_hz < high_cut_hz < nyquist
    ):
        raise ConfigError(
            f"need 0 < low ({low_cut_hz}) < high ({high_cut_hz}) < Nyquist "
            f"({nyquist})"
        )
    if order < 1:
        raise ConfigError(f"order must be >= 1, got {order}")
    sos = _signal.butter(
        order,
        [low_cut_hz, high_cut_hz],
        btype="bandpass",
        fs=sampling_rate_hz,
        output="sos",
    )
    spec = FilterSpec(low_cut_hz, high_cut_hz, order, sampling_rate_hz, sos)
    if not spec.is_stable():
        raise NumericError(
            f"band-pass design unstable at low={low_cut_hz}, high={high_cut_hz}, "
            f"fs={sampling_rate_hz}, order={order}"
        )
    return spec


def apply_zero_phase(filt: FilterSpec, x: np.ndarray) -> np.ndarray:
    """Forward-backward filter a series; net phase shift is zero.

    Edges are handled with odd reflection padding of roughly three times
    the filter state size; the series must be longer than 3x the design
    order for that padding to exist.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise DimensionError("apply_zero_phase expects a one-dimensional series")
    if x.shape[0] <= 3 * filt.order:
        raise DimensionError(
            f"series of {x.shape[0]} samples is too short for order "
            f"{filt.order} zero-phase filtering"
        )
    padlen = min(3 * (2 * filt.n_sections + 1), x.shape[0] - 1)
    # scipy's sosfilt mutates its working buffers; hand it writable copies.
    return _signal.sosfiltfilt(np.array(filt.sos), np.array(x), padlen=padlen)


def amplitude_spectrum(
    x: np.ndarray, sampling_rate_hz: float
) -> tuple[np.ndarray, np.ndarray]:
    """One-sided magnitude spectrum of the mean-removed series.

    Returns (frequencies, amplitudes) with the DC bin excluded: bins
    k = 1..floor(N/2) at k*fs/N, unnormalized forward-transform convention
    (an in-bin sinusoid of amplitude A shows up as A*N/2).
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] < 2:
        raise DimensionError("amplitude_spectrum needs a 1-D series of length >= 2")
    n = x.shape[0]
    spectrum = np.fft.rfft(x - x.mean())
    amps = np.abs(spectrum[1:])
    freqs = np.arange(1, n // 2 + 1, dtype=np.float64) * (sampling_rate_hz / n)
    return freqs, amps


def _rolling_std(x: np.ndarray, window: int) -> np.ndarray:
    """Centered rolling standard deviation with shrinking edge windows."""
    n = x.shape[0]
    half = window // 2
    csum = np.concatenate(([0.0], np.cumsum(x)))
    csq = np.concatenate(([0.0], np.cumsum(x * x)))
    idx = np.arange(n)
    lo = np.maximum(idx - half, 0)
    hi = np.minimum(idx + half + 1, n)
    cnt = hi - lo
    mean = (csum[hi] - csum[lo]) / cnt
    var = (csq[hi] - csq[lo]) / cnt - mean * mean
    return np.sqrt(np.maximum(var, 0.0))


def detect_heartbeats(x: np.ndarray, sampling_rate_hz: float) -> np.ndarray:
    """Beat times (s) from cardiac-band peaks of the series.

    The series is band-passed to 0.8-2.0 Hz zero-phase, then local maxima
    exceeding half the rolling standard deviation are picked with a 0.4 s
    refractory period.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise DimensionError("detect_heartbeats expects a one-dimensional series")
    if x.shape[0] < _HEARTBEAT_MIN_DURATION_S * sampling_rate_hz:
        raise DimensionError(
            f"need at least {_HEARTBEAT_MIN_DURATION_S:.0f} s of samples, got "
            f"{x.shape[0] / sampling_rate_hz:.2f} s"
        )
    band = design_bandpass(*HEARTBEAT_BAND_HZ, sampling_rate_hz, order=2)
    y = apply_zero_phase(band, x)
    thresh = 0.5 * _rolling_std(y, int(round(_ROLLING_STD_WINDOW_S * sampling_rate_hz)))
    distance = max(1, int(math.ceil(HEARTBEAT_REFRACTORY_S * sampling_rate_hz)))
    peaks, _ = _signal.find_peaks(y, height=thresh, distance=distance)
    return peaks.astype(np.float64) / sampling_rate_hz


def simulate_cardiac_wave(
    beat_times: np.ndarray,
    duration_s: float,
    sampling_rate_hz: float,
    config: CardiacWaveConfig | None = None,
) -> np.ndarray:
    """Sum of identical Gaussian pulses centered at the beat times.

    y(t) = sum_k amplitude * exp(-(t - t_k)^2 / (2 sigma^2)), evaluated at
    the sample instants i / fs, with each pulse truncated to zero beyond
    support_radius_sigmas standard deviations.
    """
    config = config or CardiacWaveConfig()
    beats = np.atleast_1d(np.asarray(beat_times, dtype=np.float64))
    if beats.size and (beats.min() < 0.0 or beats.max() > duration_s):
        raise RangeError(
            f"beat times must lie within [0, {duration_s}], got "
            f"[{beats.min()}, {beats.max()}]"
        )
    n = int(round(duration_s * sampling_rate_hz))
    y = np.zeros(n)
    if n == 0:
        return y
    radius = config.support_radius_sigmas * config.sigma_s
    two_sigma_sq = 2.0 * config.sigma_s * config.sigma_s
    for tk in beats:
        if math.isinf(radius):
            lo, hi = 0, n
        else:
            lo = max(0, int(math.ceil((tk - radius) * sampling_rate_hz)))
            hi = min(n, int(math.floor((tk + radius) * sampling_rate_hz)) + 1)
        if lo >= hi:
            continue
        t = np.arange(lo, hi, dtype=np.float64) / sampling_rate_hz
        y[lo:hi] += config.amplitude * np.exp(-((t - tk) ** 2) / two_sigma_sq)
    return y
