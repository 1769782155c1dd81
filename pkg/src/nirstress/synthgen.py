"""Deterministic synthetic recording generator.

Stands in for the private cohort so every downstream experiment runs.
Per channel:

  oxy   = drift + task-evoked response + jittered cardiac sinusoid + white noise
  deoxy = scaled negated evoked response + independent noise + drift

The evoked response convolves a gamma kernel (mode at the configured
hemodynamic delay) with a per-block boxcar whose height is raised, and its
within-task amplitude modulation widened, during stress blocks. The
modulation is excited independently per channel: the stress/control
variance contrast therefore spans the full channel space, so it survives
any component subset the ICA denoiser reconstructs from — only the shared
mean-shift component competes for selection.

All randomness flows through Philox substreams keyed as
(seed) -> (participant,) -> (participant, channel), so cohort generation is
reproducible and parallelizable.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._util import round_half_away, substream
from .errors import ConfigError
from .signal_model import BlockSchedule, ChannelSeries, Level, Recording

# Evoked-response scales relative to a task boxcar of height ~1.
_STRESS_MEAN_GAIN = 0.6        # extra boxcar height per unit effect size
_BLOCK_HEIGHT_SD = 0.1         # block-to-block amplitude variability
_STRESS_HEIGHT_SD_GAIN = 0.6   # extra block variability per unit effect size
_MOD_SCALE = 1.2               # within-task amplitude modulation depth
_STRESS_MOD_GAIN = 2.0         # extra modulation depth per unit effect size
_SPIKE_RATE = 0.15             # sparse excitation rate for the modulation
_DEOXY_RATIO = 0.4             # deoxy = -ratio * evoked + noise
_DEOXY_NOISE_RATIO = 0.8
_BEAT_JITTER = 0.05            # +/-5% beat-to-beat interval jitter
_KERNEL_SHAPE = 4.0
_KERNEL_SUPPORT_S = 20.0


@dataclass(frozen=True)
class SynthConfig:
    """Knobs for the synthetic cohort."""

    seed: int = 0
    n_participants: int = 10
    n_channels: int = 23
    sampling_rate_hz: float = 10.0
    effect_size: float = 1.0
    heart_rate_hz: float = 1.1
    cardiac_amplitude: float = 0.3
    noise_sd: float = 0.1
    hemodynamic_peak_delay_s: float = 6.0
    drift_amplitude: float = 0.05

    def validate(self) -> None:
        numeric = {
            "sampling_rate_hz": self.sampling_rate_hz,
            "effect_size": self.effect_size,
            "heart_rate_hz": self.heart_rate_hz,
            "cardiac_amplitude": self.cardiac_amplitude,
            "noise_sd": self.noise_sd,
            "hemodynamic_peak_delay_s": self.hemodynamic_peak_delay_s,
            "drift_amplitude": self.drift_amplitude,
        }
        for name, value in numeric.items():
            if not np.isfinite(value) or value < 0:
                raise ConfigError(f"{name} must be finite and non-negative, got {value}")
        if self.sampling_rate_hz <= 0:
            raise ConfigError("sampling_rate_hz must be positive")
        if self.hemodynamic_peak_delay_s <= 0:
            raise ConfigError("hemodynamic_peak_delay_s must be positive")
        if self.sampling_rate_hz <= 2.0 * self.heart_rate_hz:
            raise ConfigError(
                f"sampling rate {self.sampling_rate_hz} Hz violates Nyquist for "
                f"heart rate {self.heart_rate_hz} Hz"
            )
        if self.n_participants < 0:
            raise ConfigError("n_participants must be >= 0")
        if self.n_channels < 1:
            raise ConfigError("n_channels must be >= 1")


def hemodynamic_kernel(
    sampling_rate_hz: float,
    peak_delay_s: float,
    shape: float = _KERNEL_SHAPE,
    support_s: float = _KERNEL_SUPPORT_S,
) -> np.ndarray:
    """Unit-peak gamma-density kernel with its mode at ``peak_delay_s``."""
    if peak_delay_s <= 0 or shape <= 1:
        raise ConfigError("kernel needs peak_delay_s > 0 and shape > 1")
    theta = peak_delay_s / (shape - 1.0)
    t = np.arange(int(round(support_s * sampling_rate_hz)) + 1) / sampling_rate_hz
    k = t ** (shape - 1.0) * np.exp(-t / theta)
    return k / k.max()


def task_indicator(
    schedule: BlockSchedule,
    sampling_rate_hz: float,
    n_samples: int,
    level: Level | None = None,
) -> np.ndarray:
    """0/1 series marking task parts (optionally only one level's)."""
    out = np.zeros(n_samples)
    t = 0.0
    for block in schedule.blocks:
        t += block.rest_s
        start = round_half_away(t * sampling_rate_hz)
        end = start + round_half_away(block.task_s * sampling_rate_hz)
        if level is None or block.level is level:
            out[max(start, 0) : min(end, n_samples)] = 1.0
        t += block.task_s
    return out


@dataclass(frozen=True)
class _ParticipantComponents:
    """Noise-free shared components of one participant's recording."""

    schedule: BlockSchedule
    n_samples: int
    sampling_rate_hz: float
    effect_size: float
    beat_times: np.ndarray
    carrier: np.ndarray
    boxcar: np.ndarray
    kernel: np.ndarray
    evoked_mean: np.ndarray


def _participant_components(
    config: SynthConfig, participant_index: int
) -> _ParticipantComponents:
    fs = config.sampling_rate_hz
    es = config.effect_size
    schedule = BlockSchedule.default()
    n = round_half_away(schedule.duration_s * fs)
    rng = substream(config.seed, participant_index)

    # Beat grid: jittered intervals, extended past both ends so the phase
    # interpolation below is well defined everywhere in [0, duration].
    duration = n / fs
    n_intervals = int(duration * config.heart_rate_hz * 1.3) + 10
    intervals = (1.0 / config.heart_rate_hz) * (
        1.0 + _BEAT_JITTER * rng.uniform(-1.0, 1.0, n_intervals)
    )
    beat_times = -2.0 + np.cumsum(intervals)
    t = np.arange(n) / fs
    phase = np.interp(t, beat_times, np.arange(n_intervals, dtype=np.float64))
    carrier = np.cos(2.0 * np.pi * phase)  # peaks at the beat times

    # Per-block boxcar heights: stress raises both the height and its spread.
    stress_flag = np.array(
        [1.0 if b.level is Level.STRESS else 0.0 for b in schedule.blocks]
    )
    height_noise = rng.normal(0.0, 1.0, schedule.n_blocks)
    heights = (
        1.0
        + _STRESS_MEAN_GAIN * es * stress_flag
        + _BLOCK_HEIGHT_SD
        * (1.0 + _STRESS_HEIGHT_SD_GAIN * es * stress_flag)
        * height_noise
    )
    boxcar = np.zeros(n)
    cursor = 0.0
    for block, height in zip(schedule.blocks, heights):
        cursor += block.rest_s
        start = round_half_away(cursor * fs)
        end = start + round_half_away(block.task_s * fs)
        boxcar[start:end] = height
        cursor += block.task_s

    kernel = hemodynamic_kernel(fs, config.hemodynamic_peak_delay_s)
    evoked_mean = np.convolve(boxcar, kernel)[:n] / kernel.sum()
    return _ParticipantComponents(
        schedule, n, fs, es, beat_times, carrier, boxcar, kernel, evoked_mean
    )


def _drift(rng: np.random.Generator, t: np.ndarray, amplitude: float) -> np.ndarray:
    freqs = rng.uniform(0.003, 0.02, 2)
    phases = rng.uniform(0.0, 2.0 * np.pi, 2)
    gains = rng.uniform(0.5, 1.0, 2)
    out = np.zeros_like(t)
    for f, p, g in zip(freqs, phases, gains):
        out += amplitude * g * np.sin(2.0 * np.pi * f * t + p)
    return out


def _channel_evoked(
    parts: _ParticipantComponents, rng: np.random.Generator
) -> np.ndarray:
    """Evoked response with channel-specific within-task modulation.

    The modulation is excited independently per channel, so the
    stress/control variance contrast spans the full channel space; the
    sparse heavy-tailed excitation keeps it markedly non-Gaussian.
    """
    n = parts.n_samples
    es = parts.effect_size
    gain = rng.uniform(0.8, 1.2)
    spikes = (rng.random(n) < _SPIKE_RATE) * rng.normal(0.0, 1.0, n)
    spikes /= np.sqrt(_SPIKE_RATE)
    stress_task = task_indicator(
        parts.schedule, parts.sampling_rate_hz, n, Level.STRESS
    )
    depth = _MOD_SCALE * (1.0 + _STRESS_MOD_GAIN * es * stress_task)
    excitation = parts.boxcar * (1.0 + depth * spikes)
    return gain * np.convolve(excitation, parts.kernel)[:n] / parts.kernel.sum()


def generate_recording(
    config: SynthConfig, participant_index: int
) -> tuple[Recording, BlockSchedule]:
    """Build one participant's recording plus its block schedule.

    Deterministic: the output is a pure function of (config, index).
    """
    config.validate()
    if not 0 <= participant_index < config.n_participants:
        raise ConfigError(
            f"participant_index {participant_index} outside "
            f"[0, {config.n_participants})"
        )
    parts = _participant_components(config, participant_index)
    fs = config.sampling_rate_hz
    n = parts.n_samples
    t = np.arange(n) / fs

    channels = []
    for c in range(config.n_channels):
        rng = substream(config.seed, participant_index, c)
        evoked = _channel_evoked(parts, rng)
        gain_cardiac = rng.uniform(0.8, 1.2)
        oxy = (
            _drift(rng, t, config.drift_amplitude)
            + evoked
            + config.cardiac_amplitude * gain_cardiac * parts.carrier
            + config.noise_sd * rng.normal(0.0, 1.0, n)
        )
        deoxy = (
            0.5 * _drift(rng, t, config.drift_amplitude)
            - _DEOXY_RATIO * evoked
            + _DEOXY_NOISE_RATIO * config.noise_sd * rng.normal(0.0, 1.0, n)
        )
        channels.append(ChannelSeries(oxy, deoxy))

    recording = Recording(
        participant_id=f"p{participant_index:02d}",
        sampling_rate_hz=fs,
        channels=tuple(channels),
    )
    return recording, parts.schedule


def generate_cohort(config: SynthConfig) -> list[tuple[Recording, BlockSchedule]]:
    """All participants' recordings, independent substreams per participant."""
    config.validate()
    return [generate_recording(config, i) for i in range(config.n_participants)]
