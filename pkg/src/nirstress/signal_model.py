"""Domain types for recordings, block schedules, and task-window extraction.

Everything here is immutable after construction and safe for concurrent
reads: series arrays are defensively copied and marked read-only.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from ._util import readonly, round_half_away
from .errors import ConfigError, DimensionError, RangeError


class HemoglobinKind(Enum):
    OXY = "oxy"
    DEOXY = "deoxy"
    TOTAL = "total"


class Level(Enum):
    CONTROL = "control"
    STRESS = "stress"


@dataclass(frozen=True)
class ChannelSeries:
    """One measurement site: paired oxy- and deoxy-hemoglobin series."""

    oxy: np.ndarray
    deoxy: np.ndarray

    def __post_init__(self) -> None:
        oxy = readonly(np.asarray(self.oxy, dtype=np.float64))
        deoxy = readonly(np.asarray(self.deoxy, dtype=np.float64))
        if oxy.ndim != 1 or deoxy.ndim != 1:
            raise DimensionError("channel series must be one-dimensional")
        if oxy.shape != deoxy.shape:
            raise DimensionError(
                f"oxy/deoxy length mismatch: {oxy.shape[0]} vs {deoxy.shape[0]}"
            )
        if oxy.shape[0] == 0:
            raise DimensionError("channel series must be non-empty")
        if not (np.isfinite(oxy).all() and np.isfinite(deoxy).all()):
            raise ConfigError("channel series contain non-finite values")
        object.__setattr__(self, "oxy", oxy)
        object.__setattr__(self, "deoxy", deoxy)


@dataclass(frozen=True)
class Recording:
    """Multi-channel hemodynamic time series at a fixed sampling rate."""

    participant_id: str
    sampling_rate_hz: float
    channels: tuple[ChannelSeries, ...]

    def __post_init__(self) -> None:
        if not np.isfinite(self.sampling_rate_hz) or self.sampling_rate_hz <= 0:
            raise ConfigError(f"sampling rate must be positive, got {self.sampling_rate_hz}")
        channels = tuple(self.channels)
        if not channels:
            raise ConfigError("a recording needs at least one channel")
        n = channels[0].oxy.shape[0]
        for i, ch in enumerate(channels):
            if ch.oxy.shape[0] != n:
                raise DimensionError(
                    f"channel {i} has {ch.oxy.shape[0]} samples, expected {n}"
                )
        object.__setattr__(self, "channels", channels)

    @property
    def n_channels(self) -> int:
        return len(self.channels)

    @property
    def n_samples(self) -> int:
        return self.channels[0].oxy.shape[0]

    @property
    def duration_s(self) -> float:
        return self.n_samples / self.sampling_rate_hz

    def oxy_matrix(self) -> np.ndarray:
        """Stack oxy series into a channels-by-samples matrix."""
        return np.stack([ch.oxy for ch in self.channels])

    def deoxy_matrix(self) -> np.ndarray:
        return np.stack([ch.deoxy for ch in self.channels])

    def series_matrix(self, kind: HemoglobinKind) -> np.ndarray:
        if kind is HemoglobinKind.OXY:
            return self.oxy_matrix()
        if kind is HemoglobinKind.DEOXY:
            return self.deoxy_matrix()
        return self.oxy_matrix() + self.deoxy_matrix()

    def channel_mean(self, kind: HemoglobinKind) -> np.ndarray:
        return self.series_matrix(kind).mean(axis=0)


@dataclass(frozen=True)
class Block:
    """One schedule entry: a rest part followed by a task part."""

    level: Level
    rest_s: float
    task_s: float

    def __post_init__(self) -> None:
        if not np.isfinite(self.rest_s) or self.rest_s < 0:
            raise ConfigError(f"rest duration must be >= 0, got {self.rest_s}")
        if not np.isfinite(self.task_s) or self.task_s <= 0:
            raise ConfigError(f"task duration must be > 0, got {self.task_s}")


@dataclass(frozen=True)
class BlockSchedule:
    """Ordered rest/task blocks labeled with their induced level."""

    blocks: tuple[Block, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "blocks", tuple(self.blocks))

    @classmethod
    def default(cls) -> "BlockSchedule":
        """Five control blocks then five stress blocks of 20 s rest + 30 s task."""
        return cls(
            tuple(Block(Level.CONTROL, 20.0, 30.0) for _ in range(5))
            + tuple(Block(Level.STRESS, 20.0, 30.0) for _ in range(5))
        )

    @property
    def duration_s(self) -> float:
        return float(sum(b.rest_s + b.task_s for b in self.blocks))

    @property
    def n_blocks(self) -> int:
        return len(self.blocks)


@dataclass(frozen=True)
class LabeledWindow:
    """Half-open sample interval covering one task part."""

    part_index: int
    level: Level
    start_sample: int
    end_sample: int

    def __post_init__(self) -> None:
        if self.end_sample <= self.start_sample or self.start_sample < 0:
            raise DimensionError(
                f"invalid window [{self.start_sample}, {self.end_sample})"
            )

    @property
    def n_samples(self) -> int:
        return self.end_sample - self.start_sample


def total_hemoglobin(oxy: np.ndarray, deoxy: np.ndarray) -> np.ndarray:
    """Element-wise sum of the oxy and deoxy series."""
    oxy = np.asarray(oxy, dtype=np.float64)
    deoxy = np.asarray(deoxy, dtype=np.float64)
    if oxy.shape != deoxy.shape:
        raise DimensionError(f"length mismatch: {oxy.shape} vs {deoxy.shape}")
    return oxy + deoxy


def extract_task_windows(
    recording: Recording, schedule: BlockSchedule
) -> list[LabeledWindow]:
    """One labeled window per block, covering exactly the task portion.

    Raises RangeError if the schedule overruns the recording.
    """
    fs = recording.sampling_rate_hz
    windows: list[LabeledWindow] = []
    t = 0.0
    for i, block in enumerate(schedule.blocks):
        t += block.rest_s
        start = round_half_away(t * fs)
        length = round_half_away(block.task_s * fs)
        end = start + length
        if end > recording.n_samples:
            raise RangeError(
                f"block {i} needs samples up to {end} but the recording has "
                f"{recording.n_samples}"
            )
        windows.append(LabeledWindow(i, block.level, start, end))
        t += block.task_s
    return windows


def split_sections(
    window: LabeledWindow, n_sections: int = 3
) -> list[tuple[int, int]]:
    """Split a window into contiguous equal-length sample ranges."""
    if n_sections < 1:
        raise ConfigError(f"n_sections must be >= 1, got {n_sections}")
    length = window.n_samples
    if length % n_sections != 0:
        raise DimensionError(
            f"window of {length} samples is not divisible into {n_sections} sections"
        )
    step = length // n_sections
    return [
        (window.start_sample + k * step, window.start_sample + (k + 1) * step)
        for k in range(n_sections)
    ]
