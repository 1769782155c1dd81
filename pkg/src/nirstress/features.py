"""Moment-based time/frequency features and dataset assembly.

Conventions: population (1/N) moments, Pearson (non-excess) kurtosis, and
frequency-domain moments taken over the amplitude values of the one-sided
spectrum (not frequency-weighted spectral moments). Near-zero variance
forces skewness and kurtosis to 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .dsp import amplitude_spectrum
from .errors import ConfigError, DimensionError, NumericError, RangeError
from .signal_model import (
    BlockSchedule,
    HemoglobinKind,
    LabeledWindow,
    Level,
    Recording,
    extract_task_windows,
    split_sections,
)

_ZERO_VAR_RTOL = 1e-12
_MOMENT_NAMES = ("mean", "std", "skew", "kurt")
_SIGNAL_ORDER = ("oxy", "total")
_DOMAIN_ORDER = ("time", "frequency")
_N_SECTIONS = 3


@dataclass(frozen=True)
class MomentSet:
    mean: float
    std: float
    skewness: float
    kurtosis: float

    def as_array(self) -> np.ndarray:
        return np.array([self.mean, self.std, self.skewness, self.kurtosis])


def time_moments(x: np.ndarray) -> MomentSet:
    """Population mean, std, skewness, and Pearson kurtosis of a series."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] < 2:
        raise DimensionError("time_moments needs a 1-D series of length >= 2")
    m = x.mean()
    centered = x - m
    var = np.mean(centered**2)
    std = np.sqrt(var)
    if std < _ZERO_VAR_RTOL * max(1.0, abs(m)):
        return MomentSet(float(m), 0.0, 0.0, 0.0)
    skew = np.mean(centered**3) / std**3
    kurt = np.mean(centered**4) / std**4
    return MomentSet(float(m), float(std), float(skew), float(kurt))


def freq_moments(x: np.ndarray, sampling_rate_hz: float) -> MomentSet:
    """Time-domain moments of the series' amplitude-spectrum values."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] < 4:
        raise DimensionError("freq_moments needs a 1-D series of length >= 4")
    _, amps = amplitude_spectrum(x, sampling_rate_hz)
    return time_moments(amps)


@dataclass(frozen=True)
class FeatureLayout:
    """Which signals, sections, and domains go into the feature vector."""

    channel_mode: str = "averaged"
    signals: tuple[str, ...] = ("oxy", "total")
    sections: tuple[int, ...] = (1, 2, 3)
    feature_domains: tuple[str, ...] = ("time", "frequency")

    def __post_init__(self) -> None:
        if self.channel_mode not in ("averaged", "per_channel"):
            raise ConfigError(f"unknown channel_mode {self.channel_mode!r}")
        signals = tuple(s for s in _SIGNAL_ORDER if s in self.signals)
        sections = tuple(s for s in (1, 2, 3) if s in self.sections)
        domains = tuple(d for d in _DOMAIN_ORDER if d in self.feature_domains)
        if set(self.signals) - set(_SIGNAL_ORDER):
            raise ConfigError(f"signals must be a subset of {_SIGNAL_ORDER}")
        if set(self.sections) - {1, 2, 3}:
            raise ConfigError("sections must be a subset of {1, 2, 3}")
        if set(self.feature_domains) - set(_DOMAIN_ORDER):
            raise ConfigError(f"feature_domains must be a subset of {_DOMAIN_ORDER}")
        if not signals or not sections or not domains:
            raise ConfigError("layout subsets must be non-empty")
        object.__setattr__(self, "signals", signals)
        object.__setattr__(self, "sections", sections)
        object.__setattr__(self, "feature_domains", domains)

    def channels_eff(self, n_channels: int) -> int:
        return 1 if self.channel_mode == "averaged" else n_channels

    def dimension(self, n_channels: int) -> int:
        return (
            self.channels_eff(n_channels)
            * len(self.signals)
            * len(self.sections)
            * 4
            * len(self.feature_domains)
        )

    def feature_names(self, n_channels: int) -> tuple[str, ...]:
        """Names in the exact order window_features emits values."""
        names = []
        for c in range(self.channels_eff(n_channels)):
            prefix = "" if self.channel_mode == "averaged" else f"ch{c + 1:02d}_"
            for sig in self.signals:
                for sec in self.sections:
                    for dom in self.feature_domains:
                        tag = "time" if dom == "time" else "freq"
                        for mom in _MOMENT_NAMES:
                            names.append(f"{prefix}{sig}_sec{sec}_{tag}_{mom}")
        return tuple(names)


def _signal_rows(recording: Recording, signal: str, layout: FeatureLayout) -> np.ndarray:
    kind = HemoglobinKind.OXY if signal == "oxy" else HemoglobinKind.TOTAL
    matrix = recording.series_matrix(kind)
    if layout.channel_mode == "averaged":
        return matrix.mean(axis=0, keepdims=True)
    return matrix


def window_features(
    recording: Recording, window: LabeledWindow, layout: FeatureLayout
) -> np.ndarray:
    """Feature vector for one labeled window.

    Ordering is channel-major, then signal, section, domain, moment —
    matching ``FeatureLayout.feature_names``.
    """
    if window.end_sample > recording.n_samples:
        raise RangeError(
            f"window ends at {window.end_sample} but the recording has "
            f"{recording.n_samples} samples"
        )
    ranges = split_sections(window, _N_SECTIONS)
    rows_by_signal = {sig: _signal_rows(recording, sig, layout) for sig in layout.signals}
    fs = recording.sampling_rate_hz
    values: list[float] = []
    for c in range(layout.channels_eff(recording.n_channels)):
        for sig in layout.signals:
            row = rows_by_signal[sig][c]
            for sec in layout.sections:
                lo, hi = ranges[sec - 1]
                segment = row[lo:hi]
                for dom in layout.feature_domains:
                    if dom == "time":
                        moments = time_moments(segment)
                    else:
                        moments = freq_moments(segment, fs)
                    values.extend(moments.as_array())
    return np.array(values)


@dataclass(frozen=True)
class FeatureDataset:
    """Sample matrix with labels, participant groups, and layout metadata."""

    X: np.ndarray
    y: np.ndarray
    groups: tuple[str, ...]
    layout: FeatureLayout
    feature_names: tuple[str, ...]
    provenance: dict = field(default_factory=dict)
    standardized: bool = False

    def __post_init__(self) -> None:
        X = np.asarray(self.X, dtype=np.float64)
        y = np.asarray(self.y, dtype=np.int64)
        if X.ndim != 2 or y.ndim != 1 or X.shape[0] != y.shape[0]:
            raise DimensionError("X must be 2-D with one label per row")
        if X.shape[0] != len(self.groups):
            raise DimensionError("one group id per row is required")
        if X.shape[1] != len(self.feature_names):
            raise DimensionError("one feature name per column is required")
        if not np.isfinite(X).all():
            raise NumericError("feature matrix contains non-finite entries")
        if not np.isin(y, (0, 1)).all():
            raise ConfigError("labels must be 0 (control) or 1 (stress)")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "groups", tuple(self.groups))

    @property
    def n_samples(self) -> int:
        return self.X.shape[0]

    @property
    def n_features(self) -> int:
        return self.X.shape[1]


def build_dataset(
    cohort: list[tuple[Recording, BlockSchedule]],
    layout: FeatureLayout,
    standardize: bool = False,
    provenance: dict | None = None,
) -> FeatureDataset:
    """One feature row per task window across the whole cohort."""
    if not cohort:
        raise ConfigError("cannot build a dataset from an empty cohort")
    if layout.channel_mode == "per_channel":
        counts = {rec.n_channels for rec, _ in cohort}
        if len(counts) > 1:
            raise ConfigError(
                f"per_channel layout needs a uniform channel count, got {sorted(counts)}"
            )
    rows: list[np.ndarray] = []
    labels: list[int] = []
    groups: list[str] = []
    for recording, schedule in cohort:
        for window in extract_task_windows(recording, schedule):
            rows.append(window_features(recording, window, layout))
            labels.append(1 if window.level is Level.STRESS else 0)
            groups.append(recording.participant_id)
    X = np.vstack(rows)
    if standardize:
        mean = X.mean(axis=0)
        std = X.std(axis=0)
        std[std < 1e-12] = 1.0
        X = (X - mean) / std
    return FeatureDataset(
        X=X,
        y=np.array(labels),
        groups=tuple(groups),
        layout=layout,
        feature_names=layout.feature_names(cohort[0][0].n_channels),
        provenance=dict(provenance or {}),
        standardized=standardize,
    )


def sublayout(layout: FeatureLayout, **changes) -> FeatureLayout:
    """Convenience: a layout with some subsets replaced."""
    return replace(layout, **changes)
