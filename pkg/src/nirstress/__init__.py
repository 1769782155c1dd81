"""Synthetic fNIRS stress-classification pipeline.

Signal generation, ICA cardiac denoising, band-pass filtering, moment
features, a small from-scratch 1-D CNN trained with Adam, and a
cross-validation/ablation harness. See the README for the CLI.
"""

from .errors import (
    ConfigError,
    DimensionError,
    NirstressError,
    NumericError,
    RangeError,
)
from .signal_model import (
    Block,
    BlockSchedule,
    ChannelSeries,
    HemoglobinKind,
    LabeledWindow,
    Level,
    Recording,
    extract_task_windows,
    split_sections,
    total_hemoglobin,
)
from .synthgen import SynthConfig, generate_cohort, generate_recording
from .dsp import (
    CardiacWaveConfig,
    FilterSpec,
    amplitude_spectrum,
    apply_zero_phase,
    design_bandpass,
    detect_heartbeats,
    simulate_cardiac_wave,
)
from .ica import (
    DenoiseConfig,
    IcaModel,
    center_whiten,
    component_scores,
    denoise,
    fastica,
)
from .features import (
    FeatureDataset,
    FeatureLayout,
    MomentSet,
    build_dataset,
    freq_moments,
    time_moments,
    window_features,
)
from .harness import (
    CrossValReport,
    FoldPlan,
    ablate_featuresets,
    ablate_timeframes,
    ablate_train_fraction,
    aggregate,
    cross_validate,
    kfold_split,
)
from . import nn

__version__ = "0.1.0"
