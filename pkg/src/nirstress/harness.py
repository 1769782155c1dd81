"""Cross-validation, ablations, and fold aggregation.

Fold aggregation uses the population standard deviation (divide by k),
which is the convention the published per-fold accuracies round-trip
under. Feature z-scoring is fit on training rows only, inside each fold.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from ._util import derive_seed, round_half_away, substream
from .errors import ConfigError
from .features import FeatureDataset, FeatureLayout, build_dataset
from .nn import NetworkSpec, TrainConfig, accuracy, active_backend, predict, train
from .signal_model import BlockSchedule, Recording

# Published reference accuracies (%) for this protocol, from the original
# study's private 10-participant dataset. Context only: not reproducible
# from synthetic data, and never asserted against.
REFERENCE_FOLD_ACCURACY = (89.27, 89.04, 88.52, 88.72, 87.07)
REFERENCE_TIMEFRAME_ACCURACY = {1: 71.11, 2: 78.32, 3: 85.14}
REFERENCE_FEATURESET_ACCURACY = {"time": 86.10, "frequency": 80.74, "all": 88.52}
REFERENCE_FRACTION_ACCURACY = {1.0: 88.52, 0.8: 85.57, 0.6: 82.33, 0.4: 81.54, 0.2: 78.58}

_STREAM_FOLD = 11
_STREAM_TRAIN = 12
_STREAM_SUBSAMPLE = 13
_STREAM_GROUP = 14

DEFAULT_FRACTIONS = (1.0, 0.8, 0.6, 0.4, 0.2)


@dataclass(frozen=True)
class FoldPlan:
    """Fold index per sample; folds differ in size by at most one."""

    k: int
    assignments: np.ndarray
    seed: int

    def __post_init__(self) -> None:
        a = np.asarray(self.assignments, dtype=np.int64)
        a.setflags(write=False)
        object.__setattr__(self, "assignments", a)

    def test_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignments == fold)

    def train_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignments != fold)


def kfold_split(n: int, k: int, seed: int) -> FoldPlan:
    """Seeded random permutation partitioned into k near-equal folds."""
    if n < k:
        raise ConfigError(f"cannot split {n} samples into {k} folds")
    if k < 2:
        raise ConfigError(f"k must be >= 2, got {k}")
    rng = substream(seed, _STREAM_FOLD)
    perm = rng.permutation(n)
    assignments = np.empty(n, dtype=np.int64)
    base, extra = divmod(n, k)
    pos = 0
    for fold in range(k):
        size = base + (1 if fold < extra else 0)
        assignments[perm[pos : pos + size]] = fold
        pos += size
    return FoldPlan(k, assignments, seed)


def group_kfold_split(groups: tuple[str, ...], k: int, seed: int) -> FoldPlan:
    """Participant-aware folds: no group's samples span two folds."""
    unique = sorted(set(groups))
    if len(unique) < k:
        raise ConfigError(
            f"cannot split {len(unique)} participants into {k} folds"
        )
    rng = substream(seed, _STREAM_GROUP)
    order = [unique[i] for i in rng.permutation(len(unique))]
    fold_of_group: dict[str, int] = {}
    counts = np.zeros(k, dtype=np.int64)
    per_group = {g: sum(1 for x in groups if x == g) for g in unique}
    for g in order:
        fold = int(np.argmin(counts))
        fold_of_group[g] = fold
        counts[fold] += per_group[g]
    assignments = np.array([fold_of_group[g] for g in groups], dtype=np.int64)
    return FoldPlan(k, assignments, seed)


def aggregate(per_fold: list[float] | np.ndarray) -> tuple[float, float]:
    """Mean and population standard deviation of per-fold accuracies."""
    values = np.asarray(per_fold, dtype=np.float64)
    if values.size == 0:
        raise ConfigError("cannot aggregate an empty accuracy list")
    return float(values.mean()), float(values.std(ddof=0))


@dataclass(frozen=True)
class CrossValReport:
    """Everything needed to reproduce and audit one cross-validation run."""

    per_fold_accuracy: tuple[float, ...]
    mean: float
    std: float
    k: int
    seed: int
    split_mode: str
    config_digest: str = ""
    backend: str = ""
    ablations: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        for acc in self.per_fold_accuracy:
            if not 0.0 <= acc <= 100.0:
                raise ConfigError(f"accuracy {acc} outside [0, 100]")

    @property
    def mean_pm_std(self) -> str:
        return f"{self.mean:.2f} ± {self.std:.2f}"

    def to_dict(self) -> dict:
        return {
            "per_fold_accuracy": list(self.per_fold_accuracy),
            "mean": self.mean,
            "std": self.std,
            "mean_pm_std": self.mean_pm_std,
            "k": self.k,
            "seed": self.seed,
            "split_mode": self.split_mode,
            "config_digest": self.config_digest,
            "backend": self.backend,
            "ablations": self.ablations,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CrossValReport":
        return cls(
            per_fold_accuracy=tuple(d["per_fold_accuracy"]),
            mean=d["mean"],
            std=d["std"],
            k=d["k"],
            seed=d["seed"],
            split_mode=d["split_mode"],
            config_digest=d.get("config_digest", ""),
            backend=d.get("backend", ""),
            ablations=d.get("ablations", {}),
        )


def _fit_scaler(X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    mean = X.mean(axis=0)
    std = X.std(axis=0)
    std = np.where(std < 1e-12, 1.0, std)
    return mean, std


def _fold_accuracy(
    dataset: FeatureDataset,
    train_idx: np.ndarray,
    test_idx: np.ndarray,
    spec: NetworkSpec,
    train_config: TrainConfig,
    fold: int,
    seed: int,
    y_train_override: np.ndarray | None = None,
) -> float:
    y_train = dataset.y[train_idx] if y_train_override is None else y_train_override
    if len(np.unique(y_train)) < 2:
        raise ConfigError(f"fold {fold} training split contains a single class")
    mean, std = _fit_scaler(dataset.X[train_idx])
    X_train = (dataset.X[train_idx] - mean) / std
    X_test = (dataset.X[test_idx] - mean) / std
    fold_config = replace(
        train_config, seed=derive_seed(train_config.seed, seed, _STREAM_TRAIN, fold)
    )
    net, _ = train(spec, (X_train, y_train), fold_config)
    labels = predict(net, X_test)
    return 100.0 * accuracy(labels, dataset.y[test_idx])


def cross_validate(
    dataset: FeatureDataset,
    spec: NetworkSpec,
    train_config: TrainConfig,
    k: int = 5,
    seed: int = 0,
    group_stratified: bool = False,
    config_digest: str = "",
    shuffled_labels: bool = False,
) -> CrossValReport:
    """k-fold cross-validation with per-fold scaling and fresh models.

    ``shuffled_labels`` permutes the training labels (test labels keep
    their truth) as a chance-level control.
    """
    n = dataset.n_samples
    if n < k:
        raise ConfigError(f"dataset of {n} rows cannot be split into {k} folds")
    if group_stratified:
        plan = group_kfold_split(dataset.groups, k, seed)
    else:
        plan = kfold_split(n, k, seed)
    shuffled_y = None
    if shuffled_labels:
        rng = substream(seed, _STREAM_FOLD, 999)
        shuffled_y = dataset.y[rng.permutation(n)]
    per_fold = []
    for fold in range(k):
        tr, te = plan.train_indices(fold), plan.test_indices(fold)
        override = shuffled_y[tr] if shuffled_y is not None else None
        per_fold.append(
            _fold_accuracy(dataset, tr, te, spec, train_config, fold, seed, override)
        )
    mean, std = aggregate(per_fold)
    return CrossValReport(
        per_fold_accuracy=tuple(per_fold),
        mean=mean,
        std=std,
        k=k,
        seed=seed,
        split_mode="group" if group_stratified else "random",
        config_digest=config_digest,
        backend=active_backend(),
    )


def ablate_timeframes(
    cohort: list[tuple[Recording, BlockSchedule]],
    base_layout: FeatureLayout,
    spec: NetworkSpec,
    train_config: TrainConfig,
    k: int = 5,
    seed: int = 0,
    standardize: bool = False,
) -> list[dict]:
    """Mean accuracy using each 10-s section alone. Fold seed is shared
    across cells for comparability."""
    rows = []
    for frame in (1, 2, 3):
        layout = replace(base_layout, sections=(frame,))
        dataset = build_dataset(cohort, layout, standardize=standardize)
        report = cross_validate(dataset, spec, train_config, k=k, seed=seed)
        rows.append(
            {
                "frame": frame,
                "mean_accuracy": report.mean,
                "std": report.std,
                "reference_accuracy": REFERENCE_TIMEFRAME_ACCURACY[frame],
            }
        )
    return rows


def ablate_featuresets(
    cohort: list[tuple[Recording, BlockSchedule]],
    base_layout: FeatureLayout,
    spec: NetworkSpec,
    train_config: TrainConfig,
    k: int = 5,
    seed: int = 0,
    standardize: bool = False,
) -> list[dict]:
    """Mean accuracy with time-domain, frequency-domain, and all features."""
    cells = [
        ("time", ("time",)),
        ("frequency", ("frequency",)),
        ("all", ("time", "frequency")),
    ]
    rows = []
    for name, domains in cells:
        layout = replace(base_layout, feature_domains=domains)
        dataset = build_dataset(cohort, layout, standardize=standardize)
        report = cross_validate(dataset, spec, train_config, k=k, seed=seed)
        rows.append(
            {
                "feature_set": name,
                "mean_accuracy": report.mean,
                "std": report.std,
                "reference_accuracy": REFERENCE_FEATURESET_ACCURACY[name],
            }
        )
    return rows


def _stratified_subsample(
    y: np.ndarray, indices: np.ndarray, fraction: float, rng: np.random.Generator
) -> np.ndarray:
    chosen: list[np.ndarray] = []
    for cls in (0, 1):
        cls_idx = indices[y[indices] == cls]
        n_take = round_half_away(fraction * cls_idx.shape[0])
        if n_take < 2:
            raise ConfigError(
                f"fraction {fraction} leaves {n_take} sample(s) of class {cls}; "
                "need at least 2 per class"
            )
        take = rng.permutation(cls_idx.shape[0])[:n_take]
        chosen.append(cls_idx[take])
    return np.sort(np.concatenate(chosen))


def ablate_train_fraction(
    cohort: list[tuple[Recording, BlockSchedule]],
    base_layout: FeatureLayout,
    spec: NetworkSpec,
    train_config: TrainConfig,
    fractions: tuple[float, ...] = DEFAULT_FRACTIONS,
    k: int = 5,
    seed: int = 0,
    standardize: bool = False,
) -> list[dict]:
    """Mean accuracy as the training split shrinks; test folds unchanged."""
    dataset = build_dataset(cohort, base_layout, standardize=standardize)
    plan = kfold_split(dataset.n_samples, k, seed)
    rows = []
    for f_idx, fraction in enumerate(fractions):
        per_fold = []
        for fold in range(k):
            tr, te = plan.train_indices(fold), plan.test_indices(fold)
            rng = substream(seed, _STREAM_SUBSAMPLE, f_idx, fold)
            sub = _stratified_subsample(dataset.y, tr, fraction, rng)
            per_fold.append(
                _fold_accuracy(dataset, sub, te, spec, train_config, fold, seed)
            )
        mean, std = aggregate(per_fold)
        rows.append(
            {
                "fraction": fraction,
                "mean_accuracy": mean,
                "std": std,
                "reference_accuracy": REFERENCE_FRACTION_ACCURACY.get(fraction),
            }
        )
    return rows
