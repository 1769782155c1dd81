import hashlib

import numpy as np
import pytest

from nirstress.errors import ConfigError
from nirstress.features import FeatureDataset, FeatureLayout, build_dataset
from nirstress.harness import (
    REFERENCE_FOLD_ACCURACY,
    CrossValReport,
    aggregate,
    ablate_timeframes,
    cross_validate,
    group_kfold_split,
    kfold_split,
)
from nirstress.nn import NetworkSpec, TrainConfig
from nirstress.synthgen import SynthConfig, generate_cohort

SMALL_SPEC = NetworkSpec(
    conv_kernels=4, conv_width=3, dense_sizes=(8, 4, 3, 1),
    dropout_rates=(0.6, 0.4, 0.2),
)
# Faster learning rate than the pipeline default so structural checks
# converge in tens of epochs on toy data.
FAST_TRAIN = TrainConfig(learning_rate=0.002, epochs=60, batch_size=10, seed=0)


def toy_dataset(n_per_class=20, dim=6, separation=2.0, seed=0, n_groups=4):
    rng = np.random.default_rng(seed)
    X0 = rng.normal(0.0, 1.0, size=(n_per_class, dim))
    X1 = rng.normal(separation, 1.0, size=(n_per_class, dim))
    X = np.vstack([X0, X1])
    y = np.array([0] * n_per_class + [1] * n_per_class)
    order = rng.permutation(2 * n_per_class)
    groups = tuple(f"g{i % n_groups}" for i in range(2 * n_per_class))
    layout = FeatureLayout(signals=("oxy",), sections=(1,), feature_domains=("time",))
    names = tuple(f"f{i}" for i in range(dim))
    return FeatureDataset(
        X=X[order], y=y[order], groups=groups, layout=layout,
        feature_names=names[: dim] if dim == len(names) else tuple(f"f{i}" for i in range(dim)),
    )


class TestKfoldSplit:
    def test_equal_folds(self):
        plan = kfold_split(100, 5, seed=1)
        sizes = [len(plan.test_indices(f)) for f in range(5)]
        assert sizes == [20] * 5

    def test_remainder_distribution(self):
        plan = kfold_split(7, 5, seed=2)
        sizes = sorted(len(plan.test_indices(f)) for f in range(5))
        assert sizes == [1, 1, 1, 2, 2]

    def test_partition(self):
        plan = kfold_split(23, 4, seed=3)
        seen = np.concatenate([plan.test_indices(f) for f in range(4)])
        assert sorted(seen.tolist()) == list(range(23))

    def test_too_few_samples(self):
        with pytest.raises(ConfigError):
            kfold_split(4, 5, seed=0)

    def test_deterministic(self):
        a = kfold_split(50, 5, seed=9)
        b = kfold_split(50, 5, seed=9)
        assert np.array_equal(a.assignments, b.assignments)
        c = kfold_split(50, 5, seed=10)
        assert not np.array_equal(a.assignments, c.assignments)


class TestGroupSplit:
    def test_no_group_spans_folds(self):
        groups = tuple(f"p{i // 10}" for i in range(100))
        plan = group_kfold_split(groups, 5, seed=0)
        for fold in range(5):
            test_groups = {groups[i] for i in plan.test_indices(fold)}
            train_groups = {groups[i] for i in plan.train_indices(fold)}
            assert not (test_groups & train_groups)


class TestAggregate:
    def test_published_fold_row(self):
        mean, std = aggregate(list(REFERENCE_FOLD_ACCURACY))
        assert round(mean, 2) == 88.52
        assert round(std, 2) == 0.77

    def test_sample_std_would_not_match(self):
        values = np.array(REFERENCE_FOLD_ACCURACY)
        assert round(float(values.std(ddof=1)), 2) == 0.86

    def test_constant(self):
        assert aggregate([50.0, 50.0, 50.0]) == (50.0, 0.0)

    def test_two_point_symmetry(self):
        assert aggregate([0.0, 100.0]) == (50.0, 50.0)

    def test_single_value(self):
        assert aggregate([87.3]) == (87.3, 0.0)

    def test_empty_rejected(self):
        with pytest.raises(ConfigError):
            aggregate([])


class TestCrossValidate:
    def test_separable_data_high_accuracy(self):
        ds = toy_dataset(separation=4.0)
        report = cross_validate(ds, SMALL_SPEC, FAST_TRAIN, k=5, seed=0)
        assert len(report.per_fold_accuracy) == 5
        assert report.mean >= 90.0
        mean, std = aggregate(list(report.per_fold_accuracy))
        assert report.mean == pytest.approx(mean)
        assert report.std == pytest.approx(std)

    def test_constant_features_near_chance(self):
        rng = np.random.default_rng(1)
        ds = toy_dataset(separation=0.0, seed=4)
        report = cross_validate(ds, SMALL_SPEC, FAST_TRAIN, k=5, seed=1)
        assert 20.0 <= report.mean <= 80.0  # coarse chance band on 40 rows

    def test_deterministic_reports(self):
        ds = toy_dataset()
        r1 = cross_validate(ds, SMALL_SPEC, FAST_TRAIN, k=5, seed=7)
        r2 = cross_validate(ds, SMALL_SPEC, FAST_TRAIN, k=5, seed=7)
        assert r1.per_fold_accuracy == r2.per_fold_accuracy
        assert r1.to_dict() == r2.to_dict()

    def test_test_rows_not_mutated(self):
        ds = toy_dataset()
        digest_before = hashlib.sha256(ds.X.tobytes()).hexdigest()
        cross_validate(ds, SMALL_SPEC, FAST_TRAIN, k=5, seed=0)
        assert hashlib.sha256(ds.X.tobytes()).hexdigest() == digest_before

    def test_single_class_split_rejected(self):
        rng = np.random.default_rng(2)
        X = rng.normal(size=(10, 6))
        y = np.array([0] * 9 + [1])
        ds = FeatureDataset(
            X=X, y=y, groups=tuple("g" + str(i) for i in range(10)),
            layout=FeatureLayout(signals=("oxy",), sections=(1,),
                                 feature_domains=("time",)),
            feature_names=tuple(f"f{i}" for i in range(6)),
        )
        with pytest.raises(ConfigError, match="fold"):
            cross_validate(ds, SMALL_SPEC, FAST_TRAIN, k=5, seed=0)

    def test_group_mode_recorded(self):
        ds = toy_dataset()
        report = cross_validate(
            ds, SMALL_SPEC, FAST_TRAIN, k=4, seed=0, group_stratified=True
        )
        assert report.split_mode == "group"

    def test_shuffled_labels_near_chance(self):
        ds = toy_dataset(separation=4.0)
        report = cross_validate(
            ds, SMALL_SPEC, FAST_TRAIN, k=5, seed=0, shuffled_labels=True
        )
        assert 20.0 <= report.mean <= 80.0


class TestReport:
    def test_roundtrip(self):
        report = CrossValReport(
            per_fold_accuracy=(90.0, 85.0, 95.0, 80.0, 100.0),
            mean=90.0, std=7.0710678118654755, k=5, seed=3,
            split_mode="random", config_digest="abc", backend="python",
        )
        clone = CrossValReport.from_dict(report.to_dict())
        assert clone == report
        assert report.mean_pm_std == "90.00 ± 7.07"

    def test_accuracy_bounds_enforced(self):
        with pytest.raises(ConfigError):
            CrossValReport(
                per_fold_accuracy=(150.0,), mean=150.0, std=0.0, k=1, seed=0,
                split_mode="random",
            )


class TestAblations:
    @pytest.fixture(scope="class")
    def tiny_cohort(self):
        return generate_cohort(SynthConfig(seed=5, n_participants=3, n_channels=5))

    def test_timeframe_rows(self, tiny_cohort):
        rows = ablate_timeframes(
            tiny_cohort, FeatureLayout(), SMALL_SPEC, FAST_TRAIN, k=3, seed=0
        )
        assert [r["frame"] for r in rows] == [1, 2, 3]
        assert [r["reference_accuracy"] for r in rows] == [71.11, 78.32, 85.14]
        for r in rows:
            assert 0.0 <= r["mean_accuracy"] <= 100.0
