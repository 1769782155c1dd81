import filecmp
import json
import xml.etree.ElementTree as ET
from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest

from nirstress import storage
from nirstress.cli import main
from nirstress.config import (
    EvalConfig,
    FeatureConfig,
    PipelineConfig,
    load_config,
    save_config,
)
from nirstress.features import FeatureLayout, build_dataset
from nirstress.harness import CrossValReport
from nirstress.nn import NetworkSpec, TrainConfig, forward, init_network
from nirstress._util import substream
from nirstress.plotting import render_recording_svg
from nirstress.signal_model import BlockSchedule
from nirstress.synthgen import SynthConfig, generate_cohort, generate_recording


def tiny_config(seed=5) -> PipelineConfig:
    """Small-but-real pipeline config so end-to-end runs stay fast."""
    base = PipelineConfig()
    return replace(
        base,
        synth=SynthConfig(seed=seed, n_participants=3, n_channels=6),
        network=NetworkSpec(
            conv_kernels=4, conv_width=3, dense_sizes=(16, 8, 4, 1),
            dropout_rates=(0.6, 0.4, 0.2),
        ),
        train=TrainConfig(learning_rate=0.002, epochs=40, batch_size=10, seed=seed),
        eval=EvalConfig(k=3, seed=seed),
    ).with_seed(seed)


class TestRecordingRoundtrip:
    def test_bit_exact(self, tmp_path):
        rec, _ = generate_recording(SynthConfig(seed=1, n_participants=1, n_channels=3), 0)
        path = tmp_path / "recording_p00.csv"
        storage.write_recording_csv(path, rec, "digest123", 1)
        back = storage.read_recording_csv(path)
        assert back.participant_id == rec.participant_id
        assert back.sampling_rate_hz == rec.sampling_rate_hz
        for a, b in zip(rec.channels, back.channels):
            assert np.array_equal(a.oxy, b.oxy)
            assert np.array_equal(a.deoxy, b.deoxy)

    def test_embeds_digest_and_seed(self, tmp_path):
        rec, _ = generate_recording(SynthConfig(seed=1, n_participants=1, n_channels=2), 0)
        path = tmp_path / "recording_p00.csv"
        storage.write_recording_csv(path, rec, "abcd", 7)
        first = path.read_text().splitlines()[0]
        assert "config_digest=abcd" in first and "seed=7" in first


class TestScheduleRoundtrip:
    def test_roundtrip(self, tmp_path):
        schedule = BlockSchedule.default()
        path = tmp_path / "schedule_p00.json"
        storage.write_schedule_json(path, schedule, "digest", 0)
        assert storage.read_schedule_json(path) == schedule


class TestDatasetRoundtrip:
    def test_bit_exact(self, tmp_path):
        cohort = generate_cohort(SynthConfig(seed=2, n_participants=2, n_channels=3))
        ds = build_dataset(cohort, FeatureLayout(), provenance={"seed": 2})
        path = tmp_path / "dataset.json"
        storage.write_dataset_json(path, ds)
        back = storage.read_dataset_json(path)
        assert np.array_equal(back.X, ds.X)
        assert np.array_equal(back.y, ds.y)
        assert back.groups == ds.groups
        assert back.feature_names == ds.feature_names
        assert back.layout == ds.layout


class TestModelRoundtrip:
    def test_bit_exact_with_scaler(self, tmp_path):
        net = init_network(
            NetworkSpec(conv_kernels=3, conv_width=3, dense_sizes=(5, 4, 3, 1),
                        dropout_rates=(0.6, 0.4, 0.2)),
            8, substream(3),
        )
        scaler = (np.arange(8, dtype=np.float64), np.full(8, 1.5))
        path = tmp_path / "model.json"
        storage.write_model_json(path, net, scaler, "digest", 3)
        back, back_scaler = storage.read_model_json(path)
        for name in net.params:
            assert np.array_equal(back.params[name], net.params[name])
        assert np.array_equal(back_scaler[0], scaler[0])
        assert np.array_equal(back_scaler[1], scaler[1])
        X = substream(4).normal(size=(3, 8))
        np.testing.assert_array_equal(
            forward(back, X, mode="infer"), forward(net, X, mode="infer")
        )


class TestReportRoundtrip:
    def test_roundtrip(self, tmp_path):
        report = CrossValReport(
            per_fold_accuracy=(80.0, 90.0, 100.0), mean=90.0,
            std=8.16496580927726, k=3, seed=1, split_mode="random",
            config_digest="beef", backend="python",
            ablations={"timeframe": [{"frame": 1, "mean_accuracy": 70.0}]},
        )
        path = tmp_path / "report.json"
        storage.write_report_json(path, report)
        assert storage.read_report_json(path) == report


class TestConfigRoundtrip:
    def test_roundtrip_and_digest_stability(self, tmp_path):
        config = tiny_config()
        path = tmp_path / "config.json"
        save_config(config, path)
        back = load_config(path)
        assert back == config
        assert back.digest() == config.digest()

    def test_seed_override_changes_all_stages(self):
        config = tiny_config(seed=5).with_seed(99)
        assert config.synth.seed == 99
        assert config.preprocess.ica.seed == 99
        assert config.train.seed == 99
        assert config.eval.seed == 99


class TestPlot:
    def test_structure_counts(self):
        rec, schedule = generate_recording(
            SynthConfig(seed=4, n_participants=1, n_channels=3), 0
        )
        svg = render_recording_svg(rec, schedule, "digest", 4)
        root = ET.fromstring(svg)
        ns = "{http://www.w3.org/2000/svg}"
        shaded = [
            el for el in root.iter(f"{ns}rect")
            if el.get("class", "").startswith("block-")
        ]
        polylines = list(root.iter(f"{ns}polyline"))
        assert len(shaded) == 10
        assert len(polylines) == 3
        greens = [el for el in shaded if el.get("class") == "block-control"]
        oranges = [el for el in shaded if el.get("class") == "block-stress"]
        assert len(greens) == 5 and len(oranges) == 5

    def test_deterministic_output(self):
        rec, schedule = generate_recording(
            SynthConfig(seed=4, n_participants=1, n_channels=2), 0
        )
        assert render_recording_svg(rec, schedule) == render_recording_svg(rec, schedule)

    def test_schedule_overrun_rejected(self, small_schedule):
        from nirstress.errors import RangeError
        from conftest import make_recording
        rec = make_recording(n_samples=100)
        with pytest.raises(RangeError):
            render_recording_svg(rec, small_schedule)


class TestCliCommands:
    @pytest.fixture(scope="class")
    def workspace(self, tmp_path_factory):
        ws = tmp_path_factory.mktemp("cli")
        config = tiny_config()
        save_config(config, ws / "config.json")
        return ws

    def test_synth_writes_expected_files(self, workspace):
        code = main(["synth", "--config", str(workspace / "config.json"),
                     "--out", str(workspace / "raw")])
        assert code == 0
        files = sorted(p.name for p in (workspace / "raw").iterdir())
        assert "manifest.json" in files
        assert sum(f.startswith("recording_") for f in files) == 3
        assert sum(f.startswith("schedule_") for f in files) == 3

    def test_synth_rerun_byte_identical(self, workspace):
        main(["synth", "--config", str(workspace / "config.json"),
              "--out", str(workspace / "raw2")])
        for name in ("recording_p00.csv", "schedule_p01.json", "manifest.json"):
            assert filecmp.cmp(
                workspace / "raw" / name, workspace / "raw2" / name, shallow=False
            )

    def test_preprocess(self, workspace):
        code = main([
            "preprocess", "--config", str(workspace / "config.json"),
            "--in", str(workspace / "raw"), "--out", str(workspace / "pre"),
        ])
        assert code == 0
        sidecar = json.loads((workspace / "pre" / "ica_p00.json").read_text())
        assert len(sidecar["oxy"]["component_correlations"]) == 6
        assert len(sidecar["oxy"]["kept_components"]) == 1  # 20% of 6 -> 1
        assert sidecar["n_beats"] > 400

    def test_featurize(self, workspace):
        code = main([
            "featurize", "--config", str(workspace / "config.json"),
            "--in", str(workspace / "pre"), "--out", str(workspace / "dataset.json"),
        ])
        assert code == 0
        data = json.loads((workspace / "dataset.json").read_text())
        assert len(data["columns"]) == 48
        assert len(data["x"]) == 30
        assert data["columns"][0] == "oxy_sec1_time_mean"

    def test_cv(self, workspace):
        code = main([
            "cv", "--config", str(workspace / "config.json"),
            "--dataset", str(workspace / "dataset.json"),
            "--out", str(workspace / "report.json"),
        ])
        assert code == 0
        report = json.loads((workspace / "report.json").read_text())
        assert len(report["per_fold_accuracy"]) == 3
        assert "mean_pm_std" in report
        assert report["config_digest"]

    def test_train_predict_roundtrip(self, workspace):
        code = main([
            "train", "--config", str(workspace / "config.json"),
            "--dataset", str(workspace / "dataset.json"),
            "--out", str(workspace / "model.json"),
        ])
        assert code == 0
        code = main([
            "predict", "--model", str(workspace / "model.json"),
            "--dataset", str(workspace / "dataset.json"),
            "--out", str(workspace / "labels.json"),
        ])
        assert code == 0
        labels = json.loads((workspace / "labels.json").read_text())
        assert len(labels["labels"]) == 30

        # serialization fidelity: in-memory predictions match exactly
        ds = storage.read_dataset_json(workspace / "dataset.json")
        net, scaler = storage.read_model_json(workspace / "model.json")
        X = (ds.X - scaler[0]) / scaler[1]
        from nirstress.nn import predict
        np.testing.assert_array_equal(predict(net, X), np.array(labels["labels"]))

    def test_plot_command(self, workspace):
        code = main([
            "plot", "--recording", str(workspace / "pre" / "recording_p00.csv"),
            "--schedule", str(workspace / "pre" / "schedule_p00.json"),
            "--out", str(workspace / "fig.svg"),
        ])
        assert code == 0
        assert (workspace / "fig.svg").read_text().count("<polyline") == 3

    def test_missing_input_gives_io_exit(self, workspace, tmp_path):
        code = main([
            "predict", "--model", str(tmp_path / "nope.json"),
            "--dataset", str(workspace / "dataset.json"),
            "--out", str(tmp_path / "x.json"),
        ])
        assert code == 3

    def test_bad_config_gives_config_exit(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text('{"synth": {"heart_rate_hz": 100.0}}')
        code = main(["synth", "--config", str(bad), "--out", str(tmp_path / "o")])
        assert code == 2

    def test_invalid_json_gives_config_exit(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        code = main(["synth", "--config", str(bad), "--out", str(tmp_path / "o")])
        assert code == 2


class TestAblateCli:
    def test_fraction_table(self, tmp_path):
        config = tiny_config(seed=6)
        # fractions chosen so the smallest still leaves >= 2 per class
        config = replace(config, eval=replace(config.eval, fractions=(1.0, 0.6)))
        save_config(config, tmp_path / "config.json")
        main(["synth", "--config", str(tmp_path / "config.json"),
              "--out", str(tmp_path / "raw")])
        code = main([
            "ablate", "--which", "fraction",
            "--config", str(tmp_path / "config.json"),
            "--in", str(tmp_path / "raw"), "--out", str(tmp_path / "ab.json"),
        ])
        assert code == 0
        table = json.loads((tmp_path / "ab.json").read_text())
        assert [row["fraction"] for row in table["rows"]] == [1.0, 0.6]


class TestPipelineCommand:
    def test_end_to_end_reproducible(self, tmp_path):
        config = tiny_config(seed=7)
        save_config(config, tmp_path / "config.json")
        for out in ("run1", "run2"):
            code = main([
                "pipeline", "--config", str(tmp_path / "config.json"),
                "--out", str(tmp_path / out),
            ])
            assert code == 0
        run1, run2 = tmp_path / "run1", tmp_path / "run2"
        produced = sorted(
            p.relative_to(run1) for p in run1.rglob("*") if p.is_file()
        )
        assert (run1 / "report.json").exists()
        assert (run1 / "figure_p00.svg").exists()
        for rel in produced:
            assert filecmp.cmp(run1 / rel, run2 / rel, shallow=False), rel

    def test_threads_do_not_change_results(self, tmp_path):
        config = tiny_config(seed=8)
        save_config(config, tmp_path / "config.json")
        main(["pipeline", "--config", str(tmp_path / "config.json"),
              "--out", str(tmp_path / "serial")])
        main(["pipeline", "--config", str(tmp_path / "config.json"),
              "--out", str(tmp_path / "threaded"), "--threads", "4"])
        serial, threaded = tmp_path / "serial", tmp_path / "threaded"
        for rel in sorted(p.relative_to(serial) for p in serial.rglob("*") if p.is_file()):
            assert filecmp.cmp(serial / rel, threaded / rel, shallow=False), rel
