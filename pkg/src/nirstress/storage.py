"""File formats: recordings as headered CSV, everything else as JSON.

Every float is written in shortest round-trip decimal (Python's repr), so
read(write(x)) reproduces the exact same float64 bits of everything.
"""

from __future__ import annotations

import json
import os
from pathlib import Path

import numpy as np

from .errors import ConfigError, DimensionError
from .features import FeatureDataset, FeatureLayout
from .harness import CrossValReport
from .nn import Network, network_from_dict, network_to_dict
from .signal_model import Block, BlockSchedule, ChannelSeries, Level, Recording

RECORDING_PREFIX = "recording_"
SCHEDULE_PREFIX = "schedule_"
SIDECAR_PREFIX = "ica_"
MANIFEST_NAME = "manifest.json"


def _fmt(x: float) -> str:
    return repr(float(x))


def write_recording_csv(
    path, recording: Recording, config_digest: str = "", seed: int | None = None
) -> None:
    """Header: time_s, ch01_oxy, ch01_deoxy, ... A leading comment line
    carries the provenance so every artifact embeds digest and seed."""
    fs = recording.sampling_rate_hz
    cols = ["time_s"]
    for c in range(recording.n_channels):
        cols += [f"ch{c + 1:02d}_oxy", f"ch{c + 1:02d}_deoxy"]
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(
            f"# participant={recording.participant_id} "
            f"config_digest={config_digest} seed={'' if seed is None else seed}\n"
        )
        fh.write(",".join(cols) + "\n")
        for i in range(recording.n_samples):
            row = [_fmt(i / fs)]
            for ch in recording.channels:
                row.append(_fmt(ch.oxy[i]))
                row.append(_fmt(ch.deoxy[i]))
            fh.write(",".join(row) + "\n")


def read_recording_csv(path) -> Recording:
    path = Path(path)
    participant = path.stem
    if participant.startswith(RECORDING_PREFIX):
        participant = participant[len(RECORDING_PREFIX):]
    with open(path, encoding="utf-8") as fh:
        first = fh.readline()
        if first.startswith("#"):
            for token in first[1:].split():
                if token.startswith("participant="):
                    participant = token.split("=", 1)[1]
            header = fh.readline()
        else:
            header = first
        names = header.strip().split(",")
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    if names[0] != "time_s" or len(names) < 3 or (len(names) - 1) % 2 != 0:
        raise DimensionError(f"{path}: unexpected recording columns {names[:3]}...")
    if data.shape[0] < 2:
        raise DimensionError(f"{path}: a recording needs at least 2 samples")
    t = data[:, 0]
    fs = float(np.round((data.shape[0] - 1) / (t[-1] - t[0]), 9))
    n_channels = (len(names) - 1) // 2
    channels = tuple(
        ChannelSeries(oxy=data[:, 1 + 2 * c], deoxy=data[:, 2 + 2 * c])
        for c in range(n_channels)
    )
    return Recording(participant_id=participant, sampling_rate_hz=fs, channels=channels)


def _dump_json(obj: dict, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _load_json(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        try:
            return json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from exc


def write_schedule_json(path, schedule: BlockSchedule, config_digest: str = "",
                        seed: int | None = None) -> None:
    _dump_json(
        {
            "config_digest": config_digest,
            "seed": seed,
            "blocks": [
                {"level": b.level.value, "rest_s": b.rest_s, "task_s": b.task_s}
                for b in schedule.blocks
            ],
        },
        path,
    )


def read_schedule_json(path) -> BlockSchedule:
    data = _load_json(path)
    try:
        blocks = tuple(
            Block(Level(b["level"]), float(b["rest_s"]), float(b["task_s"]))
            for b in data["blocks"]
        )
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"{path}: bad schedule ({exc})") from exc
    return BlockSchedule(blocks)


def write_dataset_json(path, dataset: FeatureDataset) -> None:
    _dump_json(
        {
            "format_version": 1,
            "provenance": dataset.provenance,
            "standardized": dataset.standardized,
            "layout": {
                "channel_mode": dataset.layout.channel_mode,
                "signals": list(dataset.layout.signals),
                "sections": list(dataset.layout.sections),
                "feature_domains": list(dataset.layout.feature_domains),
            },
            "columns": list(dataset.feature_names),
            "groups": list(dataset.groups),
            "y": dataset.y.tolist(),
            "x": [[float(v) for v in row] for row in dataset.X],
        },
        path,
    )


def read_dataset_json(path) -> FeatureDataset:
    data = _load_json(path)
    try:
        layout = FeatureLayout(
            channel_mode=data["layout"]["channel_mode"],
            signals=tuple(data["layout"]["signals"]),
            sections=tuple(data["layout"]["sections"]),
            feature_domains=tuple(data["layout"]["feature_domains"]),
        )
        return FeatureDataset(
            X=np.array(data["x"], dtype=np.float64),
            y=np.array(data["y"], dtype=np.int64),
            groups=tuple(data["groups"]),
            layout=layout,
            feature_names=tuple(data["columns"]),
            provenance=data.get("provenance", {}),
            standardized=data.get("standardized", False),
        )
    except KeyError as exc:
        raise ConfigError(f"{path}: dataset file is missing {exc}") from exc


def write_model_json(path, net: Network, scaler: tuple[np.ndarray, np.ndarray] | None,
                     config_digest: str = "", seed: int | None = None) -> None:
    payload = network_to_dict(net)
    payload["config_digest"] = config_digest
    payload["seed"] = seed
    payload["scaler"] = (
        None
        if scaler is None
        else {"mean": scaler[0].tolist(), "std": scaler[1].tolist()}
    )
    _dump_json(payload, path)


def read_model_json(path) -> tuple[Network, tuple[np.ndarray, np.ndarray] | None]:
    data = _load_json(path)
    net = network_from_dict(data)
    scaler = None
    if data.get("scaler") is not None:
        scaler = (
            np.array(data["scaler"]["mean"], dtype=np.float64),
            np.array(data["scaler"]["std"], dtype=np.float64),
        )
    return net, scaler


def write_report_json(path, report: CrossValReport) -> None:
    _dump_json(report.to_dict(), path)


def read_report_json(path) -> CrossValReport:
    return CrossValReport.from_dict(_load_json(path))


def write_manifest(path, entries: dict) -> None:
    _dump_json(entries, path)


def read_manifest(path) -> dict:
    return _load_json(path)


def recording_paths(directory) -> list[Path]:
    directory = Path(directory)
    if not directory.is_dir():
        raise FileNotFoundError(
            f"recording directory not found: {directory}"
        )
    return sorted(directory.glob(f"{RECORDING_PREFIX}*.csv"))


def load_cohort(directory) -> list[tuple[Recording, BlockSchedule]]:
    """Read every recording_*.csv with its schedule_*.json sibling."""
    paths = recording_paths(directory)
    if not paths:
        raise ConfigError(f"no {RECORDING_PREFIX}*.csv files in {directory}")
    cohort = []
    for rec_path in paths:
        pid = rec_path.stem[len(RECORDING_PREFIX):]
        sched_path = rec_path.parent / f"{SCHEDULE_PREFIX}{pid}.json"
        if not sched_path.exists():
            raise FileNotFoundError(f"missing schedule file: {sched_path}")
        cohort.append((read_recording_csv(rec_path), read_schedule_json(sched_path)))
    return cohort
