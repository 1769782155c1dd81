"""Command-line entry point composing the full pipeline.

Subcommands: synth, preprocess, featurize, train, predict, cv, ablate,
plot, pipeline. Exit codes: 0 success, 2 configuration error, 3 I/O error,
4 numeric error.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import storage
from .config import PipelineConfig, load_config, save_config
from .errors import ConfigError, DimensionError, NumericError, RangeError
from .features import build_dataset
from .harness import (
    ablate_featuresets,
    ablate_timeframes,
    ablate_train_fraction,
    cross_validate,
)
from .nn import accuracy, active_backend, predict, predict_proba, train
from .pipeline import preprocess_recording
from .plotting import render_recording_svg
from .synthgen import generate_recording

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_NUMERIC = 4


def _resolve_config(args) -> PipelineConfig:
    config = load_config(args.config) if args.config else PipelineConfig()
    if args.seed is not None:
        config = config.with_seed(args.seed)
    config.validate()
    return config


def _fit_scaler(X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    mean = X.mean(axis=0)
    std = X.std(axis=0)
    std = np.where(std < 1e-12, 1.0, std)
    return mean, std


def _write_json(path, payload: dict) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


# -- stage functions (shared by subcommands and `pipeline`) -------------------

def run_synth(config: PipelineConfig, out_dir) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    digest = config.digest()
    seed = config.synth.seed
    files = []
    for i in range(config.synth.n_participants):
        recording, schedule = generate_recording(config.synth, i)
        rec_path = out / f"{storage.RECORDING_PREFIX}{recording.participant_id}.csv"
        sched_path = out / f"{storage.SCHEDULE_PREFIX}{recording.participant_id}.json"
        storage.write_recording_csv(rec_path, recording, digest, seed)
        storage.write_schedule_json(sched_path, schedule, digest, seed)
        files += [rec_path.name, sched_path.name]
    storage.write_manifest(
        out / storage.MANIFEST_NAME,
        {
            "stage": "synth",
            "config_digest": digest,
            "seed": seed,
            "n_participants": config.synth.n_participants,
            "duration_rule": "recordings span exactly the scheduled duration",
            "files": files,
        },
    )
    return out


def run_preprocess(config: PipelineConfig, in_dir, out_dir, threads: int = 1) -> Path:
    digest = config.digest()
    seed = config.preprocess.ica.seed
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rec_paths = storage.recording_paths(in_dir)
    if not rec_paths:
        raise ConfigError(f"no recordings found in {in_dir}")

    def one(rec_path: Path):
        recording = storage.read_recording_csv(rec_path)
        pid = recording.participant_id
        sched_path = rec_path.parent / f"{storage.SCHEDULE_PREFIX}{pid}.json"
        if not sched_path.exists():
            raise FileNotFoundError(f"missing schedule file: {sched_path}")
        schedule = storage.read_schedule_json(sched_path)
        processed, sidecar = preprocess_recording(recording, config.preprocess)
        return pid, schedule, processed, sidecar

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(one, rec_paths))
    else:
        results = [one(p) for p in rec_paths]

    files = []
    for pid, schedule, processed, sidecar in results:
        rec_path = out / f"{storage.RECORDING_PREFIX}{pid}.csv"
        sched_path = out / f"{storage.SCHEDULE_PREFIX}{pid}.json"
        side_path = out / f"{storage.SIDECAR_PREFIX}{pid}.json"
        storage.write_recording_csv(rec_path, processed, digest, seed)
        storage.write_schedule_json(sched_path, schedule, digest, seed)
        sidecar["config_digest"] = digest
        sidecar["seed"] = seed
        _write_json(side_path, sidecar)
        files += [rec_path.name, sched_path.name, side_path.name]
    storage.write_manifest(
        out / storage.MANIFEST_NAME,
        {"stage": "preprocess", "config_digest": digest, "seed": seed, "files": files},
    )
    return out


def run_featurize(config: PipelineConfig, in_dir, out_path) -> Path:
    cohort = storage.load_cohort(in_dir)
    dataset = build_dataset(
        cohort,
        config.features.layout,
        standardize=config.features.standardize,
        provenance={"config_digest": config.digest(), "seed": config.synth.seed},
    )
    storage.write_dataset_json(out_path, dataset)
    return Path(out_path)


def run_cv(config: PipelineConfig, dataset_path, out_path):
    dataset = storage.read_dataset_json(dataset_path)
    report = cross_validate(
        dataset,
        config.network,
        config.train,
        k=config.eval.k,
        seed=config.eval.seed,
        group_stratified=config.eval.group_stratified,
        config_digest=config.digest(),
    )
    storage.write_report_json(out_path, report)
    return report


def run_plot(recording_path, schedule_path, out_path,
             config_digest: str = "", seed: int | None = None) -> Path:
    recording = storage.read_recording_csv(recording_path)
    schedule = storage.read_schedule_json(schedule_path)
    svg = render_recording_svg(recording, schedule, config_digest, seed)
    with open(out_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(svg)
    return Path(out_path)


# -- subcommand handlers -------------------------------------------------------

def cmd_synth(args) -> int:
    config = _resolve_config(args)
    out = run_synth(config, args.out)
    print(f"wrote {config.synth.n_participants} recordings to {out}")
    return EXIT_OK


def cmd_preprocess(args) -> int:
    config = _resolve_config(args)
    out = run_preprocess(config, args.in_dir, args.out, max(1, args.threads))
    print(f"preprocessed recordings into {out}")
    return EXIT_OK


def cmd_featurize(args) -> int:
    config = _resolve_config(args)
    run_featurize(config, args.in_dir, args.out)
    print(f"wrote dataset to {args.out}")
    return EXIT_OK


def cmd_train(args) -> int:
    config = _resolve_config(args)
    dataset = storage.read_dataset_json(args.dataset)
    mean, std = _fit_scaler(dataset.X)
    net, _ = train(
        config.network, ((dataset.X - mean) / std, dataset.y), config.train
    )
    storage.write_model_json(
        args.out, net, (mean, std), config.digest(), config.train.seed
    )
    print(f"trained model on {dataset.n_samples} rows -> {args.out}")
    return EXIT_OK


def cmd_predict(args) -> int:
    net, scaler = storage.read_model_json(args.model)
    dataset = storage.read_dataset_json(args.dataset)
    X = dataset.X
    if scaler is not None:
        X = (X - scaler[0]) / scaler[1]
    labels = predict(net, X, threshold=args.threshold)
    probs = predict_proba(net, X)
    _write_json(
        args.out,
        {
            "labels": labels.tolist(),
            "probabilities": [float(p) for p in probs],
            "accuracy_vs_dataset": accuracy(labels, dataset.y),
        },
    )
    print(f"predicted {len(labels)} rows -> {args.out}")
    return EXIT_OK


def cmd_cv(args) -> int:
    config = _resolve_config(args)
    report = run_cv(config, args.dataset, args.out)
    print(f"cross-validation accuracy {report.mean_pm_std} -> {args.out}")
    return EXIT_OK


def cmd_ablate(args) -> int:
    config = _resolve_config(args)
    cohort = storage.load_cohort(args.in_dir)
    common = dict(
        spec=config.network,
        train_config=config.train,
        k=config.eval.k,
        seed=config.eval.seed,
        standardize=config.features.standardize,
    )
    if args.which == "timeframe":
        rows = ablate_timeframes(cohort, config.features.layout, **common)
    elif args.which == "featureset":
        rows = ablate_featuresets(cohort, config.features.layout, **common)
    else:
        rows = ablate_train_fraction(
            cohort, config.features.layout,
            fractions=config.eval.fractions, **common,
        )
    _write_json(
        args.out,
        {
            "ablation": args.which,
            "config_digest": config.digest(),
            "seed": config.eval.seed,
            "backend": active_backend(),
            "rows": rows,
        },
    )
    print(f"{args.which} ablation ({len(rows)} rows) -> {args.out}")
    return EXIT_OK


def cmd_plot(args) -> int:
    run_plot(args.recording, args.schedule, args.out)
    print(f"wrote plot {args.out}")
    return EXIT_OK


def cmd_pipeline(args) -> int:
    config = _resolve_config(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_config(config, out / "config.json")
    raw = run_synth(config, out / "raw")
    pre = run_preprocess(config, raw, out / "preprocessed", max(1, args.threads))
    dataset_path = run_featurize(config, pre, out / "dataset.json")
    report = run_cv(config, dataset_path, out / "report.json")
    first = storage.recording_paths(pre)[0]
    pid = first.stem[len(storage.RECORDING_PREFIX):]
    run_plot(
        first,
        pre / f"{storage.SCHEDULE_PREFIX}{pid}.json",
        out / f"figure_{pid}.svg",
        config.digest(),
        config.synth.seed,
    )
    print(f"pipeline complete in {out}: accuracy {report.mean_pm_std}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nirstress",
        description="Synthetic fNIRS stress-classification pipeline",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser, out_help: str) -> None:
        p.add_argument("--config", help="pipeline config JSON (defaults built in)")
        p.add_argument("--seed", type=int, help="override every stage seed")
        p.add_argument("--out", required=True, help=out_help)
        p.add_argument("--threads", type=int, default=1, help="worker threads")

    p = sub.add_parser("synth", help="generate the synthetic cohort")
    common(p, "output directory for recordings")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("preprocess", help="ICA denoise + band-pass recordings")
    p.add_argument("--in", dest="in_dir", required=True, help="raw recording dir")
    common(p, "output directory for processed recordings")
    p.set_defaults(func=cmd_preprocess)

    p = sub.add_parser("featurize", help="extract the window feature dataset")
    p.add_argument("--in", dest="in_dir", required=True, help="recording dir")
    common(p, "output dataset JSON path")
    p.set_defaults(func=cmd_featurize)

    p = sub.add_parser("train", help="train one model on a dataset")
    p.add_argument("--dataset", required=True)
    common(p, "output model JSON path")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="predict labels with a stored model")
    p.add_argument("--model", required=True)
    p.add_argument("--dataset", required=True)
    p.add_argument("--threshold", type=float, default=0.5)
    common(p, "output labels JSON path")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("cv", help="k-fold cross-validation report")
    p.add_argument("--dataset", required=True)
    common(p, "output report JSON path")
    p.set_defaults(func=cmd_cv)

    p = sub.add_parser("ablate", help="timeframe/featureset/fraction ablations")
    p.add_argument("--which", required=True,
                   choices=("timeframe", "featureset", "fraction"))
    p.add_argument("--in", dest="in_dir", required=True,
                   help="preprocessed recording dir")
    common(p, "output report JSON path")
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("plot", help="render a recording as SVG")
    p.add_argument("--recording", required=True)
    p.add_argument("--schedule", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_plot)

    p = sub.add_parser(
        "pipeline", help="synth -> preprocess -> featurize -> cv -> plot"
    )
    common(p, "output directory for all artifacts")
    p.set_defaults(func=cmd_pipeline)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, DimensionError, RangeError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except NumericError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
