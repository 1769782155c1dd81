"""Pipeline configuration: validation, JSON round-trip, content digest."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, replace

from .dsp import CardiacWaveConfig
from .errors import ConfigError
from .features import FeatureLayout
from .ica import DenoiseConfig
from .nn import NetworkSpec, TrainConfig
from .pipeline import BandpassConfig, PreprocessConfig
from .synthgen import SynthConfig


@dataclass(frozen=True)
class FeatureConfig:
    layout: FeatureLayout = field(default_factory=FeatureLayout)
    standardize: bool = False


@dataclass(frozen=True)
class EvalConfig:
    k: int = 5
    seed: int = 0
    group_stratified: bool = False
    fractions: tuple[float, ...] = (1.0, 0.8, 0.6, 0.4, 0.2)

    def __post_init__(self) -> None:
        object.__setattr__(self, "fractions", tuple(self.fractions))
        if self.k < 2:
            raise ConfigError(f"eval.k must be >= 2, got {self.k}")
        for f in self.fractions:
            if not 0.0 < f <= 1.0:
                raise ConfigError(f"train fraction {f} outside (0, 1]")


@dataclass(frozen=True)
class PipelineConfig:
    synth: SynthConfig = field(default_factory=SynthConfig)
    preprocess: PreprocessConfig = field(default_factory=PreprocessConfig)
    features: FeatureConfig = field(default_factory=FeatureConfig)
    network: NetworkSpec = field(default_factory=NetworkSpec)
    train: TrainConfig = field(default_factory=TrainConfig)
    eval: EvalConfig = field(default_factory=EvalConfig)

    def validate(self) -> None:
        self.synth.validate()

    def with_seed(self, seed: int) -> "PipelineConfig":
        """Override every stage's seed with one master seed."""
        return replace(
            self,
            synth=replace(self.synth, seed=seed),
            preprocess=replace(
                self.preprocess, ica=replace(self.preprocess.ica, seed=seed)
            ),
            train=replace(self.train, seed=seed),
            eval=replace(self.eval, seed=seed),
        )

    def to_dict(self) -> dict:
        return {
            "synth": {
                "seed": self.synth.seed,
                "n_participants": self.synth.n_participants,
                "n_channels": self.synth.n_channels,
                "sampling_rate_hz": self.synth.sampling_rate_hz,
                "effect_size": self.synth.effect_size,
                "heart_rate_hz": self.synth.heart_rate_hz,
                "cardiac_amplitude": self.synth.cardiac_amplitude,
                "noise_sd": self.synth.noise_sd,
                "hemodynamic_peak_delay_s": self.synth.hemodynamic_peak_delay_s,
                "drift_amplitude": self.synth.drift_amplitude,
            },
            "preprocess": {
                "ica": {
                    "keep_fraction": self.preprocess.ica.keep_fraction,
                    "correlation_mode": self.preprocess.ica.correlation_mode,
                    "max_iterations": self.preprocess.ica.max_iterations,
                    "tolerance": self.preprocess.ica.tolerance,
                    "seed": self.preprocess.ica.seed,
                    "polarity": self.preprocess.ica.polarity,
                },
                "bandpass": {
                    "low_cut_hz": self.preprocess.bandpass.low_cut_hz,
                    "high_cut_hz": self.preprocess.bandpass.high_cut_hz,
                    "order": self.preprocess.bandpass.order,
                },
                "order_of_stages": self.preprocess.order_of_stages,
                "cardiac_wave": {
                    "amplitude": self.preprocess.cardiac_wave.amplitude,
                    "sigma_s": self.preprocess.cardiac_wave.sigma_s,
                    "support_radius_sigmas": self.preprocess.cardiac_wave.support_radius_sigmas,
                },
            },
            "features": {
                "layout": {
                    "channel_mode": self.features.layout.channel_mode,
                    "signals": list(self.features.layout.signals),
                    "sections": list(self.features.layout.sections),
                    "feature_domains": list(self.features.layout.feature_domains),
                },
                "standardize": self.features.standardize,
            },
            "network": {
                "conv_kernels": self.network.conv_kernels,
                "conv_width": self.network.conv_width,
                "dense_sizes": list(self.network.dense_sizes),
                "dropout_rates": list(self.network.dropout_rates),
                "bn_momentum": self.network.bn_momentum,
                "bn_eps": self.network.bn_eps,
            },
            "train": {
                "learning_rate": self.train.learning_rate,
                "beta1": self.train.beta1,
                "beta2": self.train.beta2,
                "epsilon": self.train.epsilon,
                "epochs": self.train.epochs,
                "batch_size": self.train.batch_size,
                "seed": self.train.seed,
                "shuffle": self.train.shuffle,
            },
            "eval": {
                "k": self.eval.k,
                "seed": self.eval.seed,
                "group_stratified": self.eval.group_stratified,
                "fractions": list(self.eval.fractions),
            },
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PipelineConfig":
        try:
            synth = SynthConfig(**d.get("synth", {}))
            pre = d.get("preprocess", {})
            preprocess = PreprocessConfig(
                ica=DenoiseConfig(**pre.get("ica", {})),
                bandpass=BandpassConfig(**pre.get("bandpass", {})),
                order_of_stages=pre.get("order_of_stages", "ica_then_filter"),
                cardiac_wave=CardiacWaveConfig(**pre.get("cardiac_wave", {})),
            )
            feat = d.get("features", {})
            layout_d = dict(feat.get("layout", {}))
            for key in ("signals", "sections", "feature_domains"):
                if key in layout_d:
                    layout_d[key] = tuple(layout_d[key])
            features = FeatureConfig(
                layout=FeatureLayout(**layout_d),
                standardize=feat.get("standardize", False),
            )
            net_d = dict(d.get("network", {}))
            for key in ("dense_sizes", "dropout_rates"):
                if key in net_d:
                    net_d[key] = tuple(net_d[key])
            network = NetworkSpec(**net_d)
            train = TrainConfig(**d.get("train", {}))
            eval_d = dict(d.get("eval", {}))
            if "fractions" in eval_d:
                eval_d["fractions"] = tuple(eval_d["fractions"])
            eval_cfg = EvalConfig(**eval_d)
        except TypeError as exc:
            raise ConfigError(f"bad configuration: {exc}") from exc
        return cls(synth, preprocess, features, network, train, eval_cfg)

    def digest(self) -> str:
        """Content hash; identical configs always produce identical output."""
        canon = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()[:16]


def load_config(path) -> PipelineConfig:
    with open(path, encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    cfg = PipelineConfig.from_dict(data)
    cfg.validate()
    return cfg


def save_config(config: PipelineConfig, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(config.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
