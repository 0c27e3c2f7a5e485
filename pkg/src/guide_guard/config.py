"""Run configuration: one YAML file, every key optional, unknown keys rejected."""

from __future__ import annotations

import dataclasses
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

import yaml

from .dataset import SyntheticConfig
from .errors import ConfigError
from .nn import ArchConfig, TrainConfig
from .seqcore import BASE_PRESETS, SEQ_LEN, EncodingWeights, Mode, default_position_weights

ENV_VAR = "GG_CONFIG"


@dataclass
class EncodingBlock:
    mode: str = "zip"
    # "default" (emphasis at 18 and 5), "flat", or an explicit list
    positions: Any = "default"
    # preset name or a {A, C, G, U} mapping
    bases: Any = "u-boost"

    def weights(self, length: int = SEQ_LEN) -> EncodingWeights:
        if isinstance(self.positions, str):
            if self.positions == "default":
                pw = default_position_weights(length)
            elif self.positions == "flat":
                pw = (1.0,) * length
            else:
                raise ConfigError(f"encoding.positions: unknown preset {self.positions!r}")
        else:
            pw = tuple(self.positions)
            if len(pw) != length:
                raise ConfigError(f"encoding.positions needs {length} values, got {len(pw)}")
        if isinstance(self.bases, str):
            if self.bases not in BASE_PRESETS:
                raise ConfigError(f"encoding.bases: unknown preset {self.bases!r}")
            bw = BASE_PRESETS[self.bases]
        else:
            bw = dict(self.bases)
        try:
            mode = Mode(self.mode)
        except ValueError:
            raise ConfigError(f"encoding.mode must be 'zip' or 'concat', got {self.mode!r}")
        return EncodingWeights(pw, bw, mode)


@dataclass
class DatasetBlock:
    n_classes: int = 8
    per_gene: bool = False
    invert_efficacy: bool = False
    strict: bool = False
    length: int = SEQ_LEN


@dataclass
class TrainBlock:
    epochs: int = 30
    batch_size: int = 32
    seed: int = 0
    init: str = "he-uniform"
    lr: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    patience: int | None = None
    conv_filters: list = field(default_factory=lambda: list(ArchConfig().conv_filters))
    kernel: int = 3
    stride: int = 1
    padding: int = 0
    pool_window: int = 2
    pool_stride: int = 2
    dense_units: list = field(default_factory=lambda: list(ArchConfig().dense_units))

    def train_config(self) -> TrainConfig:
        arch = ArchConfig(
            tuple(self.conv_filters), self.kernel, self.stride, self.padding,
            self.pool_window, self.pool_stride, tuple(self.dense_units),
        )
        return TrainConfig(
            self.epochs, self.batch_size, self.seed, self.init, self.lr,
            self.beta1, self.beta2, self.eps, self.patience, arch,
        )


@dataclass
class EvalBlock:
    k: int = 20
    seed: int = 0
    jobs: int = 1


@dataclass
class SynthBlock:
    n_targets: int = 200
    guides_per_target: int = 10
    noise_sd: float = 0.05
    seed: int = 0
    base_level: float = 1.0
    mismatch_counts: list = field(default_factory=lambda: [0.4, 0.3, 0.3])
    consecutive_fraction: float = 0.5
    tile_singles: bool = False
    position_effect: list | None = None
    base_effect: dict | None = None

    def synthetic_config(self) -> SyntheticConfig:
        kw = dict(
            n_targets=self.n_targets,
            guides_per_target=self.guides_per_target,
            noise_sd=self.noise_sd,
            seed=self.seed,
            base_level=self.base_level,
            mismatch_counts=tuple(self.mismatch_counts),
            consecutive_fraction=self.consecutive_fraction,
            tile_singles=self.tile_singles,
        )
        if self.position_effect is not None:
            kw["position_effect"] = tuple(self.position_effect)
        if self.base_effect is not None:
            kw["base_effect"] = dict(self.base_effect)
        return SyntheticConfig(**kw)


@dataclass
class AnalysisBlock:
    aggregator: str = "mean"
    # which base defines "replaced": the target-frame original or the guide's substitute
    side: str = "target"


@dataclass
class PathsBlock:
    out_dir: str = "gg_out"


@dataclass
class RunConfig:
    encoding: EncodingBlock = field(default_factory=EncodingBlock)
    dataset: DatasetBlock = field(default_factory=DatasetBlock)
    train: TrainBlock = field(default_factory=TrainBlock)
    eval: EvalBlock = field(default_factory=EvalBlock)
    synth: SynthBlock = field(default_factory=SynthBlock)
    analysis: AnalysisBlock = field(default_factory=AnalysisBlock)
    paths: PathsBlock = field(default_factory=PathsBlock)

    @classmethod
    def from_mapping(cls, data: Mapping | None) -> RunConfig:
        data = dict(data or {})
        blocks = {f.name: f for f in dataclasses.fields(cls)}
        unknown = set(data) - set(blocks)
        if unknown:
            raise ConfigError(f"unknown config section(s): {', '.join(sorted(unknown))}")
        kw = {}
        for name, f in blocks.items():
            block_cls = f.default_factory().__class__
            values = data.get(name) or {}
            if not isinstance(values, Mapping):
                raise ConfigError(f"config section {name!r} must be a mapping")
            allowed = {x.name for x in dataclasses.fields(block_cls)}
            bad = set(values) - allowed
            if bad:
                raise ConfigError(f"unknown key(s) in [{name}]: {', '.join(sorted(bad))}")
            kw[name] = block_cls(**values)
        return cls(**kw)

    def to_mapping(self) -> dict:
        return dataclasses.asdict(self)

    def to_yaml(self) -> str:
        return yaml.safe_dump(self.to_mapping(), sort_keys=False)

    def encoding_weights(self) -> EncodingWeights:
        return self.encoding.weights(self.dataset.length)


def load_config(path: str | Path | None = None) -> RunConfig:
    """Read ``path``, falling back to ``$GG_CONFIG``, then built-in defaults."""
    path = path or os.environ.get(ENV_VAR)
    if not path:
        return RunConfig()
    try:
        data = yaml.safe_load(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"config {path} is not valid YAML: {exc}") from exc
    if data is not None and not isinstance(data, Mapping):
        raise ConfigError("config file must contain a mapping of sections")
    try:
        return RunConfig.from_mapping(data)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
