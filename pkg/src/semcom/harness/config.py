"""Experiment configuration: a single JSON file with strict key checking.

Unknown keys anywhere in the file are an error so typos fail fast.  Defaults
follow the standard training recipe (latent channels 32, batch 32, lr 1e-4
for the codec; the refiner block/head layout and its lr 2e-4, batch 16).
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

from ..channel import ChannelConfig
from ..refiner.networks import RefinerConfig

METHODS = ("sc-cdm", "nsf", "deepjscc-cnn", "jpeg-ldpc-qam")


class ConfigError(ValueError):
    pass


@dataclass
class DatasetConfig:
    path: str = "synthetic"
    train_size: int = 500
    eval_size: int = 100
    seed: int = 0


@dataclass
class CodecConfig:
    backbone: str = "swin"
    latent_channels: int = 32
    embed_dim: int = 48
    num_heads: int = 4
    window_sizes: tuple[int, int] = (4, 2)
    depths: tuple[int, int] = (2, 2)
    cnn_width: int = 32
    batch_size: int = 32
    lr: float = 1e-4
    epochs: int = 5
    grad_clip: float = 1.0
    warmup_steps: int = 0


@dataclass
class LdpcParams:
    n: int = 1024
    k: int = 512
    max_iters: int = 50


@dataclass
class BaselineBlock:
    jpeg_quality: int = 75
    ldpc: LdpcParams = field(default_factory=LdpcParams)
    qam_order: int = 4

    def to_baseline_config(self):
        from ..baseline import BaselineConfig
        return BaselineConfig(jpeg_quality=self.jpeg_quality, ldpc_n=self.ldpc.n,
                              ldpc_k=self.ldpc.k, ldpc_max_iters=self.ldpc.max_iters,
                              qam_order=self.qam_order)


@dataclass
class RefinerTrainConfig:
    base_dim: int = 48
    c_prime: int = 96
    heads: tuple[int, ...] = (1, 2, 4, 8)
    blocks: tuple[int, ...] = (3, 5, 6, 6)
    batch_size: int = 16
    lr: float = 2e-4
    stage_a_epochs: int = 15
    stage_b_epochs: int = 15
    timesteps: int = 4
    beta_start: float = 0.10
    beta_end: float = 0.99
    finetune_scope: str = "all"  # Stage B: fine-tune "all" of N2 or "modulation" only.
    grad_clip: float = 1.0
    warmup_steps: int = 0

    def to_refiner_config(self, patch: int = 32) -> RefinerConfig:
        return RefinerConfig(
            levels=len(self.heads), heads=tuple(self.heads), blocks=tuple(self.blocks),
            c_prime=self.c_prime, base_dim=self.base_dim, patch=patch,
            batch=self.batch_size, lr=self.lr,
            epochs=self.stage_a_epochs + self.stage_b_epochs,
            timesteps=self.timesteps, beta_start=self.beta_start, beta_end=self.beta_end)


@dataclass
class ExperimentConfig:
    dataset: DatasetConfig = field(default_factory=DatasetConfig)
    codec: CodecConfig = field(default_factory=CodecConfig)
    refiner: RefinerTrainConfig = field(default_factory=RefinerTrainConfig)
    channel: ChannelConfig = field(default_factory=ChannelConfig)
    baseline: BaselineBlock = field(default_factory=BaselineBlock)
    train_snr_range: tuple[float, float] = (1.0, 13.0)
    test_snr_set: tuple[float, ...] = (0.0, 3.0, 6.0, 9.0, 12.0, 15.0)
    methods: tuple[str, ...] = ("nsf", "sc-cdm")
    grid_snr_db: float = 15.0
    grid_images: int = 4
    seed: int = 0
    out_dir: str = "runs"

    def __post_init__(self):
        snrs = tuple(float(s) for s in self.test_snr_set)
        if len(set(snrs)) != len(snrs) or list(snrs) != sorted(snrs):
            raise ConfigError("test_snr_set values must be unique and sorted")
        object.__setattr__(self, "test_snr_set", snrs)
        lo, hi = self.train_snr_range
        if lo > hi:
            raise ConfigError(f"train_snr_range {self.train_snr_range} is inverted")
        for m in self.methods:
            if m not in METHODS:
                raise ConfigError(f"unknown method {m!r}, expected one of {METHODS}")

    def config_hash(self) -> str:
        return hashlib.sha256(canonical_json(self).encode()).hexdigest()


# Nested block types by (owner class, field name).
_NESTED_BLOCKS = {
    (ExperimentConfig, "dataset"): DatasetConfig,
    (ExperimentConfig, "codec"): CodecConfig,
    (ExperimentConfig, "refiner"): RefinerTrainConfig,
    (ExperimentConfig, "channel"): ChannelConfig,
    (ExperimentConfig, "baseline"): BaselineBlock,
    (BaselineBlock, "ldpc"): LdpcParams,
}


def _build(cls, data: dict, where: str):
    if not isinstance(data, dict):
        raise ConfigError(f"{where}: expected an object, got {type(data).__name__}")
    fields = {f.name for f in dataclasses.fields(cls)}
    unknown = set(data) - fields
    if unknown:
        raise ConfigError(f"{where}: unknown key(s) {sorted(unknown)}")
    kwargs = {}
    for name, value in data.items():
        nested = _NESTED_BLOCKS.get((cls, name))
        if nested is not None:
            kwargs[name] = _build(nested, value, f"{where}.{name}")
        elif isinstance(value, list):
            kwargs[name] = tuple(value)
        else:
            kwargs[name] = value
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def config_from_dict(data: dict) -> ExperimentConfig:
    return _build(ExperimentConfig, data, "config")


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"config file not found: {path}")
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    return config_from_dict(data)


def canonical_json(cfg: ExperimentConfig) -> str:
    return json.dumps(dataclasses.asdict(cfg), sort_keys=True, separators=(",", ":"))


def save_config(cfg: ExperimentConfig, path) -> None:
    Path(path).write_text(json.dumps(dataclasses.asdict(cfg), indent=2) + "\n")
