"""Dataclass configuration tree with YAML round-tripping."""

from __future__ import annotations

import dataclasses
import types
import typing
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .schedules import DiffusionSchedule, cosine_betas, linear_betas


def _coerce(tp, value):
    if dataclasses.is_dataclass(tp) and isinstance(value, dict):
        return config_from_dict(tp, value)
    origin = typing.get_origin(tp)
    if origin is tuple and isinstance(value, (list, tuple)):
        return tuple(value)
    if origin is typing.Union or origin is types.UnionType:
        if value is None:
            return None
        for arg in typing.get_args(tp):
            if arg is type(None):
                continue
            return _coerce(arg, value)
    return value


def config_from_dict(cls, data: dict):
    """Build a (possibly nested) config dataclass, rejecting unknown keys."""
    hints = typing.get_type_hints(cls)
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = set(data) - names
    if unknown:
        raise ValueError(f"unknown {cls.__name__} keys: {sorted(unknown)}")
    kwargs = {k: _coerce(hints[k], v) for k, v in data.items()}
    return cls(**kwargs)


def _plain(obj):
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    return obj


def config_to_dict(cfg) -> dict:
    return _plain(dataclasses.asdict(cfg))


@dataclass
class ScheduleConfig:
    name: str = "linear"
    timesteps: int = 1000
    beta_start: float = 1e-4
    beta_end: float = 2e-2
    cosine_s: float = 0.008

    def make(self) -> DiffusionSchedule:
        if self.name == "linear":
            betas = linear_betas(self.timesteps, self.beta_start, self.beta_end)
        elif self.name == "cosine":
            betas = cosine_betas(self.timesteps, self.cosine_s)
        else:
            raise ValueError(f"unknown schedule name {self.name!r}")
        return DiffusionSchedule(betas)


@dataclass
class UNetConfig:
    in_channels: int = 3
    cond_channels: int = 0
    base_channels: int = 128
    channel_mults: tuple[int, ...] = (1, 2, 4, 8, 8)
    num_res_blocks: int = 2
    attention_levels: tuple[int, ...] = (4,)
    dropout: float = 0.0
    norm_groups: int = 32
    attention_heads: int = 1


@dataclass
class HeadConfig:
    # Noise timesteps whose denoiser features feed the head.
    feature_timesteps: tuple[int, ...] = (50, 100, 400)
    # Pyramid levels to use, coarsest = 0; None selects every level.
    scales: tuple[int, ...] | None = None
    num_classes: int = 2
    attention_reduction: int = 2
    classifier_channels: int = 64


@dataclass
class TrainingConfig:
    steps: int = 10000
    batch_size: int = 8
    lr: float = 1e-4
    weight_decay: float = 0.0
    warmup_steps: int = 100
    min_lr_scale: float = 0.01
    grad_clip: float = 1.0
    ema_decay: float = 0.999
    log_every: int = 100


@dataclass
class DataConfig:
    root: str | None = None
    image_size: int = 256
    channels: int = 3
    # Used when no folder root is given.
    synthetic_train: int = 200
    synthetic_val: int = 32
    augment: bool = True


@dataclass
class ExperimentConfig:
    seed: int = 0
    loss_type: str = "l2"
    schedule: ScheduleConfig = field(default_factory=ScheduleConfig)
    unet: UNetConfig = field(default_factory=UNetConfig)
    head: HeadConfig = field(default_factory=HeadConfig)
    pretrain: TrainingConfig = field(default_factory=TrainingConfig)
    head_train: TrainingConfig = field(default_factory=TrainingConfig)
    data: DataConfig = field(default_factory=DataConfig)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        return config_from_dict(cls, data)

    def to_dict(self) -> dict:
        return config_to_dict(self)

    @classmethod
    def load(cls, path: str | Path) -> "ExperimentConfig":
        with open(path, "r", encoding="utf-8") as f:
            data = yaml.safe_load(f) or {}
        return cls.from_dict(data)

    def save(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as f:
            yaml.safe_dump(self.to_dict(), f, sort_keys=False)
