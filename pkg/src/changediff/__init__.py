"""Bi-temporal change detection from denoising-diffusion features."""

from .config import (
    DataConfig,
    ExperimentConfig,
    HeadConfig,
    ScheduleConfig,
    TrainingConfig,
    UNetConfig,
)
from .data import (
    ChangePairFolder,
    PairAugment,
    SyntheticChangePairs,
    synthesize_pair,
    write_synthetic_dataset,
)
from .ddim import DDIMSampler, uniform_timestep_subsequence
from .diffusion import GaussianDiffusion
from .metrics import ConfusionMatrix
from .models import (
    ChangeHead,
    ChannelSpatialAttention,
    DenoisingUNet,
    SelfAttention2d,
)
from .optim import EMA, WarmupCosineLR, warmup_cosine_scale
from .pipeline import (
    ChangeDetector,
    build_diffusion,
    build_unet,
    load_detector_checkpoint,
    load_diffusion_checkpoint,
    save_detector_checkpoint,
    save_diffusion_checkpoint,
)
from .predict import predict_files, predict_scene
from .schedules import DiffusionSchedule, cosine_betas, linear_betas, make_betas
from .tiling import (
    TileBox,
    compute_tile_boxes,
    extract_tile,
    pad_to_multiple,
    stitch_tiles,
)
from .train import (
    ImagePool,
    diffusion_val_loss,
    evaluate_detector,
    pretrain_diffusion,
    train_change_head,
)

__version__ = "0.1.0"

__all__ = [
    "ChangeDetector",
    "ChangeHead",
    "ChangePairFolder",
    "ChannelSpatialAttention",
    "ConfusionMatrix",
    "DDIMSampler",
    "DataConfig",
    "DenoisingUNet",
    "DiffusionSchedule",
    "EMA",
    "ExperimentConfig",
    "GaussianDiffusion",
    "HeadConfig",
    "ImagePool",
    "PairAugment",
    "ScheduleConfig",
    "SelfAttention2d",
    "SyntheticChangePairs",
    "TileBox",
    "TrainingConfig",
    "UNetConfig",
    "WarmupCosineLR",
    "build_diffusion",
    "build_unet",
    "compute_tile_boxes",
    "cosine_betas",
    "diffusion_val_loss",
    "evaluate_detector",
    "extract_tile",
    "linear_betas",
    "load_detector_checkpoint",
    "load_diffusion_checkpoint",
    "make_betas",
    "pad_to_multiple",
    "predict_files",
    "predict_scene",
    "pretrain_diffusion",
    "save_detector_checkpoint",
    "save_diffusion_checkpoint",
    "stitch_tiles",
    "synthesize_pair",
    "train_change_head",
    "uniform_timestep_subsequence",
    "warmup_cosine_scale",
    "write_synthetic_dataset",
]
