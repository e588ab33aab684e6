"""Model assembly, the end-to-end change detector, and checkpoint IO."""

from __future__ import annotations

from pathlib import Path

import torch
import torch.nn.functional as F
from torch import Tensor, nn

from .config import (
    HeadConfig,
    ScheduleConfig,
    UNetConfig,
    config_from_dict,
    config_to_dict,
)
from .diffusion import GaussianDiffusion
from .models import ChangeHead, DenoisingUNet
from .optim import EMA

CHECKPOINT_VERSION = 1


def build_unet(cfg: UNetConfig) -> DenoisingUNet:
    return DenoisingUNet(
        in_channels=cfg.in_channels,
        base_channels=cfg.base_channels,
        channel_mults=cfg.channel_mults,
        num_res_blocks=cfg.num_res_blocks,
        attention_levels=cfg.attention_levels,
        cond_channels=cfg.cond_channels,
        dropout=cfg.dropout,
        norm_groups=cfg.norm_groups,
        attention_heads=cfg.attention_heads,
    )


def build_diffusion(
    schedule_cfg: ScheduleConfig, unet_cfg: UNetConfig, loss_type: str = "l2"
) -> GaussianDiffusion:
    return GaussianDiffusion(build_unet(unet_cfg), schedule_cfg.make(), loss_type)


class ChangeDetector(nn.Module):
    """Frozen diffusion backbone + trainable change head.

    Feature extraction noises each input to the configured timesteps,
    runs the denoiser, and hands the decoder pyramids (optionally a
    subset of scales) to the Siamese head. Output logits are resized to
    the input resolution.
    """

    def __init__(
        self,
        diffusion: GaussianDiffusion,
        head_cfg: HeadConfig,
        freeze_backbone: bool = True,
    ):
        super().__init__()
        unet = diffusion.model
        if not isinstance(unet, DenoisingUNet):
            raise TypeError("ChangeDetector requires a DenoisingUNet backbone")
        for t in head_cfg.feature_timesteps:
            if not 0 <= t < diffusion.num_timesteps:
                raise ValueError(
                    f"feature timestep {t} outside schedule of {diffusion.num_timesteps}"
                )
        num_scales = len(unet.pyramid_channels)
        scales = head_cfg.scales if head_cfg.scales is not None else tuple(range(num_scales))
        bad = [s for s in scales if not 0 <= s < num_scales]
        if bad:
            raise ValueError(f"head scales {bad} out of range for {num_scales} pyramid levels")

        self.diffusion = diffusion
        self.feature_timesteps = tuple(int(t) for t in head_cfg.feature_timesteps)
        self.scales = tuple(sorted(scales))
        self.head = ChangeHead(
            pyramid_channels=tuple(unet.pyramid_channels[s] for s in self.scales),
            num_feature_timesteps=len(self.feature_timesteps),
            num_classes=head_cfg.num_classes,
            attention_reduction=head_cfg.attention_reduction,
            classifier_channels=head_cfg.classifier_channels,
        )
        self.frozen_backbone = freeze_backbone
        if freeze_backbone:
            for p in self.diffusion.parameters():
                p.requires_grad_(False)
        self.diffusion.eval()

    def train(self, mode: bool = True) -> "ChangeDetector":
        super().train(mode)
        if self.frozen_backbone:
            self.diffusion.eval()
        return self

    @torch.no_grad()
    def extract_features(
        self, image: Tensor, generator: torch.Generator | None = None
    ) -> list[list[Tensor]]:
        """One decoder pyramid per configured noise timestep."""
        pyramids = []
        for t in self.feature_timesteps:
            tt = torch.full((image.shape[0],), t, dtype=torch.long, device=image.device)
            noise = torch.empty_like(image).normal_(generator=generator)
            x_t = self.diffusion.q_sample(image, tt, noise)
            _, feats = self.diffusion.model(x_t, tt, return_features=True)
            pyramids.append([feats[s] for s in self.scales])
        return pyramids

    def forward(
        self,
        image_a: Tensor,
        image_b: Tensor,
        generator: torch.Generator | None = None,
    ) -> Tensor:
        if image_a.shape != image_b.shape:
            raise ValueError(f"shape mismatch: {tuple(image_a.shape)} vs {tuple(image_b.shape)}")
        feats_a = self.extract_features(image_a, generator)
        feats_b = self.extract_features(image_b, generator)
        logits = self.head(feats_a, feats_b)
        if logits.shape[-2:] != image_a.shape[-2:]:
            logits = F.interpolate(
                logits, size=image_a.shape[-2:], mode="bilinear", align_corners=False
            )
        return logits

    @torch.no_grad()
    def predict(
        self,
        image_a: Tensor,
        image_b: Tensor,
        generator: torch.Generator | None = None,
    ) -> Tensor:
        """Hard class map, shape (B, H, W)."""
        return self.forward(image_a, image_b, generator).argmax(dim=1)


# ---- checkpoints ---------------------------------------------------------


def save_diffusion_checkpoint(
    path: str | Path,
    diffusion: GaussianDiffusion,
    unet_cfg: UNetConfig,
    schedule_cfg: ScheduleConfig,
    ema: EMA | None = None,
    step: int = 0,
) -> None:
    payload = {
        "kind": "diffusion",
        "version": CHECKPOINT_VERSION,
        "unet": config_to_dict(unet_cfg),
        "schedule": config_to_dict(schedule_cfg),
        "loss_type": diffusion.loss_type,
        "model_state": diffusion.model.state_dict(),
        "ema_state": ema.state_dict() if ema is not None else None,
        "step": step,
    }
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    torch.save(payload, path)


def _require_kind(payload: dict, kind: str, path) -> None:
    got = payload.get("kind")
    if got != kind:
        raise ValueError(f"{path}: expected a {kind!r} checkpoint, found {got!r}")


def load_diffusion_checkpoint(
    path: str | Path, device: str = "cpu", use_ema: bool = True
) -> tuple[GaussianDiffusion, dict]:
    payload = torch.load(path, map_location=device, weights_only=True)
    _require_kind(payload, "diffusion", path)
    unet_cfg = config_from_dict(UNetConfig, payload["unet"])
    schedule_cfg = config_from_dict(ScheduleConfig, payload["schedule"])
    diffusion = build_diffusion(schedule_cfg, unet_cfg, payload["loss_type"]).to(device)
    diffusion.model.load_state_dict(payload["model_state"])
    if use_ema and payload.get("ema_state") is not None:
        ema = EMA(diffusion.model, decay=payload["ema_state"]["decay"])
        ema.load_state_dict(payload["ema_state"])
        ema.copy_to(diffusion.model)
    diffusion.eval()
    return diffusion, payload


def save_detector_checkpoint(
    path: str | Path,
    detector: ChangeDetector,
    unet_cfg: UNetConfig,
    schedule_cfg: ScheduleConfig,
    head_cfg: HeadConfig,
    step: int = 0,
) -> None:
    payload = {
        "kind": "detector",
        "version": CHECKPOINT_VERSION,
        "unet": config_to_dict(unet_cfg),
        "schedule": config_to_dict(schedule_cfg),
        "head": config_to_dict(head_cfg),
        "loss_type": detector.diffusion.loss_type,
        "backbone_state": detector.diffusion.model.state_dict(),
        "head_state": detector.head.state_dict(),
        "step": step,
    }
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    torch.save(payload, path)


def load_detector_checkpoint(
    path: str | Path, device: str = "cpu"
) -> tuple[ChangeDetector, dict]:
    payload = torch.load(path, map_location=device, weights_only=True)
    _require_kind(payload, "detector", path)
    unet_cfg = config_from_dict(UNetConfig, payload["unet"])
    schedule_cfg = config_from_dict(ScheduleConfig, payload["schedule"])
    head_cfg = config_from_dict(HeadConfig, payload["head"])
    diffusion = build_diffusion(schedule_cfg, unet_cfg, payload["loss_type"]).to(device)
    diffusion.model.load_state_dict(payload["backbone_state"])
    detector = ChangeDetector(diffusion, head_cfg).to(device)
    detector.head.load_state_dict(payload["head_state"])
    detector.eval()
    return detector, payload
