"""Change classification head over multi-timestep feature pyramids."""

from __future__ import annotations

import torch
import torch.nn.functional as F
from torch import Tensor, nn

from .attention import ChannelSpatialAttention

FeaturePyramids = list[list[Tensor]]  # per noise timestep, per scale (coarse first)


class ChangeHead(nn.Module):
    """Decodes a change map from two stacks of denoiser feature pyramids.

    Both image streams pass through shared per-scale merge blocks (Siamese),
    so the head sees only the absolute feature difference; the decoder then
    refines coarse-to-fine with attention-gated fusion and upsampling.
    Swapping the two inputs leaves the output unchanged by construction.
    """

    def __init__(
        self,
        pyramid_channels: tuple[int, ...],
        num_feature_timesteps: int,
        num_classes: int = 2,
        attention_reduction: int = 2,
        classifier_channels: int = 64,
    ):
        super().__init__()
        if num_feature_timesteps < 1:
            raise ValueError("need at least one feature timestep")
        self.pyramid_channels = tuple(pyramid_channels)
        self.num_feature_timesteps = num_feature_timesteps
        self.num_classes = num_classes

        # Merges the timestep stack back to the scale's channel width.
        self.merge = nn.ModuleList(
            nn.Sequential(
                nn.Conv2d(ch * num_feature_timesteps, ch, 1),
                nn.ReLU(inplace=True),
                nn.Conv2d(ch, ch, 3, padding=1),
                nn.ReLU(inplace=True),
            )
            for ch in self.pyramid_channels
        )
        # Carries the running difference map to the next (finer) scale.
        self.fuse = nn.ModuleList(
            nn.Sequential(
                nn.Conv2d(ch, ch_next, 3, padding=1),
                nn.ReLU(inplace=True),
                ChannelSpatialAttention(ch_next, attention_reduction),
            )
            for ch, ch_next in zip(self.pyramid_channels[:-1], self.pyramid_channels[1:])
        )
        last = self.pyramid_channels[-1]
        self.classifier = nn.Sequential(
            nn.Conv2d(last, classifier_channels, 3, padding=1),
            nn.ReLU(inplace=True),
            nn.Conv2d(classifier_channels, num_classes, 3, padding=1),
        )

    def _stack_timesteps(self, pyramids: FeaturePyramids, scale: int) -> Tensor:
        if len(pyramids) != self.num_feature_timesteps:
            raise ValueError(
                f"expected {self.num_feature_timesteps} pyramids, got {len(pyramids)}"
            )
        return torch.cat([p[scale] for p in pyramids], dim=1)

    def forward(self, feats_a: FeaturePyramids, feats_b: FeaturePyramids) -> Tensor:
        carry = None
        for scale in range(len(self.pyramid_channels)):
            fa = self.merge[scale](self._stack_timesteps(feats_a, scale))
            fb = self.merge[scale](self._stack_timesteps(feats_b, scale))
            diff = torch.abs(fa - fb)
            if carry is not None:
                diff = diff + carry
            if scale < len(self.pyramid_channels) - 1:
                target = feats_a[0][scale + 1].shape[-2:]
                carry = F.interpolate(
                    self.fuse[scale](diff), size=target, mode="bilinear", align_corners=False
                )
        return self.classifier(diff)
