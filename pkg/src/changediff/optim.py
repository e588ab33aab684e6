"""Learning-rate scheduling and weight averaging."""

from __future__ import annotations

import math

import torch
from torch import nn
from torch.optim.lr_scheduler import LambdaLR


def warmup_cosine_scale(
    step: int, total_steps: int, warmup_steps: int, min_scale: float = 0.0
) -> float:
    """LR multiplier: linear ramp to 1 over the warmup, then a half-cosine
    decay to ``min_scale`` at ``total_steps``. Pure function of the step so
    tests and resumed runs can evaluate it directly."""
    if total_steps < 1:
        raise ValueError("total_steps must be >= 1")
    if not 0 <= warmup_steps <= total_steps:
        raise ValueError("need 0 <= warmup_steps <= total_steps")
    if step < warmup_steps:
        return (step + 1) / warmup_steps
    span = total_steps - warmup_steps
    if span == 0:
        return min_scale
    progress = min((step - warmup_steps) / span, 1.0)
    return min_scale + 0.5 * (1.0 - min_scale) * (1.0 + math.cos(math.pi * progress))


class WarmupCosineLR(LambdaLR):
    """Per-step warmup + cosine decay wrapper around LambdaLR."""

    def __init__(
        self,
        optimizer: torch.optim.Optimizer,
        total_steps: int,
        warmup_steps: int,
        min_scale: float = 0.0,
        last_epoch: int = -1,
    ):
        self.total_steps = total_steps
        self.warmup_steps = warmup_steps
        self.min_scale = min_scale
        super().__init__(
            optimizer,
            lr_lambda=lambda step: warmup_cosine_scale(
                step, total_steps, warmup_steps, min_scale
            ),
            last_epoch=last_epoch,
        )


class EMA:
    """Exponential moving average of a module's trainable parameters."""

    def __init__(self, model: nn.Module, decay: float = 0.999):
        if not 0.0 <= decay < 1.0:
            raise ValueError(f"decay must be in [0, 1), got {decay}")
        self.decay = decay
        self.shadow = {
            name: p.detach().clone()
            for name, p in model.named_parameters()
            if p.requires_grad
        }

    @torch.no_grad()
    def update(self, model: nn.Module) -> None:
        for name, p in model.named_parameters():
            if name in self.shadow:
                self.shadow[name].mul_(self.decay).add_(p.detach(), alpha=1.0 - self.decay)

    @torch.no_grad()
    def copy_to(self, model: nn.Module) -> None:
        for name, p in model.named_parameters():
            if name in self.shadow:
                p.copy_(self.shadow[name])

    def state_dict(self) -> dict:
        return {"decay": self.decay, "shadow": self.shadow}

    def load_state_dict(self, state: dict) -> None:
        self.decay = state["decay"]
        self.shadow = {k: v.clone() for k, v in state["shadow"].items()}
