"""Denoiser stubs shared across test modules."""

from __future__ import annotations

import torch
from torch import nn


class ConstantEps(nn.Module):
    """Always predicts the same noise tensor, whatever the input."""

    def __init__(self, eps: torch.Tensor):
        super().__init__()
        self.register_buffer("eps", eps)

    def forward(self, x, t, cond=None):
        return self.eps.expand_as(x)


class ZeroEps(nn.Module):
    def forward(self, x, t, cond=None):
        return torch.zeros_like(x)


class RecordingEps(nn.Module):
    """Zero prediction that records every (t, cond) it sees."""

    def __init__(self):
        super().__init__()
        self.calls = []

    def forward(self, x, t, cond=None):
        self.calls.append(
            (t.detach().clone(), None if cond is None else cond.detach().clone())
        )
        return torch.zeros_like(x)
