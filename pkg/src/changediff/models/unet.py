"""Noise-prediction U-Net with timestep conditioning and feature taps."""

from __future__ import annotations

import math

import torch
import torch.nn.functional as F
from torch import Tensor, nn

from .attention import SelfAttention2d


def timestep_embedding(t: Tensor, dim: int, max_period: float = 10000.0) -> Tensor:
    """Sinusoidal embedding of integer timesteps, shape (B, dim)."""
    half = dim // 2
    freqs = torch.exp(
        -math.log(max_period) * torch.arange(half, dtype=torch.float32, device=t.device) / half
    )
    args = t.float()[:, None] * freqs[None, :]
    emb = torch.cat([torch.cos(args), torch.sin(args)], dim=-1)
    if dim % 2 == 1:
        emb = F.pad(emb, (0, 1))
    return emb


def _norm(channels: int, max_groups: int = 32) -> nn.GroupNorm:
    return nn.GroupNorm(math.gcd(channels, max_groups), channels)


class ResidualBlock(nn.Module):
    """Two 3x3 convs with GroupNorm/SiLU; the time embedding is added
    channel-wise between them."""

    def __init__(self, in_ch: int, out_ch: int, time_dim: int, dropout: float = 0.0,
                 norm_groups: int = 32):
        super().__init__()
        self.norm1 = _norm(in_ch, norm_groups)
        self.conv1 = nn.Conv2d(in_ch, out_ch, 3, padding=1)
        self.time_proj = nn.Linear(time_dim, out_ch)
        self.norm2 = _norm(out_ch, norm_groups)
        self.dropout = nn.Dropout(dropout)
        self.conv2 = nn.Conv2d(out_ch, out_ch, 3, padding=1)
        self.skip = nn.Conv2d(in_ch, out_ch, 1) if in_ch != out_ch else nn.Identity()

    def forward(self, x: Tensor, temb: Tensor) -> Tensor:
        h = self.conv1(F.silu(self.norm1(x)))
        h = h + self.time_proj(F.silu(temb))[:, :, None, None]
        h = self.conv2(self.dropout(F.silu(self.norm2(h))))
        return h + self.skip(x)


class Downsample(nn.Module):
    def __init__(self, channels: int):
        super().__init__()
        self.conv = nn.Conv2d(channels, channels, 3, stride=2, padding=1)

    def forward(self, x: Tensor) -> Tensor:
        return self.conv(x)


class Upsample(nn.Module):
    def __init__(self, channels: int):
        super().__init__()
        self.conv = nn.Conv2d(channels, channels, 3, padding=1)

    def forward(self, x: Tensor) -> Tensor:
        return self.conv(F.interpolate(x, scale_factor=2, mode="nearest"))


class DenoisingUNet(nn.Module):
    """Predicts the injected noise from (x_t, t); optionally conditioned on
    extra channels concatenated to the input.

    ``forward(..., return_features=True)`` additionally returns the decoder
    activations, one per resolution level ordered coarsest first. Their
    channel counts are exposed as :attr:`pyramid_channels`, and spatial
    sizes follow input_size / 2**level (so input height/width must be
    divisible by ``2 ** (len(channel_mults) - 1)``).
    """

    def __init__(
        self,
        in_channels: int = 3,
        base_channels: int = 128,
        channel_mults: tuple[int, ...] = (1, 2, 4, 8, 8),
        num_res_blocks: int = 2,
        attention_levels: tuple[int, ...] = (4,),
        cond_channels: int = 0,
        dropout: float = 0.0,
        norm_groups: int = 32,
        attention_heads: int = 1,
    ):
        super().__init__()
        self.in_channels = in_channels
        self.cond_channels = cond_channels
        self.num_levels = len(channel_mults)
        self.downsample_factor = 2 ** (self.num_levels - 1)
        bad = [l for l in attention_levels if not 0 <= l < self.num_levels]
        if bad:
            raise ValueError(f"attention_levels {bad} out of range for {self.num_levels} levels")

        time_dim = base_channels * 4
        self.time_mlp = nn.Sequential(
            nn.Linear(base_channels, time_dim),
            nn.SiLU(),
            nn.Linear(time_dim, time_dim),
        )
        self.base_channels = base_channels

        def res(in_ch, out_ch):
            return ResidualBlock(in_ch, out_ch, time_dim, dropout, norm_groups)

        def attn(ch):
            return SelfAttention2d(ch, attention_heads, norm_groups)

        self.stem = nn.Conv2d(in_channels + cond_channels, base_channels, 3, padding=1)

        # Encoder; skip_channels records what each stored activation carries.
        self.down_blocks = nn.ModuleList()
        self.down_attns = nn.ModuleList()
        self.downsamples = nn.ModuleList()
        skip_channels = [base_channels]
        ch = base_channels
        for level, mult in enumerate(channel_mults):
            out_ch = base_channels * mult
            for _ in range(num_res_blocks):
                self.down_blocks.append(res(ch, out_ch))
                self.down_attns.append(attn(out_ch) if level in attention_levels else nn.Identity())
                ch = out_ch
                skip_channels.append(ch)
            if level < self.num_levels - 1:
                self.downsamples.append(Downsample(ch))
                skip_channels.append(ch)

        self.mid_block1 = res(ch, ch)
        self.mid_attn = attn(ch)
        self.mid_block2 = res(ch, ch)

        # Decoder consumes the skip stack in reverse.
        self.up_blocks = nn.ModuleList()
        self.up_attns = nn.ModuleList()
        self.upsamples = nn.ModuleList()
        for level in reversed(range(self.num_levels)):
            out_ch = base_channels * channel_mults[level]
            for _ in range(num_res_blocks + 1):
                self.up_blocks.append(res(ch + skip_channels.pop(), out_ch))
                self.up_attns.append(attn(out_ch) if level in attention_levels else nn.Identity())
                ch = out_ch
            if level > 0:
                self.upsamples.append(Upsample(ch))
        assert not skip_channels

        self.out_norm = _norm(ch, norm_groups)
        self.out_conv = nn.Conv2d(ch, in_channels, 3, padding=1)

        self.num_res_blocks = num_res_blocks
        self.channel_mults = tuple(channel_mults)
        # Decoder taps, coarsest level first.
        self.pyramid_channels = tuple(
            base_channels * m for m in reversed(channel_mults)
        )

    def forward(
        self,
        x: Tensor,
        t: Tensor,
        cond: Tensor | None = None,
        return_features: bool = False,
    ):
        if (cond is not None) != (self.cond_channels > 0):
            raise ValueError(
                f"model built with cond_channels={self.cond_channels} but "
                f"cond was {'supplied' if cond is not None else 'omitted'}"
            )
        if x.shape[-1] % self.downsample_factor or x.shape[-2] % self.downsample_factor:
            raise ValueError(
                f"input size {tuple(x.shape[-2:])} not divisible by {self.downsample_factor}"
            )
        if cond is not None:
            x = torch.cat([x, cond], dim=1)

        temb = self.time_mlp(timestep_embedding(t, self.base_channels))

        h = self.stem(x)
        skips = [h]
        block_i = 0
        down_i = 0
        for level in range(self.num_levels):
            for _ in range(self.num_res_blocks):
                h = self.down_attns[block_i](self.down_blocks[block_i](h, temb))
                skips.append(h)
                block_i += 1
            if level < self.num_levels - 1:
                h = self.downsamples[down_i](h)
                skips.append(h)
                down_i += 1

        h = self.mid_block2(self.mid_attn(self.mid_block1(h, temb)), temb)

        features = []
        block_i = 0
        up_i = 0
        for level in reversed(range(self.num_levels)):
            for _ in range(self.num_res_blocks + 1):
                h = torch.cat([h, skips.pop()], dim=1)
                h = self.up_attns[block_i](self.up_blocks[block_i](h, temb))
                block_i += 1
            features.append(h)
            if level > 0:
                h = self.upsamples[up_i](h)
                up_i += 1

        eps = self.out_conv(F.silu(self.out_norm(h)))
        if return_features:
            return eps, features
        return eps
