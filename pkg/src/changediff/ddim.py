"""Accelerated reverse sampling over a sub-sequence of timesteps."""

from __future__ import annotations

import numpy as np
import torch
from torch import Tensor

from .diffusion import GaussianDiffusion


def uniform_timestep_subsequence(num_train_steps: int, num_sample_steps: int) -> np.ndarray:
    """Ascending, duplicate-free timestep indices spread over the full range.

    Always contains the final training step ``num_train_steps - 1`` so the
    chain starts from the maximum noise level.
    """
    if num_sample_steps < 1:
        raise ValueError(f"num_sample_steps must be >= 1, got {num_sample_steps}")
    if num_sample_steps >= num_train_steps:
        return np.arange(num_train_steps, dtype=np.int64)
    # Anchor the grid at the final step so it survives a budget of one.
    taus = np.linspace(num_train_steps - 1, 0, num_sample_steps)
    return np.unique(taus.round().astype(np.int64))


class DDIMSampler:
    """Non-Markovian sampler sharing the marginals of a trained diffusion.

    ``eta`` interpolates between a fully deterministic update (0.0) and the
    ancestral-process noise level (1.0). Sampling visits only the timesteps
    in ``taus``; with the full sequence and ``eta=1.0`` each step reproduces
    the ancestral step of the wrapped :class:`GaussianDiffusion`.
    """

    def __init__(
        self,
        diffusion: GaussianDiffusion,
        num_steps: int | None = None,
        eta: float = 0.0,
        taus: np.ndarray | None = None,
    ):
        if (num_steps is None) == (taus is None):
            raise ValueError("pass exactly one of num_steps or taus")
        if taus is None:
            taus = uniform_timestep_subsequence(diffusion.num_timesteps, num_steps)
        taus = np.asarray(taus, dtype=np.int64)
        if taus.ndim != 1 or taus.size < 1:
            raise ValueError("taus must be a non-empty 1-D index array")
        if np.any(np.diff(taus) <= 0):
            raise ValueError("taus must be strictly ascending")
        if taus[0] < 0 or taus[-1] >= diffusion.num_timesteps:
            raise ValueError("taus out of range for the diffusion schedule")
        if eta < 0.0:
            raise ValueError(f"eta must be >= 0, got {eta}")

        self.diffusion = diffusion
        self.taus = taus
        self.eta = float(eta)

    def _step_constants(self, i: int) -> tuple[float, float, float]:
        """(alpha_bar, alpha_bar_prev, sigma) for subsequence position i."""
        ab = float(self.diffusion.alpha_bars[self.taus[i]])
        ab_prev = 1.0 if i == 0 else float(self.diffusion.alpha_bars[self.taus[i - 1]])
        sigma = self.eta * (
            (1.0 - ab_prev) / (1.0 - ab) * (1.0 - ab / ab_prev)
        ) ** 0.5
        return ab, ab_prev, sigma

    @torch.no_grad()
    def step(
        self,
        x_t: Tensor,
        i: int,
        cond: Tensor | None = None,
        clip_denoised: bool = True,
        generator: torch.Generator | None = None,
    ) -> Tensor:
        """Move from timestep taus[i] to taus[i-1] (to x_0 when i == 0)."""
        d = self.diffusion
        ab, ab_prev, sigma = self._step_constants(i)
        t = torch.full((x_t.shape[0],), int(self.taus[i]), dtype=torch.long, device=x_t.device)

        eps = d._call_model(x_t, t, cond)
        x0 = d.predict_x0_from_eps(x_t, t, eps)
        if clip_denoised:
            x0 = x0.clamp(-1.0, 1.0)
            # Keep eps consistent with the clamped signal estimate.
            eps = (x_t - ab**0.5 * x0) / (1.0 - ab) ** 0.5

        dir_coef = max(1.0 - ab_prev - sigma**2, 0.0) ** 0.5
        # Noise is drawn every step (and zeroed when sigma == 0) so a shared
        # generator stays aligned with the ancestral sampler's draw sequence.
        noise = torch.empty_like(x_t).normal_(generator=generator)
        return ab_prev**0.5 * x0 + dir_coef * eps + sigma * noise

    @torch.no_grad()
    def sample(
        self,
        shape: tuple[int, ...],
        cond: Tensor | None = None,
        clip_denoised: bool = True,
        generator: torch.Generator | None = None,
        return_trajectory: bool = False,
    ):
        device = self.diffusion.betas.device
        x = torch.empty(shape, device=device).normal_(generator=generator)
        trajectory = [x]
        for i in reversed(range(len(self.taus))):
            x = self.step(x, i, cond, clip_denoised, generator)
            if return_trajectory:
                trajectory.append(x)
        if return_trajectory:
            return x, trajectory
        return x
