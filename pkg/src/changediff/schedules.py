"""Variance schedules for the forward noising process.

All arrays are float64 numpy, shape (T,), indexed by timestep t in [0, T).
Torch modules convert to float32 buffers at construction time.
"""

from __future__ import annotations

import math

import numpy as np


def linear_betas(timesteps: int, beta_start: float = 1e-4, beta_end: float = 2e-2) -> np.ndarray:
    """Linearly spaced betas from ``beta_start`` to ``beta_end``."""
    if timesteps < 1:
        raise ValueError(f"timesteps must be >= 1, got {timesteps}")
    return np.linspace(beta_start, beta_end, timesteps, dtype=np.float64)


def cosine_betas(timesteps: int, s: float = 0.008, max_beta: float = 0.999) -> np.ndarray:
    """Betas derived from a squared-cosine cumulative signal level.

    alpha_bar(u) = cos((u + s) / (1 + s) * pi/2)^2 evaluated on a grid of
    T+1 points, normalized so alpha_bar(0) = 1; betas are the step ratios,
    clipped to ``max_beta`` to keep the last steps well conditioned.
    """
    if timesteps < 1:
        raise ValueError(f"timesteps must be >= 1, got {timesteps}")
    u = np.linspace(0.0, 1.0, timesteps + 1, dtype=np.float64)
    f = np.cos((u + s) / (1.0 + s) * math.pi / 2.0) ** 2
    alpha_bars = f / f[0]
    betas = 1.0 - alpha_bars[1:] / alpha_bars[:-1]
    return np.clip(betas, 0.0, max_beta)


def make_betas(name: str, timesteps: int, **kwargs) -> np.ndarray:
    if name == "linear":
        return linear_betas(timesteps, **kwargs)
    if name == "cosine":
        return cosine_betas(timesteps, **kwargs)
    raise ValueError(f"unknown schedule '{name}' (expected 'linear' or 'cosine')")


class DiffusionSchedule:
    """Precomputed per-timestep constants of a Gaussian diffusion.

    Given betas, derives every quantity needed for noising, the true
    posterior q(x_{t-1} | x_t, x_0), and noise/signal conversions:

    - ``alphas`` = 1 - betas, ``alpha_bars`` = cumprod(alphas)
    - marginal: x_t = sqrt(alpha_bar_t) x_0 + sqrt(1 - alpha_bar_t) eps
    - posterior mean = coef_x0 * x_0 + coef_xt * x_t, with variance
      beta_t * (1 - alpha_bar_{t-1}) / (1 - alpha_bar_t)
    """

    def __init__(self, betas: np.ndarray):
        betas = np.asarray(betas, dtype=np.float64)
        if betas.ndim != 1 or betas.size < 1:
            raise ValueError("betas must be a 1-D array with at least one entry")
        if np.any(betas <= 0.0) or np.any(betas >= 1.0):
            raise ValueError("betas must lie strictly in (0, 1)")

        self.betas = betas
        self.num_timesteps = int(betas.size)
        self.alphas = 1.0 - betas
        self.alpha_bars = np.cumprod(self.alphas)
        self.alpha_bars_prev = np.concatenate(([1.0], self.alpha_bars[:-1]))

        self.sqrt_alpha_bars = np.sqrt(self.alpha_bars)
        self.sqrt_one_minus_alpha_bars = np.sqrt(1.0 - self.alpha_bars)
        self.sqrt_recip_alpha_bars = np.sqrt(1.0 / self.alpha_bars)
        self.sqrt_recipm1_alpha_bars = np.sqrt(1.0 / self.alpha_bars - 1.0)

        self.posterior_variance = (
            betas * (1.0 - self.alpha_bars_prev) / (1.0 - self.alpha_bars)
        )
        # Variance is 0 at t=0; clamp before log for the sampling step.
        self.posterior_log_variance = np.log(
            np.maximum(self.posterior_variance, 1e-20)
        )
        self.posterior_mean_coef_x0 = (
            np.sqrt(self.alpha_bars_prev) * betas / (1.0 - self.alpha_bars)
        )
        self.posterior_mean_coef_xt = (
            np.sqrt(self.alphas) * (1.0 - self.alpha_bars_prev) / (1.0 - self.alpha_bars)
        )

    @classmethod
    def from_name(cls, name: str, timesteps: int, **kwargs) -> "DiffusionSchedule":
        return cls(make_betas(name, timesteps, **kwargs))
