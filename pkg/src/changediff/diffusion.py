"""Gaussian diffusion: forward noising, training loss, ancestral sampling."""

from __future__ import annotations

import torch
import torch.nn.functional as F
from torch import Tensor, nn

from .schedules import DiffusionSchedule


def _extract(buf: Tensor, t: Tensor, ndim: int) -> Tensor:
    """Gather per-sample schedule constants and reshape for broadcasting."""
    out = buf.gather(0, t)
    return out.reshape(t.shape[0], *([1] * (ndim - 1)))


class GaussianDiffusion(nn.Module):
    """Wraps a noise-prediction network with a fixed variance schedule.

    The network is called as ``model(x_t, t)`` (or ``model(x_t, t, cond)``
    when conditioning is supplied) and must return a tensor shaped like
    ``x_t`` containing the predicted noise.

    Data is assumed to live in [-1, 1]; sampling clamps the intermediate
    x_0 estimate to that range unless ``clip_denoised=False``.
    """

    def __init__(
        self,
        model: nn.Module,
        schedule: DiffusionSchedule,
        loss_type: str = "l2",
    ):
        super().__init__()
        if loss_type not in ("l1", "l2"):
            raise ValueError(f"loss_type must be 'l1' or 'l2', got {loss_type!r}")
        self.model = model
        self.schedule = schedule
        self.loss_type = loss_type
        self.num_timesteps = schedule.num_timesteps

        reg = lambda name, arr: self.register_buffer(
            name, torch.from_numpy(arr).float(), persistent=False
        )
        reg("betas", schedule.betas)
        reg("alphas", schedule.alphas)
        reg("alpha_bars", schedule.alpha_bars)
        reg("alpha_bars_prev", schedule.alpha_bars_prev)
        reg("sqrt_alpha_bars", schedule.sqrt_alpha_bars)
        reg("sqrt_one_minus_alpha_bars", schedule.sqrt_one_minus_alpha_bars)
        reg("sqrt_recip_alpha_bars", schedule.sqrt_recip_alpha_bars)
        reg("sqrt_recipm1_alpha_bars", schedule.sqrt_recipm1_alpha_bars)
        reg("posterior_variance", schedule.posterior_variance)
        reg("posterior_log_variance", schedule.posterior_log_variance)
        reg("posterior_mean_coef_x0", schedule.posterior_mean_coef_x0)
        reg("posterior_mean_coef_xt", schedule.posterior_mean_coef_xt)

    # ---- forward process -------------------------------------------------

    def q_sample(self, x0: Tensor, t: Tensor, noise: Tensor | None = None) -> Tensor:
        """Sample x_t ~ q(x_t | x_0) = N(sqrt(ab_t) x_0, (1 - ab_t) I)."""
        if noise is None:
            noise = torch.randn_like(x0)
        return (
            _extract(self.sqrt_alpha_bars, t, x0.ndim) * x0
            + _extract(self.sqrt_one_minus_alpha_bars, t, x0.ndim) * noise
        )

    def predict_x0_from_eps(self, x_t: Tensor, t: Tensor, eps: Tensor) -> Tensor:
        return (
            _extract(self.sqrt_recip_alpha_bars, t, x_t.ndim) * x_t
            - _extract(self.sqrt_recipm1_alpha_bars, t, x_t.ndim) * eps
        )

    def q_posterior(self, x0: Tensor, x_t: Tensor, t: Tensor):
        """Mean, variance and log-variance of q(x_{t-1} | x_t, x_0)."""
        mean = (
            _extract(self.posterior_mean_coef_x0, t, x_t.ndim) * x0
            + _extract(self.posterior_mean_coef_xt, t, x_t.ndim) * x_t
        )
        var = _extract(self.posterior_variance, t, x_t.ndim)
        log_var = _extract(self.posterior_log_variance, t, x_t.ndim)
        return mean, var, log_var

    # ---- reverse process -------------------------------------------------

    def _call_model(self, x_t: Tensor, t: Tensor, cond: Tensor | None) -> Tensor:
        if cond is None:
            return self.model(x_t, t)
        return self.model(x_t, t, cond)

    def p_mean_variance(
        self,
        x_t: Tensor,
        t: Tensor,
        cond: Tensor | None = None,
        clip_denoised: bool = True,
    ):
        eps = self._call_model(x_t, t, cond)
        x0 = self.predict_x0_from_eps(x_t, t, eps)
        if clip_denoised:
            x0 = x0.clamp(-1.0, 1.0)
        return self.q_posterior(x0, x_t, t)

    @torch.no_grad()
    def p_sample(
        self,
        x_t: Tensor,
        t: Tensor,
        cond: Tensor | None = None,
        clip_denoised: bool = True,
        generator: torch.Generator | None = None,
    ) -> Tensor:
        """One ancestral step x_t -> x_{t-1}; no noise is added at t=0."""
        mean, _, log_var = self.p_mean_variance(x_t, t, cond, clip_denoised)
        noise = torch.empty_like(x_t).normal_(generator=generator)
        nonzero = (t > 0).float().reshape(-1, *([1] * (x_t.ndim - 1)))
        return mean + nonzero * (0.5 * log_var).exp() * noise

    @torch.no_grad()
    def sample(
        self,
        shape: tuple[int, ...],
        cond: Tensor | None = None,
        clip_denoised: bool = True,
        generator: torch.Generator | None = None,
        return_trajectory: bool = False,
    ):
        """Run the full reverse chain from pure noise."""
        device = self.betas.device
        x = torch.empty(shape, device=device).normal_(generator=generator)
        trajectory = [x]
        for step in reversed(range(self.num_timesteps)):
            t = torch.full((shape[0],), step, dtype=torch.long, device=device)
            x = self.p_sample(x, t, cond, clip_denoised, generator)
            if return_trajectory:
                trajectory.append(x)
        if return_trajectory:
            return x, trajectory
        return x

    # ---- training --------------------------------------------------------

    def loss(
        self,
        x0: Tensor,
        cond: Tensor | None = None,
        t: Tensor | None = None,
        noise: Tensor | None = None,
    ) -> Tensor:
        """Noise-prediction loss at uniformly sampled timesteps."""
        b = x0.shape[0]
        if t is None:
            t = torch.randint(0, self.num_timesteps, (b,), device=x0.device)
        if noise is None:
            noise = torch.randn_like(x0)
        x_t = self.q_sample(x0, t, noise)
        eps = self._call_model(x_t, t, cond)
        if self.loss_type == "l1":
            return F.l1_loss(eps, noise)
        return F.mse_loss(eps, noise)

    def forward(self, x0: Tensor, cond: Tensor | None = None) -> Tensor:
        return self.loss(x0, cond)
