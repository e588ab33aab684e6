"""Training loops: diffusion pretraining and change-head fitting."""

from __future__ import annotations

import torch
from torch import nn
from torch.utils.data import DataLoader, Dataset

from .config import TrainingConfig
from .diffusion import GaussianDiffusion
from .metrics import ConfusionMatrix
from .optim import EMA, WarmupCosineLR
from .pipeline import ChangeDetector


class ImagePool(Dataset):
    """Flattens a pair dataset into single images for pretraining."""

    def __init__(self, pairs: Dataset):
        self.pairs = pairs

    def __len__(self) -> int:
        return 2 * len(self.pairs)

    def __getitem__(self, index: int) -> torch.Tensor:
        item = self.pairs[index // 2]
        return item["a"] if index % 2 == 0 else item["b"]


def _cycle(loader: DataLoader):
    while True:
        yield from loader


def pretrain_diffusion(
    diffusion: GaussianDiffusion,
    images: Dataset,
    cfg: TrainingConfig,
    device: str = "cpu",
    verbose: bool = False,
) -> dict:
    """Optimize the denoiser; returns per-step losses and the EMA tracker."""
    diffusion.to(device).train()
    loader = DataLoader(
        images,
        batch_size=cfg.batch_size,
        shuffle=True,
        drop_last=len(images) > cfg.batch_size,
    )
    opt = torch.optim.AdamW(diffusion.parameters(), lr=cfg.lr, weight_decay=cfg.weight_decay)
    sched = WarmupCosineLR(opt, cfg.steps, cfg.warmup_steps, cfg.min_lr_scale)
    ema = EMA(diffusion.model, cfg.ema_decay)

    losses = []
    batches = _cycle(loader)
    for step in range(cfg.steps):
        x = next(batches).to(device)
        loss = diffusion.loss(x)
        opt.zero_grad()
        loss.backward()
        if cfg.grad_clip > 0:
            nn.utils.clip_grad_norm_(diffusion.parameters(), cfg.grad_clip)
        opt.step()
        sched.step()
        ema.update(diffusion.model)
        losses.append(loss.item())
        if verbose and (step + 1) % cfg.log_every == 0:
            recent = sum(losses[-cfg.log_every :]) / cfg.log_every
            print(f"pretrain step {step + 1}/{cfg.steps} loss {recent:.4f}")
    diffusion.eval()
    return {"losses": losses, "ema": ema}


@torch.no_grad()
def diffusion_val_loss(
    diffusion: GaussianDiffusion,
    images: Dataset,
    batch_size: int = 8,
    device: str = "cpu",
    seed: int = 0,
    max_batches: int | None = None,
) -> float:
    """Denoising loss with a fixed (t, noise) draw, comparable across runs."""
    diffusion.to(device).eval()
    g = torch.Generator(device).manual_seed(seed)
    loader = DataLoader(images, batch_size=batch_size, shuffle=False)
    total, count = 0.0, 0
    for i, batch in enumerate(loader):
        if max_batches is not None and i >= max_batches:
            break
        x = batch.to(device)
        t = torch.randint(
            0, diffusion.num_timesteps, (x.shape[0],), generator=g, device=device
        )
        noise = torch.empty_like(x).normal_(generator=g)
        total += diffusion.loss(x, t=t, noise=noise).item()
        count += 1
    if count == 0:
        raise ValueError("no validation batches")
    return total / count


def train_change_head(
    detector: ChangeDetector,
    train_pairs: Dataset,
    cfg: TrainingConfig,
    device: str = "cpu",
    val_pairs: Dataset | None = None,
    verbose: bool = False,
) -> dict:
    """Cross-entropy training of the head over frozen backbone features."""
    detector.to(device).train()
    loader = DataLoader(
        train_pairs,
        batch_size=cfg.batch_size,
        shuffle=True,
        drop_last=len(train_pairs) > cfg.batch_size,
    )
    params = [p for p in detector.parameters() if p.requires_grad]
    opt = torch.optim.AdamW(params, lr=cfg.lr, weight_decay=cfg.weight_decay)
    sched = WarmupCosineLR(opt, cfg.steps, cfg.warmup_steps, cfg.min_lr_scale)
    criterion = nn.CrossEntropyLoss()

    losses = []
    batches = _cycle(loader)
    for step in range(cfg.steps):
        batch = next(batches)
        logits = detector(batch["a"].to(device), batch["b"].to(device))
        loss = criterion(logits, batch["label"].to(device))
        opt.zero_grad()
        loss.backward()
        if cfg.grad_clip > 0:
            nn.utils.clip_grad_norm_(params, cfg.grad_clip)
        opt.step()
        sched.step()
        losses.append(loss.item())
        if verbose and (step + 1) % cfg.log_every == 0:
            recent = sum(losses[-cfg.log_every :]) / cfg.log_every
            print(f"head step {step + 1}/{cfg.steps} loss {recent:.4f}")

    detector.eval()
    result = {"losses": losses}
    if val_pairs is not None:
        result["val"] = evaluate_detector(detector, val_pairs, cfg.batch_size, device)
    return result


@torch.no_grad()
def evaluate_detector(
    detector: ChangeDetector,
    pairs: Dataset,
    batch_size: int = 8,
    device: str = "cpu",
    seed: int = 0,
) -> dict:
    """Confusion-matrix scores over a pair dataset.

    Feature extraction draws noise; a seeded generator makes the
    evaluation repeatable.
    """
    detector.to(device).eval()
    g = torch.Generator(device).manual_seed(seed)
    cm = ConfusionMatrix(detector.head.num_classes)
    loader = DataLoader(pairs, batch_size=batch_size, shuffle=False)
    for batch in loader:
        pred = detector.predict(batch["a"].to(device), batch["b"].to(device), generator=g)
        cm.update(pred.cpu().numpy(), batch["label"].numpy())
    return cm.scores()
