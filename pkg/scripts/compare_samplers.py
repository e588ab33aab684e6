"""Compare ancestral sampling against the accelerated deterministic sampler.

Pretrains a tiny backbone on synthetic images, then draws samples with
the full ancestral chain and with the deterministic sampler at several
step budgets. Reports wall-clock time per sampler and, as a rough
fidelity proxy, the pixel MSE between each accelerated run and a
many-step deterministic reference.

Run: python scripts/compare_samplers.py --out runs/samplers
"""

from __future__ import annotations

import argparse
import json
import time
from pathlib import Path

import torch

from changediff import (
    DDIMSampler,
    ImagePool,
    ScheduleConfig,
    SyntheticChangePairs,
    TrainingConfig,
    UNetConfig,
    build_diffusion,
    pretrain_diffusion,
)
from changediff.data import save_image


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="runs/samplers")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--timesteps", type=int, default=200)
    ap.add_argument("--image-size", type=int, default=32)
    ap.add_argument("--num-samples", type=int, default=4)
    ap.add_argument("--pretrain-steps", type=int, default=300)
    ap.add_argument("--step-budgets", type=int, nargs="+", default=[10, 25, 50, 100])
    args = ap.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    torch.manual_seed(args.seed)

    sched = ScheduleConfig(timesteps=args.timesteps)
    unet = UNetConfig(
        base_channels=32, channel_mults=(1, 2, 4), num_res_blocks=1,
        attention_levels=(2,), norm_groups=8,
    )
    diffusion = build_diffusion(sched, unet)
    pairs = SyntheticChangePairs(64, args.image_size, seed=args.seed)
    train_cfg = TrainingConfig(
        steps=args.pretrain_steps, batch_size=8, lr=2e-4,
        warmup_steps=min(50, args.pretrain_steps // 5 + 1),
    )
    pretrain_diffusion(diffusion, ImagePool(pairs), train_cfg, verbose=True)

    shape = (args.num_samples, 3, args.image_size, args.image_size)
    rows = []

    def timed(tag, fn):
        g = torch.Generator().manual_seed(args.seed + 1)
        t0 = time.time()
        x = fn(g)
        dt = time.time() - t0
        rows.append({"sampler": tag, "seconds": round(dt, 2)})
        print(f"{tag:>16}: {dt:6.2f}s")
        for i in range(min(args.num_samples, 2)):
            save_image(out / f"{tag}_{i}.png", x[i].numpy())
        return x

    reference = timed(
        f"ddim_{args.timesteps}",
        lambda g: DDIMSampler(diffusion, num_steps=args.timesteps).sample(
            shape, generator=g
        ),
    )
    timed("ancestral", lambda g: diffusion.sample(shape, generator=g))
    for steps in args.step_budgets:
        x = timed(
            f"ddim_{steps}",
            lambda g, s=steps: DDIMSampler(diffusion, num_steps=s).sample(
                shape, generator=g
            ),
        )
        mse = float(torch.mean((x - reference) ** 2))
        rows[-1]["mse_vs_reference"] = mse
        print(f"{'':>16}  mse vs {args.timesteps}-step reference: {mse:.5f}")

    (out / "report.json").write_text(json.dumps(rows, indent=2))
    print(f"report written to {out / 'report.json'}")


if __name__ == "__main__":
    main()
