"""Command-line entry points.

Subcommands: make-synthetic, pretrain, train-head, evaluate, predict,
sample. Hyperparameters come from an optional YAML experiment config; a
few common ones can be overridden by flags.
"""

from __future__ import annotations

import argparse
import json
from pathlib import Path

import numpy as np
import torch

from .config import DataConfig, ExperimentConfig
from .data import (
    ChangePairFolder,
    SyntheticChangePairs,
    save_image,
    write_synthetic_dataset,
)
from .ddim import DDIMSampler
from .pipeline import (
    ChangeDetector,
    build_diffusion,
    load_detector_checkpoint,
    load_diffusion_checkpoint,
    save_detector_checkpoint,
    save_diffusion_checkpoint,
)
from .predict import predict_files
from .train import (
    ImagePool,
    diffusion_val_loss,
    evaluate_detector,
    pretrain_diffusion,
    train_change_head,
)


def _load_config(args) -> ExperimentConfig:
    cfg = ExperimentConfig.load(args.config) if args.config else ExperimentConfig()
    if getattr(args, "seed", None) is not None:
        cfg.seed = args.seed
    if getattr(args, "steps", None) is not None:
        for tc in (cfg.pretrain, cfg.head_train):
            tc.steps = args.steps
            # keep the config valid when the override shrinks the run
            tc.warmup_steps = min(tc.warmup_steps, args.steps)
    if getattr(args, "batch_size", None) is not None:
        cfg.pretrain.batch_size = args.batch_size
        cfg.head_train.batch_size = args.batch_size
    if getattr(args, "data", None) is not None:
        cfg.data.root = args.data
    return cfg


def _resolve_pairs(data_cfg: DataConfig, augment: bool):
    """(train, val) pair datasets from a folder root or synthetic fallback.

    A folder root may either contain train/ and val/ splits or be a flat
    A/B/label layout (no validation split in that case).
    """
    if data_cfg.root is not None:
        root = Path(data_cfg.root)
        if (root / "train").is_dir():
            train = ChangePairFolder(root / "train", data_cfg.channels, augment=augment)
            val_dir = root / "val"
            val = (
                ChangePairFolder(val_dir, data_cfg.channels, augment=False)
                if val_dir.is_dir()
                else None
            )
            return train, val
        return ChangePairFolder(root, data_cfg.channels, augment=augment), None
    train = SyntheticChangePairs(
        data_cfg.synthetic_train,
        data_cfg.image_size,
        data_cfg.channels,
        seed=0,
        augment=augment,
    )
    val = SyntheticChangePairs(
        data_cfg.synthetic_val, data_cfg.image_size, data_cfg.channels, seed=1
    )
    return train, val


def _jsonable(scores: dict) -> dict:
    return {
        k: v.tolist() if isinstance(v, np.ndarray) else v for k, v in scores.items()
    }


def _print_scores(scores: dict) -> None:
    for key in ("precision", "recall", "f1", "iou"):
        vals = ", ".join(f"{v:.4f}" for v in scores[key])
        print(f"{key:>17}: [{vals}]")
    for key in ("mean_f1", "mean_iou", "overall_accuracy"):
        print(f"{key:>17}: {scores[key]:.4f}")


# ---- subcommands ---------------------------------------------------------


def cmd_make_synthetic(args) -> int:
    write_synthetic_dataset(args.out, args.num, args.size, args.channels, args.seed)
    print(f"wrote {args.num} pairs under {args.out}")
    return 0


def cmd_pretrain(args) -> int:
    cfg = _load_config(args)
    torch.manual_seed(cfg.seed)
    diffusion = build_diffusion(cfg.schedule, cfg.unet, cfg.loss_type)
    train_pairs, val_pairs = _resolve_pairs(cfg.data, augment=cfg.data.augment)
    result = pretrain_diffusion(
        diffusion, ImagePool(train_pairs), cfg.pretrain, args.device, verbose=True
    )
    save_diffusion_checkpoint(
        args.out, diffusion, cfg.unet, cfg.schedule, result["ema"], cfg.pretrain.steps
    )
    print(f"saved diffusion checkpoint to {args.out}")
    if val_pairs is not None:
        loss = diffusion_val_loss(
            diffusion, ImagePool(val_pairs), cfg.pretrain.batch_size, args.device
        )
        print(f"val denoising loss: {loss:.4f}")
    return 0


def cmd_train_head(args) -> int:
    cfg = _load_config(args)
    torch.manual_seed(cfg.seed)
    diffusion, _ = load_diffusion_checkpoint(args.diffusion, args.device)
    detector = ChangeDetector(diffusion, cfg.head)
    train_pairs, val_pairs = _resolve_pairs(cfg.data, augment=cfg.data.augment)
    result = train_change_head(
        detector, train_pairs, cfg.head_train, args.device, val_pairs, verbose=True
    )
    save_detector_checkpoint(
        args.out, detector, cfg.unet, cfg.schedule, cfg.head, cfg.head_train.steps
    )
    print(f"saved detector checkpoint to {args.out}")
    if "val" in result:
        _print_scores(result["val"])
    return 0


def cmd_evaluate(args) -> int:
    cfg = _load_config(args)
    detector, _ = load_detector_checkpoint(args.checkpoint, args.device)
    pairs, _ = _resolve_pairs(cfg.data, augment=False)
    scores = evaluate_detector(
        detector, pairs, cfg.head_train.batch_size, args.device, seed=cfg.seed
    )
    _print_scores(scores)
    if args.json:
        Path(args.json).write_text(json.dumps(_jsonable(scores), indent=2))
        print(f"wrote {args.json}")
    return 0


def cmd_predict(args) -> int:
    detector, _ = load_detector_checkpoint(args.checkpoint, args.device)
    predict_files(
        detector,
        args.before,
        args.after,
        args.out,
        channels=args.channels,
        tile_size=args.tile,
        overlap=args.overlap,
        device=args.device,
        seed=args.seed,
    )
    print(f"wrote change mask to {args.out}")
    return 0


def cmd_sample(args) -> int:
    diffusion, payload = load_diffusion_checkpoint(args.checkpoint, args.device)
    channels = payload["unet"]["in_channels"]
    g = torch.Generator(args.device).manual_seed(args.seed)
    shape = (args.num, channels, args.size, args.size)
    if args.ddim_steps is not None:
        sampler = DDIMSampler(diffusion, num_steps=args.ddim_steps, eta=args.eta)
        samples = sampler.sample(shape, generator=g)
    else:
        samples = diffusion.sample(shape, generator=g)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for i in range(args.num):
        save_image(out / f"sample_{i:03d}.png", samples[i].cpu().numpy())
    print(f"wrote {args.num} samples under {out}")
    return 0


# ---- parser --------------------------------------------------------------


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="YAML experiment config")
    p.add_argument("--data", help="dataset root (A/B/label or train/val splits)")
    p.add_argument("--device", default="cpu")
    p.add_argument("--seed", type=int)
    p.add_argument("--steps", type=int, help="override training steps")
    p.add_argument("--batch-size", type=int, dest="batch_size")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="changediff",
        description="Change detection from denoising-diffusion features",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("make-synthetic", help="write a synthetic A/B/label dataset")
    p.add_argument("--out", required=True)
    p.add_argument("--num", type=int, default=64)
    p.add_argument("--size", type=int, default=64)
    p.add_argument("--channels", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_make_synthetic)

    p = sub.add_parser("pretrain", help="train the diffusion backbone")
    _add_common(p)
    p.add_argument("--out", required=True, help="checkpoint path")
    p.set_defaults(func=cmd_pretrain)

    p = sub.add_parser("train-head", help="train the change head on frozen features")
    _add_common(p)
    p.add_argument("--diffusion", required=True, help="diffusion checkpoint")
    p.add_argument("--out", required=True, help="detector checkpoint path")
    p.set_defaults(func=cmd_train_head)

    p = sub.add_parser("evaluate", help="score a detector on a dataset")
    _add_common(p)
    p.add_argument("--checkpoint", required=True, help="detector checkpoint")
    p.add_argument("--json", help="also write scores to this JSON file")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("predict", help="change mask for one scene pair")
    p.add_argument("--checkpoint", required=True, help="detector checkpoint")
    p.add_argument("--before", required=True)
    p.add_argument("--after", required=True)
    p.add_argument("--out", required=True, help="output mask PNG")
    p.add_argument("--channels", type=int, default=3)
    p.add_argument("--tile", type=int, help="tile size for large scenes")
    p.add_argument("--overlap", type=int, default=32)
    p.add_argument("--device", default="cpu")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("sample", help="draw images from a diffusion checkpoint")
    p.add_argument("--checkpoint", required=True, help="diffusion checkpoint")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--num", type=int, default=4)
    p.add_argument("--size", type=int, default=64)
    p.add_argument("--ddim-steps", type=int, dest="ddim_steps")
    p.add_argument("--eta", type=float, default=0.0)
    p.add_argument("--device", default="cpu")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_sample)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
