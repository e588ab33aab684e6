"""Whole-scene change prediction with tiled inference."""

from __future__ import annotations

from pathlib import Path

import numpy as np
import torch

from .data import load_image, save_mask
from .pipeline import ChangeDetector
from .tiling import compute_tile_boxes, extract_tile, pad_to_multiple, stitch_tiles


@torch.no_grad()
def predict_scene(
    detector: ChangeDetector,
    image_a: torch.Tensor | np.ndarray,
    image_b: torch.Tensor | np.ndarray,
    tile_size: int | None = None,
    overlap: int = 32,
    batch_size: int = 4,
    device: str = "cpu",
    generator: torch.Generator | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Change map for one (C, H, W) scene pair of arbitrary size.

    With ``tile_size`` set, the scene is processed in overlapping windows
    and the logits are averaged where windows overlap; otherwise a single
    forward pass is used. Returns ``(mask, probabilities)`` shaped (H, W)
    and (num_classes, H, W).
    """
    a = np.asarray(image_a, dtype=np.float32)
    b = np.asarray(image_b, dtype=np.float32)
    if a.shape != b.shape or a.ndim != 3:
        raise ValueError(f"expected matching (C, H, W) scenes, got {a.shape} and {b.shape}")
    height, width = a.shape[-2:]

    factor = detector.diffusion.model.downsample_factor
    a_pad, _ = pad_to_multiple(a, factor)
    b_pad, _ = pad_to_multiple(b, factor)

    if tile_size is None:
        full = _forward_batch(detector, [a_pad], [b_pad], device, generator)[0]
    else:
        if tile_size % factor != 0:
            raise ValueError(f"tile_size must be a multiple of {factor}")
        if overlap % factor != 0:
            raise ValueError(f"overlap must be a multiple of {factor}")
        ph, pw = a_pad.shape[-2:]
        boxes = compute_tile_boxes(ph, pw, tile_size, overlap)
        pieces = []
        for i in range(0, len(boxes), batch_size):
            chunk = boxes[i : i + batch_size]
            outs = _forward_batch(
                detector,
                [extract_tile(a_pad, box) for box in chunk],
                [extract_tile(b_pad, box) for box in chunk],
                device,
                generator,
            )
            pieces.extend(outs)
        full = stitch_tiles(pieces, boxes, ph, pw)

    full = full[..., :height, :width]
    probs = torch.softmax(torch.from_numpy(np.ascontiguousarray(full)), dim=0).numpy()
    mask = full.argmax(axis=0).astype(np.int64)
    return mask, probs


def _forward_batch(detector, tiles_a, tiles_b, device, generator):
    """Run same-shaped tiles through the detector, one batch per shape."""
    outs = []
    shapes = {t.shape for t in tiles_a}
    for shape in shapes:
        idx = [i for i, t in enumerate(tiles_a) if t.shape == shape]
        a = torch.from_numpy(np.stack([tiles_a[i] for i in idx])).to(device)
        b = torch.from_numpy(np.stack([tiles_b[i] for i in idx])).to(device)
        logits = detector(a, b, generator=generator).cpu().numpy()
        outs.extend(zip(idx, logits))
    outs.sort(key=lambda pair: pair[0])
    return [logits for _, logits in outs]


def predict_files(
    detector: ChangeDetector,
    path_a: str | Path,
    path_b: str | Path,
    out_path: str | Path | None = None,
    channels: int = 3,
    tile_size: int | None = None,
    overlap: int = 32,
    batch_size: int = 4,
    device: str = "cpu",
    seed: int | None = 0,
) -> np.ndarray:
    """File-to-file convenience wrapper; writes a 0/255 mask PNG."""
    a = load_image(path_a, channels).numpy()
    b = load_image(path_b, channels).numpy()
    generator = None if seed is None else torch.Generator(device).manual_seed(seed)
    mask, _ = predict_scene(
        detector, a, b, tile_size, overlap, batch_size, device, generator
    )
    if out_path is not None:
        save_mask(out_path, mask)
    return mask
