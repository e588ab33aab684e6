"""Bi-temporal pair datasets: synthetic generation, folder loading, IO.

Images are float32 tensors shaped (C, H, W) in [-1, 1]; labels are int64
tensors shaped (H, W) with 0 = unchanged, 1 = changed.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
import torch
from PIL import Image
from torch.utils.data import Dataset


def _smooth_field(rng: np.random.Generator, size: int, channels: int, detail: int = 8) -> np.ndarray:
    """Low-frequency background texture in roughly [-0.6, 0.6]."""
    coarse = rng.uniform(-0.6, 0.6, size=(channels, detail, detail)).astype(np.float32)
    out = np.empty((channels, size, size), dtype=np.float32)
    for c in range(channels):
        img = Image.fromarray(coarse[c], mode="F")
        out[c] = np.asarray(img.resize((size, size), Image.BILINEAR))
    return out


def _shape_mask(rng: np.random.Generator, size: int) -> np.ndarray:
    """One random rectangle or ellipse as a boolean mask."""
    lo, hi = max(size // 8, 2), max(size // 3, 4)
    h = int(rng.integers(lo, hi + 1))
    w = int(rng.integers(lo, hi + 1))
    cy = int(rng.integers(h // 2, size - h // 2))
    cx = int(rng.integers(w // 2, size - w // 2))
    mask = np.zeros((size, size), dtype=bool)
    if rng.random() < 0.5:
        mask[cy - h // 2 : cy + (h + 1) // 2, cx - w // 2 : cx + (w + 1) // 2] = True
    else:
        yy, xx = np.ogrid[:size, :size]
        mask = ((yy - cy) / max(h / 2, 1)) ** 2 + ((xx - cx) / max(w / 2, 1)) ** 2 <= 1.0
    return mask


def synthesize_pair(
    rng: np.random.Generator,
    size: int = 64,
    channels: int = 3,
    min_shapes: int = 1,
    max_shapes: int = 4,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Pre/post image pair with inserted-object changes.

    The post image also carries a global illumination shift and fresh pixel
    noise, so "any difference" is not a shortcut for "changed".
    """
    base = _smooth_field(rng, size, channels)
    a = base + rng.normal(0.0, 0.03, base.shape).astype(np.float32)
    b = (
        base
        + rng.uniform(-0.1, 0.1)
        + rng.normal(0.0, 0.03, base.shape).astype(np.float32)
    )
    label = np.zeros((size, size), dtype=np.int64)
    for _ in range(int(rng.integers(min_shapes, max_shapes + 1))):
        region = _shape_mask(rng, size)
        shift = rng.uniform(0.6, 1.2) * (1.0 if rng.random() < 0.5 else -1.0)
        color = shift * rng.uniform(0.7, 1.0, size=channels)
        b[:, region] += color[:, None].astype(np.float32)
        label[region] = 1
    return (
        np.clip(a, -1.0, 1.0).astype(np.float32),
        np.clip(b, -1.0, 1.0).astype(np.float32),
        label,
    )


class PairAugment:
    """Identical random flips / quarter rotations for both images and label.

    Draws from torch's global RNG, so runs are reproducible under
    ``torch.manual_seed``.
    """

    def __call__(self, a: torch.Tensor, b: torch.Tensor, label: torch.Tensor):
        if torch.rand(()) < 0.5:
            a, b, label = a.flip(-1), b.flip(-1), label.flip(-1)
        if torch.rand(()) < 0.5:
            a, b, label = a.flip(-2), b.flip(-2), label.flip(-2)
        k = int(torch.randint(0, 4, ()))
        if k:
            a = torch.rot90(a, k, (-2, -1))
            b = torch.rot90(b, k, (-2, -1))
            label = torch.rot90(label, k, (-2, -1))
        return a, b, label


class SyntheticChangePairs(Dataset):
    """Deterministic synthetic pair dataset; item i depends only on (seed, i)."""

    def __init__(
        self,
        length: int,
        size: int = 64,
        channels: int = 3,
        seed: int = 0,
        augment: bool = False,
    ):
        self.length = length
        self.size = size
        self.channels = channels
        self.seed = seed
        self.transform = PairAugment() if augment else None

    def __len__(self) -> int:
        return self.length

    def __getitem__(self, index: int) -> dict:
        if not 0 <= index < self.length:
            raise IndexError(index)
        rng = np.random.default_rng(np.random.SeedSequence([self.seed, index]))
        a, b, label = synthesize_pair(rng, self.size, self.channels)
        a_t, b_t, label_t = torch.from_numpy(a), torch.from_numpy(b), torch.from_numpy(label)
        if self.transform is not None:
            a_t, b_t, label_t = self.transform(a_t, b_t, label_t)
        return {"a": a_t, "b": b_t, "label": label_t}


class ChangePairFolder(Dataset):
    """Folder layout: root/A, root/B, root/label with matching filenames."""

    def __init__(self, root: str | Path, channels: int = 3, augment: bool = False):
        self.root = Path(root)
        for sub in ("A", "B", "label"):
            if not (self.root / sub).is_dir():
                raise FileNotFoundError(f"missing directory {self.root / sub}")
        names = sorted(p.name for p in (self.root / "A").iterdir() if p.is_file())
        self.names = [
            n for n in names if (self.root / "B" / n).exists() and (self.root / "label" / n).exists()
        ]
        if not self.names:
            raise FileNotFoundError(f"no complete A/B/label triples under {self.root}")
        self.channels = channels
        self.transform = PairAugment() if augment else None

    def __len__(self) -> int:
        return len(self.names)

    def __getitem__(self, index: int) -> dict:
        name = self.names[index]
        a = load_image(self.root / "A" / name, self.channels)
        b = load_image(self.root / "B" / name, self.channels)
        label = load_mask(self.root / "label" / name)
        if self.transform is not None:
            a, b, label = self.transform(a, b, label)
        return {"a": a, "b": b, "label": label, "name": name}


# ---- image IO ------------------------------------------------------------


def load_image(path: str | Path, channels: int = 3) -> torch.Tensor:
    """PNG/JPG -> float32 (C, H, W) in [-1, 1]."""
    mode = "RGB" if channels == 3 else "L"
    arr = np.asarray(Image.open(path).convert(mode), dtype=np.float32) / 255.0
    if arr.ndim == 2:
        arr = arr[None]
    else:
        arr = arr.transpose(2, 0, 1)
    return torch.from_numpy(arr * 2.0 - 1.0)


def save_image(path: str | Path, image: np.ndarray | torch.Tensor) -> None:
    """(C, H, W) array in [-1, 1] -> 8-bit PNG."""
    arr = np.asarray(image, dtype=np.float32)
    arr = (np.clip(arr, -1.0, 1.0) + 1.0) * 127.5
    arr = arr.round().astype(np.uint8)
    if arr.shape[0] == 1:
        Image.fromarray(arr[0], mode="L").save(path)
    else:
        Image.fromarray(arr.transpose(1, 2, 0)).save(path)


def load_mask(path: str | Path) -> torch.Tensor:
    """Label PNG -> int64 (H, W); any value >= 128 counts as changed."""
    arr = np.asarray(Image.open(path).convert("L"))
    return torch.from_numpy((arr >= 128).astype(np.int64))


def save_mask(path: str | Path, mask: np.ndarray | torch.Tensor) -> None:
    arr = (np.asarray(mask) > 0).astype(np.uint8) * 255
    Image.fromarray(arr, mode="L").save(path)


def write_synthetic_dataset(
    root: str | Path,
    num_pairs: int,
    size: int = 64,
    channels: int = 3,
    seed: int = 0,
) -> Path:
    """Materialize a synthetic dataset in the A/B/label folder layout."""
    root = Path(root)
    for sub in ("A", "B", "label"):
        (root / sub).mkdir(parents=True, exist_ok=True)
    ds = SyntheticChangePairs(num_pairs, size, channels, seed)
    for i in range(num_pairs):
        item = ds[i]
        name = f"{i:05d}.png"
        save_image(root / "A" / name, item["a"].numpy())
        save_image(root / "B" / name, item["b"].numpy())
        save_mask(root / "label" / name, item["label"].numpy())
    return root
