"""Sliding-window tiling of large scenes and seam-free restitching."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class TileBox:
    """Half-open pixel window [y0:y1, x0:x1]."""

    y0: int
    x0: int
    y1: int
    x1: int

    @property
    def height(self) -> int:
        return self.y1 - self.y0

    @property
    def width(self) -> int:
        return self.x1 - self.x0


def _axis_starts(extent: int, tile: int, stride: int) -> list[int]:
    if extent <= tile:
        return [0]
    starts = list(range(0, extent - tile, stride))
    # Final window is flush with the border, so coverage is exact.
    starts.append(extent - tile)
    return starts


def compute_tile_boxes(
    height: int, width: int, tile_size: int, overlap: int = 0
) -> list[TileBox]:
    """Cover a (height, width) scene with tile_size windows.

    Interior windows advance by ``tile_size - overlap``; border windows are
    shifted inward so every pixel is covered without stepping outside. A
    scene smaller than the tile along an axis yields one window spanning
    that full axis (the caller pads if a fixed size is required).
    """
    if tile_size < 1:
        raise ValueError("tile_size must be >= 1")
    if not 0 <= overlap < tile_size:
        raise ValueError("need 0 <= overlap < tile_size")
    stride = tile_size - overlap
    ys = _axis_starts(height, tile_size, stride)
    xs = _axis_starts(width, tile_size, stride)
    return [
        TileBox(y, x, min(y + tile_size, height), min(x + tile_size, width))
        for y in ys
        for x in xs
    ]


def extract_tile(image: np.ndarray, box: TileBox) -> np.ndarray:
    """Crop a (..., H, W) array to the box."""
    return image[..., box.y0 : box.y1, box.x0 : box.x1]


def stitch_tiles(
    tiles: list[np.ndarray], boxes: list[TileBox], height: int, width: int
) -> np.ndarray:
    """Reassemble (..., h, w) tiles; overlapping pixels are averaged."""
    if len(tiles) != len(boxes):
        raise ValueError(f"{len(tiles)} tiles for {len(boxes)} boxes")
    if not tiles:
        raise ValueError("nothing to stitch")
    lead = tiles[0].shape[:-2]
    out = np.zeros(lead + (height, width), dtype=np.float64)
    weight = np.zeros((height, width), dtype=np.float64)
    for tile, box in zip(tiles, boxes):
        if tile.shape[:-2] != lead or tile.shape[-2:] != (box.height, box.width):
            raise ValueError(f"tile shape {tile.shape} does not match box {box}")
        out[..., box.y0 : box.y1, box.x0 : box.x1] += tile
        weight[box.y0 : box.y1, box.x0 : box.x1] += 1.0
    if np.any(weight == 0):
        raise ValueError("boxes do not cover the full scene")
    return (out / weight).astype(tiles[0].dtype, copy=False)


def pad_to_multiple(image: np.ndarray, multiple: int) -> tuple[np.ndarray, tuple[int, int]]:
    """Edge-mirror the trailing two axes up to a multiple; returns the
    padding amounts (pad_h, pad_w) so the caller can crop back."""
    h, w = image.shape[-2:]
    pad_h = (-h) % multiple
    pad_w = (-w) % multiple
    if pad_h == 0 and pad_w == 0:
        return image, (0, 0)
    pad = [(0, 0)] * (image.ndim - 2) + [(0, pad_h), (0, pad_w)]
    return np.pad(image, pad, mode="symmetric"), (pad_h, pad_w)
