"""Pixel-classification metrics accumulated over batches."""

from __future__ import annotations

import numpy as np


class ConfusionMatrix:
    """Streaming confusion matrix; rows are targets, columns predictions.

    ``update`` accepts integer arrays of any matching shape (torch tensors
    work too via ``np.asarray``). Derived scores use zero for undefined
    ratios (empty class), matching the usual zero-division convention.
    """

    def __init__(self, num_classes: int):
        if num_classes < 2:
            raise ValueError("need at least two classes")
        self.num_classes = num_classes
        self.matrix = np.zeros((num_classes, num_classes), dtype=np.int64)

    def reset(self) -> None:
        self.matrix[:] = 0

    def update(self, prediction, target) -> None:
        pred = np.asarray(prediction).reshape(-1)
        tgt = np.asarray(target).reshape(-1)
        if pred.shape != tgt.shape:
            raise ValueError(f"shape mismatch: {pred.shape} vs {tgt.shape}")
        valid = (tgt >= 0) & (tgt < self.num_classes)
        if np.any((pred[valid] < 0) | (pred[valid] >= self.num_classes)):
            raise ValueError("prediction labels outside [0, num_classes)")
        idx = tgt[valid] * self.num_classes + pred[valid]
        counts = np.bincount(idx.astype(np.int64), minlength=self.num_classes**2)
        self.matrix += counts.reshape(self.num_classes, self.num_classes)

    # ---- derived scores --------------------------------------------------

    @staticmethod
    def _safe_div(num: np.ndarray, den: np.ndarray) -> np.ndarray:
        out = np.zeros_like(num, dtype=np.float64)
        np.divide(num, den, out=out, where=den > 0)
        return out

    def precision(self) -> np.ndarray:
        return self._safe_div(np.diag(self.matrix), self.matrix.sum(axis=0))

    def recall(self) -> np.ndarray:
        return self._safe_div(np.diag(self.matrix), self.matrix.sum(axis=1))

    def f1(self) -> np.ndarray:
        p, r = self.precision(), self.recall()
        return self._safe_div(2.0 * p * r, p + r)

    def iou(self) -> np.ndarray:
        diag = np.diag(self.matrix)
        union = self.matrix.sum(axis=0) + self.matrix.sum(axis=1) - diag
        return self._safe_div(diag, union)

    def overall_accuracy(self) -> float:
        total = self.matrix.sum()
        return float(np.diag(self.matrix).sum() / total) if total else 0.0

    def scores(self) -> dict:
        """Per-class arrays plus scalar summaries."""
        f1 = self.f1()
        iou = self.iou()
        return {
            "precision": self.precision(),
            "recall": self.recall(),
            "f1": f1,
            "iou": iou,
            "mean_f1": float(f1.mean()),
            "mean_iou": float(iou.mean()),
            "overall_accuracy": self.overall_accuracy(),
        }

    def class_summary(self, class_index: int = 1) -> dict:
        """Scalar metrics for one class (default: the change class)."""
        s = self.scores()
        return {
            "precision": float(s["precision"][class_index]),
            "recall": float(s["recall"][class_index]),
            "f1": float(s["f1"][class_index]),
            "iou": float(s["iou"][class_index]),
            "overall_accuracy": s["overall_accuracy"],
        }
