"""Accuracy, confusion matrices and report documents."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass

import numpy as np

NUM_CLASSES = 10


def _pair(pred, y):
    pred = np.asarray(pred, dtype=np.int64).ravel()
    y = np.asarray(y, dtype=np.int64).ravel()
    if pred.shape != y.shape:
        raise ValueError(f"length mismatch: {pred.size} predictions vs {y.size} labels")
    if y.size == 0:
        raise ValueError("empty input")
    return pred, y


def accuracy(pred, y) -> float:
    pred, y = _pair(pred, y)
    return int(np.count_nonzero(pred == y)) / y.size


@dataclass(frozen=True)
class ConfusionMatrix:
    """Rows are true classes, columns predicted classes."""

    counts: np.ndarray
    n: int

    @property
    def accuracy(self) -> float:
        return int(np.trace(self.counts)) / self.n


def confusion(pred, y) -> ConfusionMatrix:
    pred, y = _pair(pred, y)
    counts = np.zeros((NUM_CLASSES, NUM_CLASSES), dtype=np.int64)
    np.add.at(counts, (y, pred), 1)
    return ConfusionMatrix(counts, int(y.size))


def per_class_accuracy(cm: ConfusionMatrix) -> np.ndarray:
    """Diagonal over row sums; classes with no samples come back as NaN."""
    rows = cm.counts.sum(axis=1)
    out = np.full(NUM_CLASSES, np.nan)
    has = rows > 0
    out[has] = np.diag(cm.counts)[has] / rows[has]
    return out


def percent(acc: float) -> str:
    return f"{100.0 * acc:.2f}"


def config_hash(config: dict) -> str:
    blob = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def metrics_block(pred, y, class_names=None) -> dict:
    cm = confusion(pred, y)
    pca = per_class_accuracy(cm)
    names = list(class_names) if class_names is not None else [str(c) for c in range(NUM_CLASSES)]
    return {
        "n": cm.n,
        "correct": int(np.trace(cm.counts)),
        "accuracy": cm.accuracy,
        "accuracy_percent": percent(cm.accuracy),
        "confusion": cm.counts.tolist(),
        "per_class_accuracy": {
            name: (None if np.isnan(v) else float(v)) for name, v in zip(names, pca)
        },
    }


def write_report(path, config: dict, body: dict) -> None:
    """Deterministic JSON report embedding the resolved config and its hash."""
    doc = {"config_hash": config_hash(config), "config": config, **body}
    with open(path, "w", newline="\n") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
