"""Weighted soft-voting fusion with exhaustive grid search over expert weights.

Two experts are combined by trying every weight pair on a grid
``{0, S, 2S, ..., W_max}`` and keeping the pair whose fused argmax decisions
are most accurate.  More experts are folded in left to right: the fused
output of the first two becomes the left operand of the next pairwise search.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .experts_io import ProbMatrix


@dataclass(frozen=True)
class WeightGrid:
    step: float = 0.05
    max_weight: float = 1.0

    def __post_init__(self):
        if not self.step > 0:
            raise ValueError("grid step must be positive")
        if self.max_weight < self.step:
            raise ValueError("max_weight must be at least one step")

    @property
    def values(self) -> np.ndarray:
        # i * step rather than a running sum, so no drift accumulates
        count = int(np.floor(self.max_weight / self.step + 1e-9)) + 1
        return np.arange(count) * self.step


@dataclass(frozen=True)
class EnsembleWeights:
    """Result of a (chained) weight search.

    ``weights`` are the flat per-expert multipliers, i.e. the products of the
    step weights along the chain; ``steps`` keeps each pairwise search's
    ``(left, right)`` grid pair.
    """

    weights: tuple[float, ...]
    source_grid: WeightGrid
    achieved_accuracy: float
    steps: tuple[tuple[float, float], ...] = ()
    expert_names: tuple[str, ...] = ()
    searched_split: str = ""

    def to_dict(self) -> dict:
        return {
            "expert_names": list(self.expert_names),
            "weights": [float(w) for w in self.weights],
            "steps": [[float(a), float(b)] for a, b in self.steps],
            "grid": {"step": self.source_grid.step, "max_weight": self.source_grid.max_weight},
            "achieved_accuracy": self.achieved_accuracy,
            "searched_split": self.searched_split,
        }

    def save(self, path) -> None:
        with open(path, "w", newline="\n") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "EnsembleWeights":
        doc = json.loads(Path(path).read_text())
        return cls(
            tuple(doc["weights"]),
            WeightGrid(doc["grid"]["step"], doc["grid"]["max_weight"]),
            doc["achieved_accuracy"],
            tuple(tuple(s) for s in doc["steps"]),
            tuple(doc["expert_names"]),
            doc.get("searched_split", ""),
        )


def _scores(expert) -> np.ndarray:
    return expert.scores if isinstance(expert, ProbMatrix) else np.asarray(expert, dtype=np.float64)


def fuse(experts: Sequence, weights: Sequence[float], name: str = "fusion") -> ProbMatrix:
    """``sum_i weights[i] * experts[i]``, flagged non-stochastic."""
    if len(experts) == 0:
        raise ValueError("fuse needs at least one expert")
    if len(weights) != len(experts):
        raise ValueError(f"{len(weights)} weights for {len(experts)} experts")
    if not any(w > 0 for w in weights):
        raise ValueError("all fusion weights are zero")
    mats = [_scores(e) for e in experts]
    shape = mats[0].shape
    for m in mats[1:]:
        if m.shape != shape:
            raise ValueError(f"expert shape mismatch: {shape} vs {m.shape}")
    out = weights[0] * mats[0]
    for w, m in zip(weights[1:], mats[1:]):
        out = out + w * m
    return ProbMatrix(out, name, row_stochastic=False)


def argmax_labels(pm) -> np.ndarray:
    """Row-wise argmax; ties resolve to the lowest class index."""
    return np.argmax(_scores(pm), axis=1)


def pairwise_search(C1, C2, y, grid: WeightGrid = WeightGrid(), n_jobs: int = 1) -> EnsembleWeights:
    """Exhaustive search over ``grid x grid`` (minus ``(0, 0)``).

    Returns the first maximally accurate pair in scan order (``w_i``
    ascending, then ``w_j`` ascending).  Accuracy counts are integers, and
    the winner is chosen by one reduction over the full count table, so the
    result does not depend on ``n_jobs``.
    """
    a, b = _scores(C1), _scores(C2)
    y = np.asarray(y, dtype=np.int64)
    if a.shape != b.shape:
        raise ValueError(f"expert shape mismatch: {a.shape} vs {b.shape}")
    if y.shape != (a.shape[0],):
        raise ValueError(f"{y.size} labels for {a.shape[0]} rows")
    if y.size == 0:
        raise ValueError("empty evaluation set")
    vals = grid.values
    g = len(vals)
    correct = np.zeros((g, g), dtype=np.int64)

    def row(i):
        wa = vals[i] * a
        for j in range(g):
            if i == 0 and j == 0:
                continue
            pred = np.argmax(wa + vals[j] * b, axis=1)
            correct[i, j] = np.count_nonzero(pred == y)

    if n_jobs == 1:
        for i in range(g):
            row(i)
    else:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            list(pool.map(row, range(g)))

    correct[0, 0] = -1
    best = int(np.argmax(correct))  # first maximum in row-major = lexicographic order
    i, j = divmod(best, g)
    wi, wj = float(vals[i]), float(vals[j])
    return EnsembleWeights(
        (wi, wj), grid, int(correct[i, j]) / y.size, ((wi, wj),),
        tuple(_name(e, k) for k, e in enumerate((C1, C2))),
    )


def _name(expert, index: int) -> str:
    return expert.expert_name if isinstance(expert, ProbMatrix) else f"expert{index}"


def chained_search(experts: Sequence, y, grid: WeightGrid = WeightGrid(), n_jobs: int = 1) -> EnsembleWeights:
    """Fold :func:`pairwise_search` left to right over ``experts``.

    After step ``t`` the running fusion is ``F = l_t * F + r_t * C_{t+1}``;
    flat weights are the corresponding products, so re-fusing the experts
    with them in one shot reproduces ``F``.
    """
    if len(experts) < 2:
        raise ValueError("chained_search needs at least two experts")
    running = experts[0]
    flat = [1.0]
    steps = []
    acc = 0.0
    for nxt in experts[1:]:
        res = pairwise_search(running, nxt, y, grid, n_jobs)
        left, right = res.weights
        steps.append((left, right))
        flat = [w * left for w in flat] + [right]
        running = fuse([running, nxt], [left, right])
        acc = res.achieved_accuracy
    return EnsembleWeights(
        tuple(flat), grid, acc, tuple(steps),
        tuple(_name(e, k) for k, e in enumerate(experts)),
    )
