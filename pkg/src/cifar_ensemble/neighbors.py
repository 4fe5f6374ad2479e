"""Exact brute-force k-nearest-neighbors with soft per-class scores.

Distances are computed over query blocks with the expansion
``|a - b|^2 = |a|^2 + |b|^2 - 2 a.b``.  Neighbors are ordered by distance,
ties broken by the lower training row, so results do not depend on block
size or on the number of worker threads.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

NUM_CLASSES = 10
INV_DIST_EPS = 1e-12
VOTES = ("uniform", "inverse_distance")


@dataclass(frozen=True)
class KnnModel:
    train_features: np.ndarray
    train_labels: np.ndarray
    k: int = 10
    vote: str = "uniform"
    metric: str = "euclidean"

    @property
    def dim(self) -> int:
        return self.train_features.shape[1]


def knn_fit(X, y, k: int = 10, vote: str = "uniform") -> KnnModel:
    X = np.array(X, dtype=np.float64)
    y = np.array(y, dtype=np.int64)
    if X.ndim != 2 or X.shape[0] == 0:
        raise ValueError("training matrix must be non-empty and 2-D")
    if y.shape != (X.shape[0],):
        raise ValueError(f"{X.shape[0]} rows but {y.shape[0]} labels")
    if not np.all(np.isfinite(X)):
        raise ValueError("training features must be finite")
    if not 1 <= k <= X.shape[0]:
        raise ValueError(f"k={k} outside 1..{X.shape[0]}")
    if vote not in VOTES:
        raise ValueError(f"unknown vote rule {vote!r}")
    if y.min() < 0 or y.max() >= NUM_CLASSES:
        raise ValueError("labels must lie in 0..9")
    X.setflags(write=False)
    y.setflags(write=False)
    return KnnModel(X, y, k, vote)


def pairwise_distances(Q, X, x_sq=None) -> np.ndarray:
    """Euclidean distances between rows of ``Q`` and rows of ``X``."""
    Q = np.asarray(Q, dtype=np.float64)
    X = np.asarray(X, dtype=np.float64)
    if x_sq is None:
        x_sq = np.einsum("ij,ij->i", X, X)
    q_sq = np.einsum("ij,ij->i", Q, Q)
    d2 = q_sq[:, None] + x_sq[None, :] - 2.0 * (Q @ X.T)
    np.maximum(d2, 0.0, out=d2)
    return np.sqrt(d2)


def naive_distances(Q, X) -> np.ndarray:
    """Per-pair reference distances (slow; used to validate the blocked path)."""
    Q = np.asarray(Q, dtype=np.float64)
    X = np.asarray(X, dtype=np.float64)
    out = np.empty((Q.shape[0], X.shape[0]))
    for i, q in enumerate(Q):
        diff = X - q
        out[i] = np.sqrt(np.einsum("ij,ij->i", diff, diff))
    return out


def _select_k(dist: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
    """k smallest per row, ascending, ties to the lower column index."""
    m, n = dist.shape
    if k == n:
        order = np.argsort(dist, axis=1, kind="stable")
    else:
        kth = np.partition(dist, k - 1, axis=1)[:, k - 1]
        rows, cols = np.nonzero(dist <= kth[:, None])
        vals = dist[rows, cols]
        order_flat = np.lexsort((cols, vals, rows))
        rows, cols = rows[order_flat], cols[order_flat]
        starts = np.searchsorted(rows, np.arange(m))
        take = starts[:, None] + np.arange(k)[None, :]
        order = cols[take]
    return order, np.take_along_axis(dist, order, axis=1)


def kneighbors(model: KnnModel, Q, k: int | None = None, block_size: int = 512,
               n_jobs: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """Indices and distances of the ``k`` nearest training rows per query.

    Returns ``(indices, distances)``, both ``(M, k)`` and sorted by distance.
    """
    k = model.k if k is None else k
    if not 1 <= k <= model.train_features.shape[0]:
        raise ValueError(f"k={k} outside 1..{model.train_features.shape[0]}")
    Q = np.asarray(Q, dtype=np.float64)
    if Q.ndim == 1:
        Q = Q.reshape(-1, model.dim) if Q.size else Q.reshape(0, model.dim)
    if Q.shape[1] != model.dim:
        raise ValueError(f"query dimension {Q.shape[1]} != model dimension {model.dim}")
    m = Q.shape[0]
    idx = np.empty((m, k), dtype=np.int64)
    dist = np.empty((m, k))
    if m == 0:
        return idx, dist
    x_sq = np.einsum("ij,ij->i", model.train_features, model.train_features)

    def run(start):
        block = Q[start:start + block_size]
        d = pairwise_distances(block, model.train_features, x_sq)
        i, dd = _select_k(d, k)
        idx[start:start + len(block)] = i
        dist[start:start + len(block)] = dd

    starts = range(0, m, block_size)
    if n_jobs == 1:
        for s in starts:
            run(s)
    else:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            list(pool.map(run, starts))
    return idx, dist


def scores_from_neighbors(neighbor_labels, neighbor_dist, vote: str = "uniform") -> np.ndarray:
    """Per-class scores from the labels/distances of each query's neighbors."""
    neighbor_labels = np.asarray(neighbor_labels, dtype=np.int64)
    m, k = neighbor_labels.shape
    if vote == "uniform":
        weights = np.ones((m, k))
    elif vote == "inverse_distance":
        weights = 1.0 / (np.asarray(neighbor_dist) + INV_DIST_EPS)
    else:
        raise ValueError(f"unknown vote rule {vote!r}")
    scores = np.zeros((m, NUM_CLASSES))
    np.add.at(scores, (np.repeat(np.arange(m), k), neighbor_labels.ravel()), weights.ravel())
    if vote == "uniform":
        scores /= k
    else:
        scores /= scores.sum(axis=1, keepdims=True)
    return scores


def knn_predict_scores(model: KnnModel, Q, **kwargs) -> np.ndarray:
    """``(M, 10)`` soft scores; each row sums to one."""
    idx, dist = kneighbors(model, Q, **kwargs)
    return scores_from_neighbors(model.train_labels[idx], dist, model.vote)


def knn_predict(model: KnnModel, Q, **kwargs) -> np.ndarray:
    return np.argmax(knn_predict_scores(model, Q, **kwargs), axis=1)


@dataclass(frozen=True)
class CentroidModel:
    """Nearest class mean: one centroid per class present in training."""

    centroids: np.ndarray
    present: np.ndarray


def centroid_fit(X, y) -> CentroidModel:
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    centroids = np.zeros((NUM_CLASSES, X.shape[1]))
    present = np.zeros(NUM_CLASSES, dtype=bool)
    for c in range(NUM_CLASSES):
        rows = X[y == c]
        if len(rows):
            centroids[c] = rows.mean(axis=0)
            present[c] = True
    if not present.any():
        raise ValueError("no training rows")
    return CentroidModel(centroids, present)


def centroid_predict(model: CentroidModel, Q) -> np.ndarray:
    d = pairwise_distances(Q, model.centroids)
    d[:, ~model.present] = np.inf
    return np.argmin(d, axis=1)


def centroid_predict_scores(model: CentroidModel, Q) -> np.ndarray:
    """One-hot scores of the nearest centroid."""
    pred = centroid_predict(model, Q)
    out = np.zeros((len(pred), NUM_CLASSES))
    out[np.arange(len(pred)), pred] = 1.0
    return out
