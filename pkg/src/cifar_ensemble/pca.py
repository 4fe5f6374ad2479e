"""Principal component analysis by covariance (or Gram) eigendecomposition."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from ._binio import Reader, write_arrays

_BLOCK_ROWS = 4096


@dataclass(frozen=True)
class PcaModel:
    """Fitted PCA.

    ``components`` holds one unit-norm principal direction per row, ordered
    by descending ``eigenvalues``.  ``total_variance`` is the trace of the
    full sample covariance, used by the ``"total"`` explained-variance
    denominator.
    """

    mean: np.ndarray
    components: np.ndarray
    eigenvalues: np.ndarray
    total_variance: float

    @property
    def dim(self) -> int:
        return self.mean.shape[0]

    @property
    def n_components(self) -> int:
        return self.components.shape[0]

    def truncate(self, k: int) -> "PcaModel":
        """Keep the leading ``k`` components (identical to refitting with ``k``)."""
        if not 1 <= k <= self.n_components:
            raise ValueError(f"k={k} outside 1..{self.n_components}")
        return PcaModel(self.mean, self.components[:k], self.eigenvalues[:k],
                        self.total_variance)

    def save(self, path) -> None:
        write_arrays(path, [self.dim, self.n_components], [self.total_variance],
                     [self.mean, self.eigenvalues, self.components])

    @classmethod
    def load(cls, path) -> "PcaModel":
        r = Reader(path)
        d, k = r.ints(2)
        (total,) = r.floats(1)
        mean = r.floats(d)
        evals = r.floats(k)
        comps = r.matrix(k, d)
        r.done()
        return cls(mean, comps, evals, float(total))


def _orient(components: np.ndarray) -> np.ndarray:
    # flip rows whose largest-magnitude entry is negative; argmax picks the lowest index on ties
    lead = np.argmax(np.abs(components), axis=1)
    signs = np.where(components[np.arange(len(components)), lead] < 0, -1.0, 1.0)
    return components * signs[:, None]


def _centered_scatter(X: np.ndarray, mean: np.ndarray) -> np.ndarray:
    d = X.shape[1]
    scatter = np.zeros((d, d))
    for start in range(0, X.shape[0], _BLOCK_ROWS):
        block = X[start:start + _BLOCK_ROWS] - mean
        scatter += block.T @ block
    return 0.5 * (scatter + scatter.T)


def pca_fit(X, k: int) -> PcaModel:
    """Fit the top-``k`` principal components of ``X`` (rows are samples).

    Covariance divisor is N-1.  When D <= N the D x D covariance is
    eigendecomposed; otherwise the N x N Gram matrix is, and components are
    recovered as normalized ``Xc^T u``.  Each component is sign-normalized so
    its largest-magnitude entry is positive.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError("pca_fit expects a 2-D matrix")
    n, d = X.shape
    if n < 2:
        raise ValueError("pca_fit needs at least 2 rows")
    if not 1 <= k <= min(n, d):
        raise ValueError(f"k={k} outside 1..{min(n, d)}")
    if not np.all(np.isfinite(X)):
        raise ValueError("non-finite input to pca_fit")

    mean = X.mean(axis=0)
    if d <= n:
        cov = _centered_scatter(X, mean) / (n - 1)
        total = float(np.trace(cov))
        evals, evecs = scipy.linalg.eigh(cov, subset_by_index=[d - k, d - 1])
        evals, evecs = evals[::-1], evecs[:, ::-1]
        components = evecs.T
    else:
        Xc = X - mean
        gram = Xc @ Xc.T / (n - 1)
        gram = 0.5 * (gram + gram.T)
        total = float(np.trace(gram))
        evals, u = scipy.linalg.eigh(gram, subset_by_index=[n - k, n - 1])
        evals, u = evals[::-1], u[:, ::-1]
        components = (Xc.T @ u).T
        norms = np.linalg.norm(components, axis=1)
        keep = norms > 1e-12 * max(1.0, norms.max(initial=0.0))
        components[keep] /= norms[keep, None]
        if not keep.all():
            # null directions: any orthonormal completion will do
            components = _complete_basis(components, keep)

    evals = np.where(evals < 0, 0.0, evals)
    return PcaModel(mean, _orient(components), evals, total)


def _complete_basis(components: np.ndarray, keep: np.ndarray) -> np.ndarray:
    good = components[keep]
    k, d = components.shape
    q, _ = np.linalg.qr(np.vstack([good, np.eye(d)]).T)
    basis = q.T[: k]
    out = components.copy()
    out[keep] = good
    out[~keep] = basis[good.shape[0]:k]
    return out


def pca_transform(model: PcaModel, X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[None, :]
    if X.shape[1] != model.dim:
        raise ValueError(f"expected {model.dim} columns, got {X.shape[1]}")
    return (X - model.mean) @ model.components.T


def pca_inverse(model: PcaModel, Z) -> np.ndarray:
    Z = np.asarray(Z, dtype=np.float64)
    if Z.ndim == 1:
        Z = Z[None, :]
    if Z.shape[1] != model.n_components:
        raise ValueError(f"expected {model.n_components} columns, got {Z.shape[1]}")
    return Z @ model.components + model.mean


def explained_variance_fraction(model: PcaModel, index_range, denominator: str = "retained") -> float:
    """Share of variance carried by components ``lo..hi-1``.

    ``denominator="retained"`` divides by the sum of the kept eigenvalues,
    ``"total"`` by the trace of the full covariance.
    """
    lo, hi = index_range
    if not 0 <= lo < hi <= model.n_components:
        raise ValueError(f"range [{lo}, {hi}) outside [0, {model.n_components})")
    part = float(np.sum(model.eigenvalues[lo:hi]))
    if denominator == "retained":
        denom = float(np.sum(model.eigenvalues))
    elif denominator == "total":
        denom = model.total_variance
    else:
        raise ValueError(f"unknown denominator {denominator!r}")
    if denom <= 0:
        return 0.0
    return part / denom
