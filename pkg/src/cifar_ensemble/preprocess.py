"""Global contrast normalization, ZCA whitening and image augmentation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._binio import Reader, write_arrays


def gcn(x, scale_s: float = 1.0, lam: float = 0.0, epsilon: float = 1e-8) -> np.ndarray:
    """Global contrast normalization of one image vector (or of each row).

    ``s * (x - mean(x)) / max(epsilon, sqrt(lam + mean((x - mean(x))**2)))``
    """
    x = np.asarray(x, dtype=np.float64)
    centered = x - x.mean(axis=-1, keepdims=True)
    contrast = np.sqrt(lam + np.mean(centered**2, axis=-1, keepdims=True))
    out = scale_s * centered / np.maximum(epsilon, contrast)
    # re-center: removes the O(1e-16 * |x|) residual mean left by the first pass
    return out - out.mean(axis=-1, keepdims=True)


@dataclass(frozen=True)
class ZcaModel:
    mean: np.ndarray
    whitening_matrix: np.ndarray
    epsilon: float

    @property
    def dim(self) -> int:
        return self.mean.shape[0]

    def save(self, path) -> None:
        write_arrays(path, [self.dim], [self.epsilon], [self.mean, self.whitening_matrix])

    @classmethod
    def load(cls, path) -> "ZcaModel":
        r = Reader(path)
        (d,) = r.ints(1)
        (eps,) = r.floats(1)
        mean = r.floats(d)
        w = r.matrix(d, d)
        r.done()
        return cls(mean, w, float(eps))


def zca_fit(X, epsilon: float = 1e-5) -> ZcaModel:
    """Fit a ZCA whitening map ``U (L + eps I)^(-1/2) U^T``.

    The covariance uses divisor N.  ``epsilon=0`` is accepted and gives the
    exact inverse square root of a full-rank covariance.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 2:
        raise ValueError("zca_fit needs a 2-D matrix with at least 2 rows")
    if epsilon < 0:
        raise ValueError("epsilon must be non-negative")
    if not np.all(np.isfinite(X)):
        raise ValueError("non-finite input to zca_fit")
    mean = X.mean(axis=0)
    Xc = X - mean
    cov = Xc.T @ Xc / X.shape[0]
    cov = 0.5 * (cov + cov.T)
    evals, evecs = np.linalg.eigh(cov)
    evals = np.clip(evals, 0.0, None) + epsilon
    if np.any(evals <= 0):
        raise ValueError("covariance is singular; use epsilon > 0")
    w = (evecs / np.sqrt(evals)) @ evecs.T
    w = 0.5 * (w + w.T)
    return ZcaModel(mean, w, float(epsilon))


def zca_apply(model: ZcaModel, X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[None, :]
    if X.shape[1] != model.dim:
        raise ValueError(f"expected {model.dim} columns, got {X.shape[1]}")
    return (X - model.mean) @ model.whitening_matrix


@dataclass(frozen=True)
class AugmentConfig:
    pad: int = 4
    flip_probability: float = 0.5
    scale_range: tuple[float, float] = (0.9, 1.1)
    seed: int = 0

    def __post_init__(self):
        lo, hi = self.scale_range
        if self.pad < 0:
            raise ValueError("pad must be non-negative")
        if not 0.0 <= self.flip_probability <= 1.0:
            raise ValueError("flip_probability must be in [0, 1]")
        if not 0 < lo <= hi:
            raise ValueError("scale_range must satisfy 0 < lo <= hi")


def augment(image, config: AugmentConfig, rng: np.random.Generator | None = None) -> np.ndarray:
    """Random crop after reflect padding, horizontal flip, then pixel scaling.

    ``image`` is ``(H, W, C)``.  Every call consumes exactly four draws from
    ``rng`` in this order: crop row offset, crop column offset (integers in
    ``[0, 2*pad]``), flip test (uniform in [0, 1)), scale factor (uniform in
    ``scale_range``).  Without ``rng`` a generator seeded from ``config.seed``
    is used.
    """
    if rng is None:
        rng = np.random.default_rng(config.seed)
    image = np.asarray(image, dtype=np.float64)
    h, w = image.shape[:2]
    p = config.pad
    dy, dx = rng.integers(0, 2 * p + 1, size=2)
    flip = rng.random() < config.flip_probability
    scale = rng.uniform(*config.scale_range)

    out = image
    if p:
        padded = np.pad(image, ((p, p), (p, p), (0, 0)), mode="reflect")
        out = padded[dy:dy + h, dx:dx + w]
    if flip:
        out = out[:, ::-1]
    return np.ascontiguousarray(out * scale)
