"""Multinomial logistic (softmax) regression trained by mini-batch gradient descent."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._binio import Reader, write_arrays

NUM_CLASSES = 10


class DivergenceError(ArithmeticError):
    """Training produced a non-finite loss."""

    def __init__(self, epoch: int):
        super().__init__(f"training diverged at epoch {epoch} (non-finite loss)")
        self.epoch = epoch


@dataclass(frozen=True)
class LogRegHyper:
    l2: float = 1e-4
    learning_rate: float = 0.05
    epochs: int = 100
    batch_size: int = 256
    seed: int = 0
    standardize: bool = True


@dataclass(frozen=True)
class LogRegModel:
    weights: np.ndarray              # (10, d)
    bias: np.ndarray                 # (10,)
    l2: float
    training_log: list = field(default_factory=list)
    feature_mean: np.ndarray | None = None
    feature_scale: np.ndarray | None = None

    @property
    def dim(self) -> int:
        return self.weights.shape[1]

    def _prepare(self, X):
        if self.feature_mean is None:
            return X
        return (X - self.feature_mean) / self.feature_scale

    def save(self, path) -> None:
        standardized = self.feature_mean is not None
        arrays = [self.weights, self.bias]
        if standardized:
            arrays += [self.feature_mean, self.feature_scale]
        write_arrays(path, [self.dim, int(standardized)], [self.l2], arrays)

    @classmethod
    def load(cls, path) -> "LogRegModel":
        r = Reader(path)
        d, standardized = r.ints(2)
        (l2,) = r.floats(1)
        w = r.matrix(NUM_CLASSES, d)
        b = r.floats(NUM_CLASSES)
        mu = sd = None
        if standardized:
            mu, sd = r.floats(d), r.floats(d)
        r.done()
        return cls(w, b, float(l2), [], mu, sd)


def softmax(logits) -> np.ndarray:
    z = np.asarray(logits, dtype=np.float64)
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def loss_and_grad(W, b, X, y, l2: float):
    """Mean cross-entropy plus ``l2/2 * |W|^2`` and its gradients ``(dW, db)``."""
    n = X.shape[0]
    z = X @ W.T + b
    z = z - z.max(axis=1, keepdims=True)
    logsum = np.log(np.exp(z).sum(axis=1))
    loss = float(np.mean(logsum - z[np.arange(n), y]) + 0.5 * l2 * np.sum(W * W))
    p = np.exp(z - logsum[:, None])
    p[np.arange(n), y] -= 1.0
    p /= n
    return loss, p.T @ X + l2 * W, p.sum(axis=0)


def logreg_train(X, y, hyper: LogRegHyper = LogRegHyper()) -> LogRegModel:
    """Fit softmax regression; deterministic for a fixed ``hyper.seed``.

    Each step takes a gradient step on the data term and applies the L2
    penalty as its exact proximal map, ``W <- W' / (1 + lr * l2)``, which
    stays stable for arbitrarily large ``l2``.  ``training_log`` holds the
    full-data objective before training (epoch 0) and after each epoch.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    n, d = X.shape
    if n < 10:
        raise ValueError("need at least 10 training rows")
    if set(np.unique(y)) != set(range(NUM_CLASSES)):
        raise ValueError("every class must be present in training data")
    if hyper.learning_rate <= 0:
        raise ValueError("learning_rate must be positive")

    mu = sd = None
    if hyper.standardize:
        mu = X.mean(axis=0)
        sd = X.std(axis=0)
        sd = np.where(sd > 1e-12, sd, 1.0)
        X = (X - mu) / sd

    rng = np.random.default_rng(hyper.seed)
    W = np.zeros((NUM_CLASSES, d))
    b = np.zeros(NUM_CLASSES)
    lr, l2 = hyper.learning_rate, hyper.l2
    shrink = 1.0 / (1.0 + lr * l2)
    batch = max(1, min(hyper.batch_size, n))

    # overflow surfaces as a non-finite loss and is reported as DivergenceError
    with np.errstate(over="ignore", invalid="ignore"):
        log = [(0, loss_and_grad(W, b, X, y, l2)[0])]
        for epoch in range(1, hyper.epochs + 1):
            order = rng.permutation(n) if batch < n else np.arange(n)
            for start in range(0, n, batch):
                rows = order[start:start + batch]
                _, gW, gb = loss_and_grad(W, b, X[rows], y[rows], 0.0)
                W = (W - lr * gW) * shrink
                b = b - lr * gb
            loss = loss_and_grad(W, b, X, y, l2)[0]
            if not np.isfinite(loss) or not np.all(np.isfinite(W)):
                raise DivergenceError(epoch)
            log.append((epoch, loss))
    return LogRegModel(W, b, float(l2), log, mu, sd)


def logreg_predict_scores(model: LogRegModel, Q) -> np.ndarray:
    Q = np.asarray(Q, dtype=np.float64)
    if Q.ndim != 2 or Q.shape[1] != model.dim:
        raise ValueError(f"expected {model.dim} columns, got shape {Q.shape}")
    return softmax(model._prepare(Q) @ model.weights.T + model.bias)


def logreg_predict(model: LogRegModel, Q) -> np.ndarray:
    return np.argmax(logreg_predict_scores(model, Q), axis=1)
