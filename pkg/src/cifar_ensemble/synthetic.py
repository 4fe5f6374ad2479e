"""Synthetic stand-ins for CIFAR-10 files and CNN expert outputs.

Used by the tests and demos when the real binaries or GPU-trained networks
are not at hand.
"""

from __future__ import annotations

import numpy as np

from .dataset_io import IMAGE_BYTES, Dataset
from .experts_io import ProbMatrix

NUM_CLASSES = 10
CAT, DOG, HORSE = 3, 5, 7


def balanced_labels(n: int, rng: np.random.Generator) -> np.ndarray:
    return rng.permutation(np.arange(n) % NUM_CLASSES)


def cifar_like(n: int, seed: int = 0, noise: float = 40.0) -> Dataset:
    """Byte-valued images whose class is carried by a smooth per-class template.

    Templates are low-frequency colour patterns, so the data has a few
    dominant principal directions plus pixel noise, loosely like CIFAR.
    """
    rng = np.random.default_rng(seed)
    template_rng = np.random.default_rng(12345)
    yy, xx = np.mgrid[0:32, 0:32] / 31.0
    templates = []
    for _ in range(NUM_CLASSES):
        planes = []
        for _ in range(3):
            a, b, c, ph = template_rng.uniform(-1, 1, size=4)
            planes.append(128 + 60 * np.sin(np.pi * (a * xx + b * yy) * 2 + ph) + 30 * c)
        templates.append(np.stack(planes).ravel())
    templates = np.array(templates)
    labels = balanced_labels(n, rng)
    brightness = rng.normal(0, 20, size=(n, 1))
    pix = templates[labels] + brightness + rng.normal(0, noise, size=(n, IMAGE_BYTES))
    return Dataset(np.clip(np.round(pix), 0, 255), labels)


def _peaked_rows(winners, true_labels, winner_mass, true_mass, rng) -> np.ndarray:
    """Rows with ``winner_mass`` on the winner, ``true_mass`` on the true class
    (when different) and the remainder spread randomly over the others."""
    n = len(winners)
    out = np.zeros((n, NUM_CLASSES))
    for i in range(n):
        w, t = winners[i], true_labels[i]
        out[i, w] = winner_mass[i]
        rest = 1.0 - winner_mass[i]
        if t != w:
            out[i, t] = true_mass[i]
            rest -= true_mass[i]
        others = [c for c in range(NUM_CLASSES) if out[i, c] == 0.0]
        share = rng.dirichlet(np.ones(len(others))) * rest
        out[i, others] = share
    return out


def fusion_fixture(n: int = 1000, seed: int = 7):
    """Four correlated CNN-like experts plus a KNN-like expert.

    The CNN experts are each about 93% accurate.  They share a block of
    mistakes on cat/dog/horse images (the same wrong answer, with the true
    class a close second) and also make a few independent mistakes.  The KNN
    expert is weak overall and its scores are nearly flat, but on that shared
    block it mostly ranks the true class clearly above the CNNs' wrong answer.

    Returns ``(labels, [cnn1, cnn2, cnn3, cnn4], knn)``.
    """
    rng = np.random.default_rng(seed)
    y = balanced_labels(n, rng)
    confusable = np.flatnonzero(np.isin(y, (CAT, DOG, HORSE)))
    shared = rng.choice(confusable, size=int(0.05 * n), replace=False)
    swap = {CAT: DOG, DOG: CAT, HORSE: DOG}
    shared_wrong = np.array([swap[c] for c in y[shared]])

    cnns = []
    for e in range(4):
        pred = y.copy()
        pred[shared] = shared_wrong
        free = np.setdiff1d(np.arange(n), shared)
        solo = rng.choice(free, size=int(0.02 * n), replace=False)
        pred[solo] = (y[solo] + rng.integers(1, NUM_CLASSES, size=solo.size)) % NUM_CLASSES
        win = rng.uniform(0.80, 0.98, size=n)
        true_m = np.zeros(n)
        true_m[solo] = rng.uniform(0.05, 0.3, size=solo.size) * (1 - win[solo])
        win[shared] = rng.uniform(0.40, 0.48, size=shared.size)
        true_m[shared] = win[shared] - rng.uniform(0.03, 0.12, size=shared.size)
        cnns.append(ProbMatrix(_peaked_rows(pred, y, win, true_m, rng), f"cnn{e + 1}"))

    # near-flat KNN scores: small margins everywhere, but on the shared block the
    # true class leads the CNN's wrong answer by a clear gap
    knn_pred = y.copy()
    wrong = rng.random(n) < 0.55
    wrong[shared] = False
    knn_pred[wrong] = (y[wrong] + rng.integers(1, NUM_CLASSES, size=wrong.sum())) % NUM_CLASSES
    helped = rng.random(shared.size) < 0.7
    knn_pred[shared[~helped]] = shared_wrong[~helped]
    scores = 0.1 + rng.uniform(-0.004, 0.004, size=(n, NUM_CLASSES))
    scores[np.arange(n), knn_pred] += rng.uniform(0.01, 0.02, size=n)
    scores[shared[helped], y[shared[helped]]] += 0.05
    scores[shared[helped], shared_wrong[helped]] -= 0.03
    knn = ProbMatrix(scores / scores.sum(axis=1, keepdims=True), "knn")
    return y, cnns, knn
