"""
Contrast normalization, ZCA whitening and augmentation
======================================================
"""

import numpy as np

from cifar_ensemble import preprocess
from cifar_ensemble.dataset_io import images_hwc
from _data import load

train, _ = load(n_train=1000, n_test=10)
X = train.features

# GCN: every image ends up with zero mean and unit contrast
g = preprocess.gcn(X, scale_s=1.0, lam=0.0)
print("row means  ", np.abs(g.mean(axis=1)).max())
print("row norms  ", np.sqrt((g ** 2).mean(axis=1))[:5])

# ZCA on a small patch so the covariance is well determined
patch = images_hwc(g)[:, :8, :8, :].reshape(len(g), -1)
for eps in (1e-1, 1e-3, 1e-5):
    model = preprocess.zca_fit(patch, epsilon=eps)
    w = preprocess.zca_apply(model, patch)
    cov = w.T @ w / len(w)
    print(f"eps={eps:g}: |cov - I| max {np.abs(cov - np.eye(cov.shape[0])).max():.3e}")

# augmentation is reproducible from its seed
cfg = preprocess.AugmentConfig(seed=0)
img = images_hwc(X[:1])[0]
a = preprocess.augment(img, cfg)
b = preprocess.augment(img, cfg)
print("same seed, same output:", np.array_equal(a, b), a.shape)
