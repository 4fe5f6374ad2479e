"""Shared loader for the demos: real CIFAR-10 when available, else a synthetic stand-in."""

import os
from pathlib import Path

from cifar_ensemble import dataset_io
from cifar_ensemble.synthetic import cifar_like


def load(n_train=2000, n_test=500, noise=400.0):
    d = os.environ.get("CIFAR10_DIR")
    if d and (Path(d) / dataset_io.TEST_BATCH).is_file():
        train, test = dataset_io.load_cifar10(d)
        print(f"using CIFAR-10 from {d} ({n_train} train / {n_test} test rows)")
        return train.subset(range(n_train)), test.subset(range(n_test))
    # heavy pixel noise keeps the synthetic task from being trivially separable
    print("CIFAR10_DIR not set; using synthetic cifar-like images")
    full = cifar_like(n_train + n_test, seed=0, noise=noise)
    return full.subset(range(n_train)), full.subset(range(n_train, n_train + n_test))
