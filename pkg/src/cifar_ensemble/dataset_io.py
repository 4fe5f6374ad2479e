"""Reading and writing the CIFAR-10 binary distribution.

Each record in a ``*.bin`` batch file is one label byte followed by 3072
pixel bytes: the 1024 red values, then green, then blue, each plane stored
row-major over the 32x32 image.  Rows of :attr:`Dataset.features` keep that
channel-planar column order.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

RECORD_BYTES = 3073
IMAGE_BYTES = 3072
NUM_CLASSES = 10

CIFAR10_CLASSES = (
    "airplane",
    "automobile",
    "bird",
    "cat",
    "deer",
    "dog",
    "frog",
    "horse",
    "ship",
    "truck",
)

TRAIN_BATCHES = tuple(f"data_batch_{i}.bin" for i in range(1, 6))
TEST_BATCH = "test_batch.bin"
META_FILE = "batches.meta.txt"


class DatasetError(ValueError):
    """Malformed dataset file or inconsistent dataset arguments."""


@dataclass(frozen=True)
class Dataset:
    features: np.ndarray
    labels: np.ndarray
    class_names: tuple[str, ...] = CIFAR10_CLASSES

    def __post_init__(self):
        features = np.asarray(self.features, dtype=np.float64)
        labels = np.asarray(self.labels, dtype=np.int64)
        if features.ndim != 2:
            raise DatasetError(f"features must be 2-D, got shape {features.shape}")
        if labels.shape != (features.shape[0],):
            raise DatasetError(
                f"{features.shape[0]} feature rows but {labels.shape[0]} labels")
        if labels.size and (labels.min() < 0 or labels.max() >= NUM_CLASSES):
            raise DatasetError("labels must lie in 0..9")
        if len(self.class_names) != NUM_CLASSES:
            raise DatasetError("exactly 10 class names are required")
        features.setflags(write=False)
        labels.setflags(write=False)
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "class_names", tuple(self.class_names))

    def __len__(self) -> int:
        return self.features.shape[0]

    @property
    def dim(self) -> int:
        return self.features.shape[1]

    def subset(self, indices) -> "Dataset":
        indices = np.asarray(indices, dtype=np.int64)
        return Dataset(self.features[indices], self.labels[indices], self.class_names)


@dataclass(frozen=True)
class SplitSpec:
    """Disjoint train/validation row indices plus the seed that drew them."""

    train_indices: np.ndarray
    validation_indices: np.ndarray
    seed: int = 0

    def __post_init__(self):
        train = np.asarray(self.train_indices, dtype=np.int64)
        val = np.asarray(self.validation_indices, dtype=np.int64)
        if len(np.unique(train)) != len(train) or len(np.unique(val)) != len(val):
            raise DatasetError("split index lists contain duplicates")
        if np.intersect1d(train, val).size:
            raise DatasetError("train and validation indices overlap")
        if (train.size and train.min() < 0) or (val.size and val.min() < 0):
            raise DatasetError("negative split index")
        object.__setattr__(self, "train_indices", train)
        object.__setattr__(self, "validation_indices", val)
        object.__setattr__(self, "seed", int(self.seed))

    def save(self, path) -> None:
        lines = [f"seed {self.seed}", f"train {len(self.train_indices)}"]
        lines += [str(i) for i in self.train_indices]
        lines.append(f"validation {len(self.validation_indices)}")
        lines += [str(i) for i in self.validation_indices]
        Path(path).write_text("\n".join(lines) + "\n")

    @classmethod
    def load(cls, path) -> "SplitSpec":
        lines = Path(path).read_text().split()
        # tokens: seed S train n i... validation m j...
        try:
            if lines[0] != "seed" or lines[2] != "train":
                raise DatasetError(f"{path}: not a split file")
            seed = int(lines[1])
            n_train = int(lines[3])
            train = [int(t) for t in lines[4:4 + n_train]]
            pos = 4 + n_train
            if lines[pos] != "validation":
                raise DatasetError(f"{path}: missing validation section")
            n_val = int(lines[pos + 1])
            val = [int(t) for t in lines[pos + 2:pos + 2 + n_val]]
        except (IndexError, ValueError) as exc:
            raise DatasetError(f"{path}: malformed split file") from exc
        if len(train) != n_train or len(val) != n_val:
            raise DatasetError(f"{path}: truncated split file")
        return cls(np.array(train, dtype=np.int64), np.array(val, dtype=np.int64), seed)


def read_class_names(directory) -> tuple[str, ...]:
    """Class names from ``batches.meta.txt`` if present, else the canonical list."""
    meta = Path(directory) / META_FILE
    if not meta.exists():
        return CIFAR10_CLASSES
    names = [line.strip() for line in meta.read_text().splitlines() if line.strip()]
    if len(names) < NUM_CLASSES:
        return CIFAR10_CLASSES
    return tuple(names[:NUM_CLASSES])


def load_cifar_batch(path, class_names: Sequence[str] = CIFAR10_CLASSES) -> Dataset:
    """Parse one CIFAR-10 binary batch file.

    Raises
    ------
    FileNotFoundError
        If ``path`` does not exist.
    DatasetError
        If the file length is not a whole number of 3073-byte records or a
        label byte exceeds 9.
    """
    path = Path(path)
    raw = np.fromfile(path, dtype=np.uint8)
    if raw.size % RECORD_BYTES:
        raise DatasetError(
            f"{path}: truncated record ({raw.size} bytes is not a multiple of {RECORD_BYTES})")
    records = raw.reshape(-1, RECORD_BYTES)
    labels = records[:, 0]
    bad = np.flatnonzero(labels > 9)
    if bad.size:
        raise DatasetError(f"{path}: record {bad[0]} has label byte {labels[bad[0]]}")
    return Dataset(records[:, 1:].astype(np.float64), labels.astype(np.int64), class_names)


def write_cifar_batch(ds: Dataset, path) -> None:
    """Serialize ``ds`` to the 3073-byte record format.

    Features must be integers in 0..255; anything else cannot be represented.
    """
    if ds.dim != IMAGE_BYTES:
        raise DatasetError(f"expected {IMAGE_BYTES} feature columns, got {ds.dim}")
    pixels = ds.features
    if np.any(pixels < 0) or np.any(pixels > 255) or np.any(pixels != np.round(pixels)):
        raise DatasetError("features are not byte values")
    out = np.empty((len(ds), RECORD_BYTES), dtype=np.uint8)
    out[:, 0] = ds.labels
    out[:, 1:] = pixels
    out.tofile(path)


def concat(datasets: Sequence[Dataset]) -> Dataset:
    if not datasets:
        raise DatasetError("nothing to concatenate")
    first = datasets[0]
    for ds in datasets[1:]:
        if ds.dim != first.dim:
            raise DatasetError(f"dimension mismatch: {first.dim} vs {ds.dim}")
        if ds.class_names != first.class_names:
            raise DatasetError("class names differ between datasets")
    if len(datasets) == 1:
        return first
    return Dataset(
        np.concatenate([d.features for d in datasets]),
        np.concatenate([d.labels for d in datasets]),
        first.class_names,
    )


def load_cifar10(directory) -> tuple[Dataset, Dataset]:
    """Load the five training batches and the test batch from ``directory``."""
    directory = Path(directory)
    if not directory.is_dir():
        raise FileNotFoundError(f"CIFAR-10 directory not found: {directory}")
    names = read_class_names(directory)
    train = concat([load_cifar_batch(directory / f, names) for f in TRAIN_BATCHES])
    test = load_cifar_batch(directory / TEST_BATCH, names)
    return train, test


def stratified_split(labels, validation_fraction: float, seed: int) -> SplitSpec:
    """Draw a per-class validation subset.

    Each class contributes ``round(n_c * validation_fraction)`` rows, so the
    per-class proportion is within one sample of the requested fraction.
    Only the labels, the fraction and the seed influence the result.
    """
    if isinstance(labels, Dataset):
        labels = labels.labels
    labels = np.asarray(labels, dtype=np.int64)
    if not 0.0 < validation_fraction < 1.0:
        raise DatasetError(f"validation_fraction must be in (0, 1), got {validation_fraction}")
    rng = np.random.default_rng(seed)
    need = 1.0 / validation_fraction
    train_parts, val_parts = [], []
    for c in range(NUM_CLASSES):
        idx = np.flatnonzero(labels == c)
        if idx.size == 0:
            raise DatasetError(f"class {c} is empty")
        if idx.size < need - 1e-9:
            raise DatasetError(
                f"class {c} has {idx.size} samples, fewer than 1/fraction = {need:g}")
        n_val = int(np.floor(idx.size * validation_fraction + 0.5))
        perm = rng.permutation(idx)
        val_parts.append(perm[:n_val])
        train_parts.append(perm[n_val:])
    return SplitSpec(
        np.sort(np.concatenate(train_parts)),
        np.sort(np.concatenate(val_parts)),
        seed,
    )


def images_hwc(features) -> np.ndarray:
    """View channel-planar rows as ``(N, 32, 32, 3)`` images."""
    features = np.asarray(features)
    return features.reshape(-1, 3, 32, 32).transpose(0, 2, 3, 1)


def flatten_hwc(images) -> np.ndarray:
    """Inverse of :func:`images_hwc`."""
    images = np.asarray(images)
    return images.transpose(0, 3, 1, 2).reshape(images.shape[0], -1)


def default_data_dir() -> str:
    return os.environ.get("CIFAR10_DIR", "data/cifar-10-batches-bin")
