import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from cifar_ensemble.dataset_io import write_cifar_batch  # noqa: E402
from cifar_ensemble.synthetic import cifar_like  # noqa: E402

DATA = Path(__file__).parent / "data"


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def write_fake_cifar(directory, n_train_per_batch=60, n_test=80, seed=0):
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    full = cifar_like(5 * n_train_per_batch + n_test, seed=seed)
    for b in range(5):
        rows = np.arange(b * n_train_per_batch, (b + 1) * n_train_per_batch)
        write_cifar_batch(full.subset(rows), directory / f"data_batch_{b + 1}.bin")
    write_cifar_batch(full.subset(np.arange(5 * n_train_per_batch, len(full))),
                      directory / "test_batch.bin")
    return directory


@pytest.fixture(scope="session")
def fake_cifar_dir(tmp_path_factory):
    return write_fake_cifar(tmp_path_factory.mktemp("cifar"))


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)
