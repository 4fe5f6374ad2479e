import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cifar_ensemble.dataset_io import (
    CIFAR10_CLASSES,
    Dataset,
    DatasetError,
    SplitSpec,
    concat,
    flatten_hwc,
    images_hwc,
    load_cifar10,
    load_cifar_batch,
    read_class_names,
    stratified_split,
    write_cifar_batch,
)


def test_minimal_record(tmp_path):
    path = tmp_path / "one.bin"
    path.write_bytes(bytes([6]) + bytes(3072))
    ds = load_cifar_batch(path)
    assert len(ds) == 1
    assert ds.labels.tolist() == [6]
    assert ds.dim == 3072
    assert not ds.features.any()
    assert ds.features.dtype == np.float64


def test_hand_built_two_records_channel_planar(tmp_path):
    # record 0: red plane 1, green plane 2, blue plane 3; record 1: pixel index mod 251
    rec0 = bytes([2]) + bytes([1] * 1024 + [2] * 1024 + [3] * 1024)
    rec1 = bytes([9]) + bytes(i % 251 for i in range(3072))
    path = tmp_path / "two.bin"
    path.write_bytes(rec0 + rec1)
    ds = load_cifar_batch(path)
    assert ds.labels.tolist() == [2, 9]
    assert (ds.features[0, :1024] == 1).all()
    assert (ds.features[0, 1024:2048] == 2).all()
    assert (ds.features[0, 2048:] == 3).all()
    assert ds.features[1].tolist() == [float(i % 251) for i in range(3072)]
    img = images_hwc(ds.features)
    assert img.shape == (2, 32, 32, 3)
    # red channel, row 1, column 2 -> byte 1*32 + 2
    assert img[1, 1, 2, 0] == 34
    assert img[1, 0, 0, 2] == 2048 % 251
    np.testing.assert_array_equal(flatten_hwc(img), ds.features)


def test_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_cifar_batch(tmp_path / "nope.bin")


def test_truncated_record(tmp_path):
    path = tmp_path / "bad.bin"
    path.write_bytes(bytes(3073 + 10))
    with pytest.raises(DatasetError, match="truncated"):
        load_cifar_batch(path)


def test_label_out_of_range(tmp_path):
    path = tmp_path / "bad.bin"
    path.write_bytes(bytes(3073) + bytes([10]) + bytes(3072))
    with pytest.raises(DatasetError, match="record 1"):
        load_cifar_batch(path)


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 6), st.integers(0, 2**32 - 1))
def test_round_trip_bit_exact(tmp_path_factory, n, seed):
    rng = np.random.default_rng(seed)
    ds = Dataset(rng.integers(0, 256, size=(n, 3072)), rng.integers(0, 10, size=n))
    path = tmp_path_factory.mktemp("rt") / "b.bin"
    write_cifar_batch(ds, path)
    assert path.stat().st_size == n * 3073
    back = load_cifar_batch(path)
    np.testing.assert_array_equal(back.features, ds.features)
    np.testing.assert_array_equal(back.labels, ds.labels)


def test_write_rejects_non_bytes(tmp_path):
    ds = Dataset(np.full((1, 3072), 0.5), [0])
    with pytest.raises(DatasetError):
        write_cifar_batch(ds, tmp_path / "x.bin")


def test_dataset_invariants():
    with pytest.raises(DatasetError):
        Dataset(np.zeros((2, 3)), [0])
    with pytest.raises(DatasetError):
        Dataset(np.zeros((1, 3)), [10])


def test_concat():
    a = Dataset(np.zeros((2, 4)), [0, 1])
    b = Dataset(np.ones((3, 4)), [2, 3, 4])
    assert concat([a]) is a
    ab = concat([a, b])
    assert len(ab) == 5
    assert ab.labels.tolist() == [0, 1, 2, 3, 4]
    np.testing.assert_array_equal(ab.features[2:], 1.0)
    with pytest.raises(DatasetError):
        concat([a, Dataset(np.zeros((1, 5)), [0])])


def test_load_cifar10_directory(fake_cifar_dir):
    train, test = load_cifar10(fake_cifar_dir)
    assert len(train) == 300
    assert len(test) == 80
    assert train.class_names == CIFAR10_CLASSES


def test_class_names_from_meta(tmp_path):
    names = [f"c{i}" for i in range(10)]
    (tmp_path / "batches.meta.txt").write_text("\n".join(names) + "\n\n")
    assert read_class_names(tmp_path) == tuple(names)
    assert read_class_names(tmp_path / "elsewhere") == CIFAR10_CLASSES


def test_stratified_split_counts():
    labels = np.repeat(np.arange(10), 5000)
    split = stratified_split(labels, 0.1, seed=3)
    assert len(split.validation_indices) == 5000
    assert np.bincount(labels[split.validation_indices]).tolist() == [500] * 10
    assert len(split.train_indices) == 45000


def test_stratified_split_determinism_and_seed_dependence():
    labels = np.arange(100) % 10
    a = stratified_split(labels, 0.2, seed=1)
    b = stratified_split(labels, 0.2, seed=1)
    c = stratified_split(labels, 0.2, seed=2)
    np.testing.assert_array_equal(a.validation_indices, b.validation_indices)
    np.testing.assert_array_equal(a.train_indices, b.train_indices)
    assert not np.array_equal(a.validation_indices, c.validation_indices)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.integers(0, 9), min_size=10, max_size=200),
       st.floats(0.05, 0.5), st.integers(0, 1000))
def test_stratified_split_properties(labels, frac, seed):
    labels = np.array(labels + list(range(10)) * int(np.ceil(1 / frac)))
    split = stratified_split(labels, frac, seed)
    allidx = np.concatenate([split.train_indices, split.validation_indices])
    assert sorted(allidx.tolist()) == list(range(len(labels)))
    for c in range(10):
        n_c = np.count_nonzero(labels == c)
        v_c = np.count_nonzero(labels[split.validation_indices] == c)
        assert abs(v_c - frac * n_c) <= 1
    # labels alone (not features) drive the result
    again = stratified_split(Dataset(np.zeros((len(labels), 1)), labels), frac, seed)
    np.testing.assert_array_equal(again.validation_indices, split.validation_indices)


def test_stratified_split_errors():
    with pytest.raises(DatasetError):
        stratified_split(np.arange(100) % 10, 1.0, 0)
    with pytest.raises(DatasetError, match="empty"):
        stratified_split(np.arange(100) % 9, 0.1, 0)
    with pytest.raises(DatasetError):
        stratified_split(np.arange(50) % 10, 0.1, 0)


def test_split_spec_persistence(tmp_path):
    split = stratified_split(np.arange(200) % 10, 0.25, seed=11)
    split.save(tmp_path / "split.txt")
    text = (tmp_path / "split.txt").read_text().splitlines()
    assert text[0] == "seed 11"
    assert text[1] == "train 150"
    back = SplitSpec.load(tmp_path / "split.txt")
    np.testing.assert_array_equal(back.train_indices, split.train_indices)
    np.testing.assert_array_equal(back.validation_indices, split.validation_indices)
    assert back.seed == 11


def test_split_spec_rejects_overlap():
    with pytest.raises(DatasetError):
        SplitSpec([0, 1], [1, 2])
    with pytest.raises(DatasetError):
        SplitSpec([0, 0], [2])
