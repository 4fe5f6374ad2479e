import numpy as np
import pytest

from cifar_ensemble.linear import (
    DivergenceError,
    LogRegHyper,
    LogRegModel,
    logreg_predict,
    logreg_predict_scores,
    logreg_train,
    loss_and_grad,
    softmax,
)
from oracles import fd_gradient


def _blobs(seed, n_per=20, d=2, spread=0.3):
    rng = np.random.default_rng(seed)
    centers = rng.normal(size=(10, d)) * 5
    y = np.repeat(np.arange(10), n_per)
    return centers[y] + spread * rng.normal(size=(len(y), d)), y


def test_separable_blobs():
    # ten well-separated 2-D clusters on a circle are linearly separable
    angles = 2 * np.pi * np.arange(10) / 10
    centers = 10 * np.c_[np.cos(angles), np.sin(angles)]
    rng = np.random.default_rng(0)
    y = np.repeat(np.arange(10), 15)
    X = centers[y] + 0.2 * rng.normal(size=(150, 2))
    model = logreg_train(X, y, LogRegHyper(l2=0.0, learning_rate=0.5, epochs=1000, batch_size=256))
    assert np.mean(logreg_predict(model, X) == y) == 1.0


def test_huge_l2_gives_uniform():
    X, y = _blobs(1)
    model = logreg_train(X, y, LogRegHyper(l2=1e6, epochs=20))
    assert np.abs(model.weights).max() < 1e-5
    np.testing.assert_allclose(logreg_predict_scores(model, X), 0.1, atol=1e-4)


def test_gradient_matches_finite_differences():
    rng = np.random.default_rng(2)
    X = rng.normal(size=(20, 5))
    y = np.arange(20) % 10
    W = rng.normal(size=(10, 5)) * 0.5
    b = rng.normal(size=10) * 0.5
    l2 = 0.3
    _, gW, gb = loss_and_grad(W, b, X, y, l2)
    num_W = fd_gradient(lambda w: loss_and_grad(w, b, X, y, l2)[0], W)
    num_b = fd_gradient(lambda bb: loss_and_grad(W, bb, X, y, l2)[0], b)
    np.testing.assert_allclose(gW, num_W, rtol=1e-5, atol=1e-9)
    np.testing.assert_allclose(gb, num_b, rtol=1e-5, atol=1e-9)


def test_zero_model_is_uniform():
    model = LogRegModel(np.zeros((10, 3)), np.zeros(10), 0.0)
    np.testing.assert_array_equal(logreg_predict_scores(model, np.ones((4, 3))), 0.1)


def test_softmax_shift_invariance_and_values():
    rng = np.random.default_rng(3)
    z = rng.normal(size=(5, 10))
    np.testing.assert_allclose(softmax(z + 123.0), softmax(z), atol=1e-12)
    row = softmax(np.array([[1.0] + [0.0] * 9]))[0]
    e = np.e
    np.testing.assert_allclose(row, [e / (e + 9)] + [1 / (e + 9)] * 9, rtol=1e-14)
    big = softmax(np.array([[1000.0, 0.0] + [-1000.0] * 8]))
    assert np.all(np.isfinite(big))


def test_rows_positive_and_normalized():
    X, y = _blobs(4, d=6)
    model = logreg_train(X, y, LogRegHyper(epochs=5))
    s = logreg_predict_scores(model, X)
    assert np.all(s > 0)
    np.testing.assert_allclose(s.sum(axis=1), 1.0, atol=1e-9)


def test_full_batch_loss_monotone():
    rng = np.random.default_rng(5)
    X = rng.normal(size=(100, 10))
    y = np.arange(100) % 10
    model = logreg_train(X, y, LogRegHyper(learning_rate=1e-3, epochs=200, batch_size=100))
    losses = [l for _, l in model.training_log]
    assert len(losses) == 201
    assert all(b <= a + 1e-6 for a, b in zip(losses, losses[1:]))
    assert losses[-1] < losses[0]


def test_deterministic_given_seed():
    X, y = _blobs(6, d=4)
    h = LogRegHyper(epochs=10, batch_size=32, seed=9)
    a, b = logreg_train(X, y, h), logreg_train(X, y, h)
    np.testing.assert_array_equal(a.weights, b.weights)
    c = logreg_train(X, y, LogRegHyper(epochs=10, batch_size=32, seed=10))
    assert not np.array_equal(a.weights, c.weights)


def test_divergence_names_epoch():
    X, y = _blobs(7)
    with pytest.raises(DivergenceError, match="epoch 1"):
        logreg_train(X * 1e200, y, LogRegHyper(learning_rate=1e10, standardize=False, epochs=3))


def test_preconditions():
    X, y = _blobs(8)
    with pytest.raises(ValueError):
        logreg_train(X[:5], y[:5])
    with pytest.raises(ValueError):
        logreg_train(X[y != 3], y[y != 3])
    with pytest.raises(ValueError):
        logreg_train(X, y, LogRegHyper(learning_rate=0.0))
    model = logreg_train(X, y, LogRegHyper(epochs=1))
    with pytest.raises(ValueError):
        logreg_predict_scores(model, np.zeros((1, 3)))


def test_persistence(tmp_path):
    X, y = _blobs(9, d=3)
    model = logreg_train(X, y, LogRegHyper(epochs=3))
    model.save(tmp_path / "lr.bin")
    raw = (tmp_path / "lr.bin").read_bytes()
    assert len(raw) == 2 * 8 + 8 + 8 * (30 + 10 + 3 + 3)
    back = LogRegModel.load(tmp_path / "lr.bin")
    np.testing.assert_array_equal(logreg_predict_scores(back, X), logreg_predict_scores(model, X))
