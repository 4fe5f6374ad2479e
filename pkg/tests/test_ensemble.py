import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cifar_ensemble.ensemble import (
    EnsembleWeights,
    WeightGrid,
    argmax_labels,
    chained_search,
    fuse,
    pairwise_search,
)
from cifar_ensemble.evaluation import accuracy
from cifar_ensemble.experts_io import ProbMatrix
from oracles import chained_oracle, grid_values, pairwise_oracle


def _one_hot(labels):
    out = np.zeros((len(labels), 10))
    out[np.arange(len(labels)), labels] = 1.0
    return out


def _random_experts(rng, n, m, skill=0.5):
    y = rng.integers(0, 10, size=n)
    experts = []
    for _ in range(m):
        s = rng.dirichlet(np.ones(10), size=n)
        s[np.arange(n), y] += rng.uniform(0, skill, size=n)
        experts.append(s / s.sum(axis=1, keepdims=True))
    return y, experts


class TestWeightGrid:
    def test_default_values(self):
        vals = WeightGrid().values
        assert len(vals) == 21
        assert vals[0] == 0.0
        assert vals[-1] == pytest.approx(1.0, abs=1e-12)
        np.testing.assert_allclose(np.diff(vals), 0.05, atol=1e-12)

    def test_matches_oracle_values(self):
        for step, mx in [(0.05, 1.0), (0.1, 2.0), (0.3, 1.0), (0.25, 0.25)]:
            np.testing.assert_allclose(WeightGrid(step, mx).values, grid_values(step, mx), atol=1e-12)

    def test_invalid(self):
        with pytest.raises(ValueError):
            WeightGrid(0.0, 1.0)
        with pytest.raises(ValueError):
            WeightGrid(0.5, 0.1)


class TestFuse:
    def test_single_identity(self, rng):
        s = rng.dirichlet(np.ones(10), size=4)
        np.testing.assert_array_equal(fuse([ProbMatrix(s)], [1.0]).scores, s)

    def test_unit_vector(self, rng):
        a, b = rng.dirichlet(np.ones(10), size=(2, 4))
        np.testing.assert_array_equal(fuse([a, b], [1.0, 0.0]).scores, a)

    def test_average(self):
        a = np.array([[1.0] + [0.0] * 9, [0.0] * 9 + [1.0]])
        b = np.array([[0.0, 1.0] + [0.0] * 8, [0.1] * 10])
        out = fuse([a, b], [0.5, 0.5])
        expected = np.array([[0.5, 0.5] + [0.0] * 8, [0.05] * 9 + [0.55]])
        np.testing.assert_allclose(out.scores, expected, atol=1e-15)
        assert not out.row_stochastic

    def test_errors(self, rng):
        a = rng.dirichlet(np.ones(10), size=3)
        with pytest.raises(ValueError):
            fuse([], [])
        with pytest.raises(ValueError):
            fuse([a, a], [1.0])
        with pytest.raises(ValueError):
            fuse([a, a], [0.0, 0.0])
        with pytest.raises(ValueError):
            fuse([a, a[:2]], [1.0, 1.0])


class TestArgmax:
    def test_uniform_row_is_class_zero(self):
        assert argmax_labels(np.full((1, 10), 0.1)).tolist() == [0]

    def test_one_hot(self):
        labels = [3, 9, 0, 5]
        assert argmax_labels(_one_hot(labels)).tolist() == labels

    def test_matches_linear_scan(self, rng):
        s = rng.integers(0, 4, size=(5, 10)).astype(float)  # plenty of ties
        expected = []
        for row in s:
            best = 0
            for c in range(1, 10):
                if row[c] > row[best]:
                    best = c
            expected.append(best)
        assert argmax_labels(s).tolist() == expected


class TestPairwise:
    def test_correct_vs_adversarial(self):
        rng = np.random.default_rng(0)
        y = rng.integers(0, 10, size=30)
        c1 = _one_hot(y)
        c2 = _one_hot((y + 1) % 10)
        res = pairwise_search(c1, c2, y)
        (ow, oacc) = pairwise_oracle(c1, c2, y)
        assert res.weights == (0.05, 0.0) == ow
        assert res.achieved_accuracy == 1.0 == oacc

    def test_identical_experts(self, rng):
        y, (c,) = _random_experts(rng, 40, 1)
        res = pairwise_search(c, c, y)
        assert res.weights == (0.0, 0.05)
        assert res.achieved_accuracy == accuracy(argmax_labels(c), y)
        assert pairwise_oracle(c, c, y) == ((0.0, 0.05), res.achieved_accuracy)

    def test_dominates_singles(self, rng):
        y, (a, b) = _random_experts(rng, 80, 2, skill=0.2)
        res = pairwise_search(a, b, y)
        assert res.achieved_accuracy >= accuracy(argmax_labels(a), y)
        assert res.achieved_accuracy >= accuracy(argmax_labels(b), y)
        assert set(res.weights) <= set(WeightGrid().values.tolist())
        assert any(w > 0 for w in res.weights)

    def test_parallel_equals_serial(self, rng):
        y, (a, b) = _random_experts(rng, 120, 2, skill=0.15)
        assert pairwise_search(a, b, y, n_jobs=4) == pairwise_search(a, b, y)

    def test_shape_errors(self, rng):
        y, (a, b) = _random_experts(rng, 10, 2)
        with pytest.raises(ValueError):
            pairwise_search(a, b[:5], y)
        with pytest.raises(ValueError):
            pairwise_search(a, b, y[:5])

    @settings(max_examples=15, deadline=None)
    @given(st.integers(0, 10_000), st.integers(1, 100), st.sampled_from([(0.05, 1.0), (0.1, 1.0), (0.25, 2.0)]))
    def test_matches_double_loop_oracle(self, seed, n, grid):
        rng = np.random.default_rng(seed)
        y, (a, b) = _random_experts(rng, n, 2, skill=rng.uniform(0, 0.4))
        res = pairwise_search(a, b, y, WeightGrid(*grid))
        ow, oacc = pairwise_oracle(a, b, y, *grid)
        assert res.weights == ow
        assert res.achieved_accuracy == oacc


class TestChained:
    def test_two_experts_equal_pairwise(self, rng):
        y, (a, b) = _random_experts(rng, 60, 2, skill=0.2)
        c = chained_search([a, b], y)
        p = pairwise_search(a, b, y)
        assert c.weights == p.weights
        assert c.achieved_accuracy == p.achieved_accuracy

    def test_flat_weights_reproduce_chain(self, rng):
        y, experts = _random_experts(rng, 50, 3, skill=0.25)
        res = chained_search(experts, y)
        running = experts[0]
        for nxt, (l, r) in zip(experts[1:], res.steps):
            running = l * running + r * nxt
        np.testing.assert_allclose(fuse(experts, res.weights).scores, running, atol=1e-12, rtol=0)
        flat, steps, acc = chained_oracle(experts, y)
        assert list(res.steps) == steps
        np.testing.assert_allclose(res.weights, flat, rtol=1e-15)
        assert res.achieved_accuracy == acc

    def test_monotone_in_experts(self, rng):
        y, experts = _random_experts(rng, 70, 5, skill=0.2)
        accs = [chained_search(experts[:m], y).achieved_accuracy for m in range(2, 6)]
        assert all(b >= a for a, b in zip(accs, accs[1:]))

    def test_needs_two(self, rng):
        y, experts = _random_experts(rng, 5, 1)
        with pytest.raises(ValueError):
            chained_search(experts, y)

    def test_persistence(self, tmp_path, rng):
        y, experts = _random_experts(rng, 30, 3)
        res = chained_search([ProbMatrix(e, f"e{i}") for i, e in enumerate(experts)], y)
        res.save(tmp_path / "w.json")
        back = EnsembleWeights.load(tmp_path / "w.json")
        assert back.weights == res.weights
        assert back.steps == res.steps
        assert back.expert_names == ("e0", "e1", "e2")
        assert back.source_grid == res.source_grid


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.floats(0.01, 100.0))
def test_decisions_scale_invariant(seed, c):
    rng = np.random.default_rng(seed)
    _, experts = _random_experts(rng, 20, 3)
    w = rng.uniform(0.05, 1.0, size=3)
    a = argmax_labels(fuse(experts, list(w)))
    b = argmax_labels(fuse(experts, list(c * w)))
    # rescaling can only matter on exact ties, which random scores do not produce
    np.testing.assert_array_equal(a, b)
