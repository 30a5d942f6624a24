import numpy as np
import pytest

from fedmimic.data import AttackClass
from fedmimic.features import (FeatureRanking, fit_logreg,
                               inverse_frequency_weights, rfe, select_union)


def informative_matrix(n=300, noise_cols=8, seed=0):
    """Two columns carry the label (plus small noise), the rest is pure
    noise. Returns (X, y, informative indices)."""
    rng = np.random.default_rng(seed)
    y = rng.integers(0, 2, n)
    X = rng.random((n, 2 + noise_cols))
    X[:, 3] = y + rng.normal(0, 0.05, n)
    X[:, 7] = 1 - y + rng.normal(0, 0.05, n)
    return X, y, [3, 7]


def brute_force_top_features(X, y, k):
    """Oracle: rank single features by best threshold accuracy."""
    scores = []
    for j in range(X.shape[1]):
        col = X[:, j]
        best = 0.0
        for t in np.quantile(col, np.linspace(0.05, 0.95, 19)):
            acc = max(((col > t) == y).mean(), ((col <= t) == y).mean())
            best = max(best, acc)
        scores.append(best)
    return sorted(np.argsort(scores)[-k:])


class TestLogReg:
    def test_zero_epochs_returns_zero_weights(self):
        X = np.random.default_rng(0).random((10, 3))
        y = np.zeros(10, dtype=int)
        model = fit_logreg(X, y, epochs=0)
        assert (model.weights == 0).all() and model.bias == 0.0

    def test_separable_1d(self):
        rng = np.random.default_rng(1)
        x = np.concatenate([rng.uniform(-2, -1, 100), rng.uniform(1, 2, 100)])
        y = (x > 0).astype(int)
        model = fit_logreg(x.reshape(-1, 1), y, lr=0.1, epochs=200)
        assert (model.predict(x.reshape(-1, 1)) == y).mean() == 1.0

    def test_deterministic(self):
        X, y, _ = informative_matrix(seed=5)
        m1 = fit_logreg(X, y, epochs=50, seed=1)
        m2 = fit_logreg(X, y, epochs=50, seed=2)  # seed is irrelevant: zero init
        assert np.array_equal(m1.weights, m2.weights)

    def test_all_same_label_trains(self):
        X = np.random.default_rng(2).random((20, 4))
        model = fit_logreg(X, np.zeros(20, dtype=int), epochs=20)
        assert np.isfinite(model.weights).all()

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            fit_logreg(np.ones((5, 2)), np.zeros(4, dtype=int))


class TestInverseFrequencyWeights:
    def test_balances_classes(self):
        y = np.array([1, 0, 0, 0])
        w = inverse_frequency_weights(y)
        assert w[y == 1].sum() == pytest.approx(w[y == 0].sum())

    def test_degenerate_target_uniform(self):
        assert (inverse_frequency_weights(np.zeros(5, dtype=int)) == 1.0).all()


class TestRFE:
    def test_identity_when_target_is_all(self):
        X, y, _ = informative_matrix()
        assert rfe(X, y, target_k=X.shape[1]) == list(range(X.shape[1]))

    def test_finds_informative_columns(self):
        X, y, informative = informative_matrix()
        selected = rfe(X, y, target_k=2, step=1)
        assert selected == informative
        assert selected == brute_force_top_features(X, y, 2)

    def test_step_clamps_to_shortfall(self):
        X, y, informative = informative_matrix()
        selected = rfe(X, y, target_k=2, step=100)
        assert len(selected) == 2

    def test_target_too_large(self):
        X, y, _ = informative_matrix()
        with pytest.raises(ValueError):
            rfe(X, y, target_k=X.shape[1] + 1)

    def test_invariant_to_appended_zero_columns(self):
        X, y, informative = informative_matrix()
        padded = np.hstack([X, np.zeros((X.shape[0], 3))])
        assert rfe(padded, y, target_k=2, step=1) == informative

    def test_deterministic(self):
        X, y, _ = informative_matrix(seed=9)
        assert rfe(X, y, target_k=3, seed=0) == rfe(X, y, target_k=3, seed=0)


class TestSelectUnion:
    def _labels_5class(self, n=250, seed=4):
        rng = np.random.default_rng(seed)
        y = rng.integers(0, 5, n)
        X = rng.random((n, 12))
        for c in range(5):
            X[:, c] = (y == c) + rng.normal(0, 0.05, n)
        return X, y

    def test_union_properties(self):
        X, y = self._labels_5class()
        ranking = select_union(X, y, k=3, step=1)
        mask = ranking.union_mask
        assert mask == sorted(set(mask))
        assert 3 <= len(mask) <= 15
        assert all(0 <= i < X.shape[1] for i in mask)
        for indices in ranking.per_class.values():
            assert len(indices) == 3
            assert len(set(indices)) == 3
        # each class's discriminative column survives its own RFE
        for c, cls in enumerate(["DoS", "Normal", "Probe", "R2L", "U2R"]):
            assert c in ranking.per_class[cls]

    def test_absent_class_still_runs(self, caplog):
        X = np.random.default_rng(0).random((60, 6))
        y = np.zeros(60, dtype=int)  # only DoS present
        with caplog.at_level("WARNING"):
            ranking = select_union(X, y, k=2, step=1)
        assert len(ranking.per_class) == 5
        assert len(ranking.union_mask) <= 10
        assert "absent" in caplog.text

    def test_union_deduplicates(self):
        per_class = {"A": [1, 2], "B": [2, 3]}
        assert FeatureRanking.from_per_class(per_class).union_mask == [1, 2, 3]
