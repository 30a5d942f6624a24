import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fedmimic.data import Dataset
from fedmimic.fedsim import (TAG_CLIENT, TAG_INIT, ClientShard, RoundHistory,
                             RoundRecord, derive_seed, fedavg, run_fl)
from fedmimic.nn import ModelParams, TrainConfig, init_model, train_local

from conftest import toy_separable
from test_nn import models_equal


def scalar_model(w):
    return ModelParams([np.array([[float(w)]])], [np.zeros(1)], [1])


def max_param_diff(a, b):
    return max(max(np.abs(x - y).max() for x, y in zip(a.weights, b.weights)),
               max(np.abs(x - y).max() for x, y in zip(a.biases, b.biases)))


def make_shards(num_clients=3, per_client=40, seed=0):
    X, y = toy_separable(num_clients * per_client, seed=seed)
    return [ClientShard(c, Dataset(X[c * per_client:(c + 1) * per_client],
                                   y[c * per_client:(c + 1) * per_client]))
            for c in range(num_clients)]


FAST = TrainConfig(epochs=2, batch_size=16, dropout_rate=0.0, seed=0)


class TestFedAvg:
    def test_identical_models_average_to_themselves(self):
        m = init_model(4, 6, 5, seed=1)
        avg = fedavg([m.copy(), m.copy(), m.copy()])
        assert max_param_diff(avg, m) < 1e-7

    def test_scalar_mean(self):
        avg = fedavg([scalar_model(1.0), scalar_model(3.0)])
        assert avg.weights[0][0, 0] == 2.0

    def test_weighted_mean(self):
        avg = fedavg([scalar_model(0.0), scalar_model(4.0)], [1.0, 3.0])
        assert avg.weights[0][0, 0] == 3.0

    def test_single_model_identity(self):
        m = init_model(3, 4, 5, seed=2)
        assert models_equal(fedavg([m]), m)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            fedavg([])

    def test_shape_mismatch_rejected(self):
        with pytest.raises(ValueError):
            fedavg([init_model(3, 4, 5, seed=0), init_model(4, 4, 5, seed=0)])

    def test_bad_weights_rejected(self):
        models = [scalar_model(1.0), scalar_model(2.0)]
        with pytest.raises(ValueError):
            fedavg(models, [0.0, 0.0])
        with pytest.raises(ValueError):
            fedavg(models, [1.0, -1.0])

    @given(values=st.lists(st.floats(-10, 10), min_size=2, max_size=5),
           scale=st.floats(0.1, 100))
    @settings(max_examples=50, deadline=None)
    def test_permutation_and_scale_invariance(self, values, scale):
        models = [scalar_model(v) for v in values]
        weights = [1.0 + i for i in range(len(values))]
        base = fedavg(models, weights)
        perm = np.random.default_rng(0).permutation(len(values))
        permuted = fedavg([models[i] for i in perm],
                          [weights[i] for i in perm])
        scaled = fedavg(models, [w * scale for w in weights])
        assert abs(base.weights[0][0, 0] - permuted.weights[0][0, 0]) < 1e-12
        assert abs(base.weights[0][0, 0] - scaled.weights[0][0, 0]) < 1e-12


class TestRunFl:
    def test_zero_rounds_returns_seeded_init(self):
        shards = make_shards()
        test = Dataset(*toy_separable(30, seed=9))
        model, history = run_fl(shards, test, rounds=0, config=FAST, seed=5,
                                hidden=6)
        expected = init_model(4, 6, 5, seed=derive_seed(5, TAG_INIT))
        assert models_equal(model, expected)
        assert history.rounds == []

    def test_one_client_one_round_equals_train_local(self):
        shards = make_shards(num_clients=1)
        test = Dataset(*toy_separable(30, seed=9))
        model, _ = run_fl(shards, test, rounds=1, config=FAST, seed=3, hidden=6)
        init = init_model(4, 6, 5, seed=derive_seed(3, TAG_INIT))
        cfg = TrainConfig(**{**vars(FAST),
                             "seed": derive_seed(3, TAG_CLIENT, 0, 0)})
        direct, _ = train_local(init, shards[0].data.X, shards[0].data.y, cfg)
        assert max_param_diff(model, direct) < 1e-7

    def test_local_fit_count(self):
        shards = make_shards(num_clients=3)
        test = Dataset(*toy_separable(30, seed=9))
        _, history = run_fl(shards, test, rounds=4, config=FAST, seed=1,
                            hidden=6)
        assert history.total_local_fits == 3 * 4
        assert all(r.local_fits == 3 for r in history.rounds)

    def test_deterministic_history(self):
        shards = make_shards()
        test = Dataset(*toy_separable(30, seed=9))
        _, h1 = run_fl(shards, test, rounds=2, config=FAST, seed=2, hidden=6)
        _, h2 = run_fl(shards, test, rounds=2, config=FAST, seed=2, hidden=6)
        assert h1.to_csv() == h2.to_csv()

    def test_thread_count_invariant(self):
        shards = make_shards()
        test = Dataset(*toy_separable(30, seed=9))
        m1, h1 = run_fl(shards, test, rounds=2, config=FAST, seed=2, hidden=6,
                        threads=1)
        m3, h3 = run_fl(shards, test, rounds=2, config=FAST, seed=2, hidden=6,
                        threads=3)
        assert models_equal(m1, m3)
        assert h1.to_csv() == h3.to_csv()

    def test_empty_shards_rejected(self):
        with pytest.raises(ValueError):
            run_fl([], Dataset(*toy_separable(10)), rounds=1)

    def test_learns_toy_problem(self):
        shards = make_shards(num_clients=3, per_client=60)
        X, y = toy_separable(60, seed=12)
        _, history = run_fl(shards, Dataset(X, y), rounds=3,
                            config=TrainConfig(epochs=5, batch_size=16,
                                               dropout_rate=0.0),
                            seed=0, hidden=12)
        assert history.rounds[-1].test_accuracy > 90.0


def test_history_csv_round_trip_fields():
    history = RoundHistory([
        RoundRecord(0, 50.0, {0: 0.5, 1: 0.25}, 2),
        RoundRecord(1, 75.0, {0: 0.4, 1: 0.2}, 2),
    ])
    lines = history.to_csv().splitlines()
    assert lines[0] == "round,test_accuracy,local_fits,loss_client_0,loss_client_1"
    assert lines[1].startswith("0,50.0000,2,")
