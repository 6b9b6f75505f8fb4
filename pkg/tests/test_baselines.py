"""Brute-force k-nearest-neighbour comparator."""
import numpy as np
import pytest

from clipnet.baselines import knn_fit, knn_predict, knn_predict_batch
from clipnet.datagen import Dataset


def make_data(n=30, d=4, seed=0, task="regression"):
    rng = np.random.default_rng(seed)
    X = rng.random((n, d))
    if task == "classification":
        y = np.sign(rng.normal(size=n))
        y[y == 0] = 1.0
    else:
        y = rng.normal(size=n)
    return X, y


class TestFit:
    def test_k_bounds(self):
        X, y = make_data()
        with pytest.raises(ValueError):
            knn_fit((X, y), 0, "regression")
        with pytest.raises(ValueError):
            knn_fit((X, y), 31, "regression")
        knn_fit((X, y), 30, "regression")

    def test_task_validation(self):
        X, y = make_data()
        with pytest.raises(ValueError):
            knn_fit((X, y), 3, "ranking")
        with pytest.raises(ValueError):
            knn_fit((X, y), 3, "classification")  # real-valued targets

    def test_accepts_dataset(self):
        X, y = make_data()
        model = knn_fit(Dataset(X, y), 3, "regression")
        assert model.k == 3


class TestPredict:
    def test_single_training_point(self):
        model = knn_fit((np.array([[0.2, 0.3]]), np.array([1.7])), 1, "regression")
        assert knn_predict(model, [0.9, 0.9]) == 1.7

    def test_k_equals_n_is_global_mean(self):
        X, y = make_data(n=20)
        model = knn_fit((X, y), 20, "regression")
        queries = np.random.default_rng(1).random((10, 4))
        preds = knn_predict_batch(model, queries)
        np.testing.assert_allclose(preds, np.mean(y), rtol=1e-12)

    def test_k1_memorizes_training_points(self):
        X, y = make_data(n=15)
        model = knn_fit((X, y), 1, "regression")
        preds = knn_predict_batch(model, X)
        np.testing.assert_array_equal(preds, y)

    def test_two_equidistant_neighbors_average(self):
        X = np.array([[0.0, 1.0], [0.0, -1.0], [5.0, 5.0]])
        y = np.array([0.0, 2.0, 100.0])
        model = knn_fit((X, y), 2, "regression")
        assert knn_predict(model, [0.0, 0.0]) == 1.0

    def test_distance_ties_break_to_lower_index(self):
        # both training points sit at distance 1 from the query
        X = np.array([[1.0, 0.0], [-1.0, 0.0]])
        y = np.array([3.0, 7.0])
        model = knn_fit((X, y), 1, "regression")
        assert knn_predict(model, [0.0, 0.0]) == 3.0

    def test_classification_sign_of_mean_ties_positive(self):
        X = np.array([[0.0, 0.5], [0.0, -0.5], [3.0, 3.0]])
        y = np.array([1.0, -1.0, -1.0])
        model = knn_fit((X, y), 2, "classification")
        # the two nearest vote +1 and -1; ties go to +1
        assert knn_predict(model, [0.0, 0.0]) == 1.0

    def test_matches_exhaustive_scan_oracle(self):
        X, y = make_data(n=80, d=5, seed=3)
        rng = np.random.default_rng(4)
        queries = rng.random((200, 5))
        for k in (1, 3, 7):
            model = knn_fit((X, y), k, "regression")
            preds = knn_predict_batch(model, queries)
            for q, pred in zip(queries, preds):
                d2 = [float(np.sum((q - X[i]) ** 2)) for i in range(80)]
                order = sorted(range(80), key=lambda i: (d2[i], i))[:k]
                assert pred == pytest.approx(np.mean(y[order]), rel=1e-12)

    def test_row_permutation_invariance_off_ties(self):
        X, y = make_data(n=40, d=3, seed=6)
        queries = np.random.default_rng(7).random((25, 3))
        model = knn_fit((X, y), 5, "regression")
        perm = np.random.default_rng(8).permutation(40)
        permuted = knn_fit((X[perm], y[perm]), 5, "regression")
        np.testing.assert_allclose(
            knn_predict_batch(model, queries),
            knn_predict_batch(permuted, queries), rtol=1e-12,
        )

    def test_query_dimension_checked(self):
        X, y = make_data()
        model = knn_fit((X, y), 3, "regression")
        with pytest.raises(ValueError):
            knn_predict_batch(model, np.zeros((2, 5)))
