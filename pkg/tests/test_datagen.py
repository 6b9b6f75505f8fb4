"""Simulated data generators, calibration, and the test-error metric."""
import numpy as np
import pytest
from scipy import integrate

from clipnet import datagen
from clipnet.datagen import (
    Dataset,
    calibrate_constant,
    empirical_l2_error,
    gen_classification_toy,
    gen_regression,
    load_dataset,
    noise_variance_ratio,
    save_dataset,
    signal_scale,
    toy_score,
    true_function,
    true_function_batch,
)


class TestTrueFunctions:
    def test_f1_at_origin(self):
        assert true_function(1, np.zeros(10)) == 0.0

    def test_f2_at_origin(self):
        assert true_function(2, np.zeros(10)) == 0.0

    def test_f1_at_ones_alternating_sum(self):
        expected = sum((-1.0) ** j / j for j in range(1, 11))
        assert true_function(1, np.ones(10)) == pytest.approx(expected, rel=1e-12)
        assert expected == pytest.approx(-0.645635, abs=1e-6)

    def test_invalid_index(self):
        with pytest.raises(ValueError):
            true_function(0, np.zeros(10))
        with pytest.raises(ValueError):
            true_function(7, np.zeros(10))

    def test_wrong_dimension(self):
        with pytest.raises(ValueError):
            true_function(1, np.zeros(9))

    def test_batch_matches_pointwise(self):
        rng = np.random.default_rng(0)
        X = rng.random((40, 10))
        for m in range(1, 7):
            batch = true_function_batch(m, X)
            point = np.array([true_function(m, x) for x in X])
            np.testing.assert_allclose(batch, point, rtol=1e-12)

    def test_f5_indicator_switches(self):
        x = np.full(10, 0.5)
        x[1], x[2] = 0.9, 0.5  # x2 >= x3^2 active
        active = true_function(5, x)
        x[1] = 0.1  # 0.1 < 0.25 inactive
        inactive = true_function(5, x)
        norm_active = np.sqrt(np.sum(np.array([0.5] * 10) ** 2) - 0.25 + 0.81)
        assert active - inactive == pytest.approx(3.0 * np.exp(norm_active)
                                                  - 0.0, rel=1e-6)


class TestCalibration:
    def test_f1_against_analytic_variance(self):
        # Var of the weighted uniform sum: (1/12) * sum j^-2
        v1 = sum(1.0 / j ** 2 for j in range(1, 11)) / 12.0
        expected = np.sqrt(19.0 / v1)
        assert calibrate_constant(1, 200_000, 0) == pytest.approx(expected, rel=0.02)

    def test_deterministic(self):
        a = calibrate_constant(2, 100_000, 3)
        b = calibrate_constant(2, 100_000, 3)
        assert a == b

    def test_sample_floor(self):
        with pytest.raises(ValueError):
            calibrate_constant(1, 10_000, 0)

    def test_noise_ratio_near_five_percent(self):
        # Same design as the internal calibration pass, so the signal part
        # is matched exactly and only the drawn noise fluctuates.
        assert 0.045 <= noise_variance_ratio(1, 1_000_000, 0) <= 0.055

    def test_calibrated_signal_variance_near_target(self):
        rng = np.random.default_rng(1234)
        X = rng.random((1_000_000, 10))
        v = np.var(signal_scale(1) * true_function_batch(1, X))
        assert 18.0 <= v <= 20.0


class TestGenRegression:
    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            gen_regression(1, 0, 0)

    def test_deterministic(self):
        a = gen_regression(1, 50, 7)
        b = gen_regression(1, 50, 7)
        np.testing.assert_array_equal(a.inputs, b.inputs)
        np.testing.assert_array_equal(a.targets, b.targets)

    def test_inputs_in_unit_cube(self):
        ds = gen_regression(3, 500, 1)
        assert np.all(ds.inputs >= 0.0) and np.all(ds.inputs <= 1.0)
        assert ds.meta["generator"] == "f3"
        assert ds.meta["c_m"] == signal_scale(3)

    def test_noise_mean_small(self):
        ds = gen_regression(1, 1_000_000, 11)
        eps = ds.targets - ds.meta["c_m"] * true_function_batch(1, ds.inputs)
        assert abs(np.mean(eps)) < 0.005


class TestClassificationToy:
    def test_centering_constant(self):
        ds = gen_classification_toy(5, 10, 0)
        assert ds.meta["mu"] == pytest.approx(2.0 / 3.0, rel=1e-12)

    def test_score_mean_near_zero(self):
        rng = np.random.default_rng(3)
        X = rng.random((1_000_000, 5))
        assert abs(np.mean(toy_score(5, X))) < 0.002

    def test_labels_are_signs(self):
        ds = gen_classification_toy(6, 300, 5)
        assert set(np.unique(ds.targets)) <= {-1.0, 1.0}

    def test_deterministic(self):
        a = gen_classification_toy(5, 40, 2)
        b = gen_classification_toy(5, 40, 2)
        np.testing.assert_array_equal(a.targets, b.targets)

    def test_positive_rate_matches_independent_integrator(self):
        # P(y=1) = E sigmoid(x1^2 + x2^2 - 2/3) for d=5, by 2-d quadrature
        expected, _ = integrate.dblquad(
            lambda a, b: 1.0 / (1.0 + np.exp(-(a ** 2 + b ** 2 - 2.0 / 3.0))),
            0.0, 1.0, 0.0, 1.0,
        )
        ds = gen_classification_toy(5, 200_000, 8)
        rate = float(np.mean(ds.targets == 1.0))
        assert rate == pytest.approx(expected, abs=0.01)

    def test_dimension_floor(self):
        with pytest.raises(ValueError):
            gen_classification_toy(1, 10, 0)


class TestEmpiricalL2:
    def test_true_predictor_scores_zero(self):
        predictor = lambda X: datagen.calibrated_target_batch(2, X)
        assert empirical_l2_error(predictor, 2, 5000, 0) == 0.0

    def test_zero_predictor_scores_signal_second_moment(self):
        # E[(c1 f1)^2] = Var + mean^2 = 19 + c1^2 (sum_j (-1)^j/j / 2)^2;
        # the signal mean is not zero, so this exceeds the 19 variance target.
        mean1 = 0.5 * sum((-1.0) ** j / j for j in range(1, 11))
        var1 = sum(1.0 / j ** 2 for j in range(1, 11)) / 12.0
        expected = 19.0 + (19.0 / var1) * mean1 ** 2
        err = empirical_l2_error(lambda X: np.zeros(len(X)), 1, 100_000, 1)
        assert err == pytest.approx(expected, rel=0.02)

    def test_constant_mean_predictor_scores_signal_variance(self):
        # Against the mean-corrected constant predictor the L2 error is the
        # calibrated signal variance, 19 by construction.
        mean1 = 0.5 * sum((-1.0) ** j / j for j in range(1, 11))
        c1 = signal_scale(1)
        err = empirical_l2_error(
            lambda X: np.full(len(X), c1 * mean1), 1, 100_000, 1
        )
        assert err == pytest.approx(19.0, rel=0.02)

    def test_deterministic(self):
        predictor = lambda X: X[:, 0]
        a = empirical_l2_error(predictor, 1, 1000, 5)
        b = empirical_l2_error(predictor, 1, 1000, 5)
        assert a == b


class TestSerialization:
    def test_roundtrip(self, tmp_path):
        ds = gen_regression(1, 25, 0)
        path = tmp_path / "data.csv"
        save_dataset(ds, path)
        loaded = load_dataset(path)
        np.testing.assert_array_equal(loaded.inputs, ds.inputs)
        np.testing.assert_array_equal(loaded.targets, ds.targets)
        assert loaded.meta["generator"] == "f1"
        assert loaded.meta["c_m"] == ds.meta["c_m"]
        header = path.read_text().splitlines()[0]
        assert header == ",".join([f"x{j}" for j in range(1, 11)] + ["y"])

    def test_dataset_validation(self):
        with pytest.raises(ValueError):
            Dataset(np.zeros((0, 3)), np.zeros(0))
        with pytest.raises(ValueError):
            Dataset(np.zeros((4, 3)), np.zeros(5))
