"""Loss values, derivatives, and the empirical risk."""
import math

import numpy as np
import pytest

import clipnet
from clipnet import activations
from clipnet.losses import (
    EXPONENTIAL,
    LOGISTIC,
    SQUARE,
    by_name,
    empirical_risk,
    exp_overflow,
    loss_deriv,
    loss_value,
)
from clipnet.network import MlpSpec, NetworkParams, init_params


class TestLossValue:
    def test_square_at_optimum(self):
        assert loss_value(SQUARE, 1.0, 1.0) == 0.0

    def test_logistic_at_zero_margin(self):
        assert loss_value(LOGISTIC, 1.0, 0.0) == pytest.approx(math.log(2), rel=1e-12)

    def test_exponential_example(self):
        assert loss_value(EXPONENTIAL, -1.0, 0.5) == pytest.approx(math.exp(0.5), rel=1e-12)

    def test_margin_losses_reject_bad_labels(self):
        for kind in (LOGISTIC, EXPONENTIAL):
            with pytest.raises(ValueError, match="labels"):
                loss_value(kind, 0.5, 1.0)

    def test_logistic_stable_at_extreme_margins(self):
        assert loss_value(LOGISTIC, 1.0, -1000.0) == pytest.approx(1000.0)
        assert loss_value(LOGISTIC, 1.0, 1000.0) == 0.0
        assert np.isfinite(loss_deriv(LOGISTIC, 1.0, -1000.0))

    def test_exponential_clamped_not_infinite(self):
        v = loss_value(EXPONENTIAL, 1.0, -800.0)
        assert np.isfinite(v) and v <= 1e300
        assert exp_overflow(1.0, -800.0)
        assert not exp_overflow(1.0, -5.0)

    def test_by_name(self):
        assert by_name("square") is SQUARE
        assert by_name("Logistic") is LOGISTIC
        with pytest.raises(ValueError):
            by_name("hinge")


class TestLossDeriv:
    def test_square_zero_at_minimum(self):
        assert loss_deriv(SQUARE, 0.7, 0.7) == 0.0

    def test_logistic_at_zero_margin(self):
        assert loss_deriv(LOGISTIC, 1.0, 0.0) == pytest.approx(-0.5, rel=1e-12)

    def test_finite_difference_sweep(self):
        rng = np.random.default_rng(0)
        step = 1e-6
        checked = 0
        while checked < 1000:
            kind = (SQUARE, LOGISTIC, EXPONENTIAL)[checked % 3]
            f = float(rng.uniform(-5, 5))
            y = float(rng.uniform(-3, 3)) if kind is SQUARE else float(np.sign(rng.normal()) or 1.0)
            num = (loss_value(kind, y, f + step) - loss_value(kind, y, f - step)) / (2 * step)
            ana = loss_deriv(kind, y, f)
            assert ana == pytest.approx(num, rel=1e-6, abs=1e-9)
            checked += 1


class TestStrictConvexity:
    @pytest.mark.parametrize("kind", [LOGISTIC, EXPONENTIAL], ids=lambda k: k.name)
    def test_positive_second_difference_on_margin_grid(self, kind):
        h = 1e-3
        for z in np.linspace(-10.0, 10.0, 201):
            # loss as a function of the margin: evaluate at y=1, f=z
            second = (
                loss_value(kind, 1.0, z + h)
                - 2.0 * loss_value(kind, 1.0, z)
                + loss_value(kind, 1.0, z - h)
            ) / h ** 2
            assert second > 0.0, f"second difference {second} at margin {z}"


class TestEmpiricalRisk:
    def _perfect_setup(self):
        spec = MlpSpec(1, (1,))
        # relu net computing f(x) = 2x on positive inputs
        params = NetworkParams(
            [np.array([[1.0]]), np.array([[2.0]])], [np.zeros(1), np.zeros(1)]
        )
        X = np.linspace(0.1, 1.0, 8)[:, None]
        return spec, params, X

    def test_perfect_predictor_zero_risk(self):
        spec, params, X = self._perfect_setup()
        y = 2.0 * X[:, 0]
        assert empirical_risk(params, spec, SQUARE, X, y) == 0.0

    def test_zero_network_unit_labels(self):
        spec = MlpSpec(2, (3,))
        params = NetworkParams(
            [np.zeros((3, 2)), np.zeros((1, 3))], [np.zeros(3), np.zeros(1)]
        )
        X = np.random.default_rng(0).random((2, 2))
        y = np.array([1.0, -1.0])
        assert empirical_risk(params, spec, SQUARE, X, y) == 1.0

    def test_matches_naive_summation(self):
        rng = np.random.default_rng(5)
        spec = MlpSpec(3, (4,), activation=activations.tanh())
        params = init_params(spec, 5)
        X = rng.random((7, 3))
        y = rng.normal(size=7)
        naive = 0.0
        for i in range(7):
            pred = clipnet.forward(params, spec, X[i])
            naive += (y[i] - pred) ** 2
        naive /= 7
        assert empirical_risk(params, spec, SQUARE, X, y) == pytest.approx(naive, rel=1e-12)

    def test_empty_data_rejected(self):
        spec = MlpSpec(2, (3,))
        params = init_params(spec, 0)
        with pytest.raises(ValueError):
            empirical_risk(params, spec, SQUARE, np.zeros((0, 2)), np.zeros(0))
