"""Bound calculators, the parameter-Lipschitz verifier, and the identity net."""
import math

import numpy as np
import pytest

from clipnet import activations
from clipnet.network import MlpSpec, flatten, forward_batch
from clipnet.penalty import clipped_norm
from clipnet.theory import (
    ClassParams,
    covering_bound,
    covering_bound_clipped,
    hard_threshold,
    identity_error,
    identity_net,
    input_grid,
    lipschitz_bound,
    second_derivative,
    verify_lipschitz,
)


class TestCoveringBound:
    def test_zero_at_scale_radius(self):
        value, vacuous = covering_bound(ClassParams(L=1, N=1, B=1.0, S=1.0, delta=4.0))
        assert value == 0.0
        assert not vacuous

    def test_unit_log_example(self):
        value, _ = covering_bound(ClassParams(L=1, N=1, B=1.0, S=1.0, delta=4.0 / math.e))
        assert value == pytest.approx(4.0, rel=1e-12)

    def test_linear_in_sparsity_budget(self):
        a = covering_bound(ClassParams(L=2, N=3, B=1.5, S=5.0, delta=0.7)).value
        b = covering_bound(ClassParams(L=2, N=3, B=1.5, S=10.0, delta=0.7)).value
        assert b == pytest.approx(2.0 * a, rel=1e-12)

    def test_vacuous_flag_when_radius_exceeds_scale(self):
        value, vacuous = covering_bound(ClassParams(L=1, N=1, B=1.0, S=1.0, delta=8.0))
        assert value < 0.0
        assert vacuous

    def test_validation(self):
        with pytest.raises(ValueError):
            ClassParams(L=1, N=1, B=0.5, S=1.0, delta=1.0)
        with pytest.raises(ValueError):
            ClassParams(L=1, N=1, B=1.0, S=1.0, delta=0.0)


class TestCoveringBoundClipped:
    def test_tau_zero_reduces_to_plain(self):
        p = ClassParams(L=2, N=4, B=1.2, S=3.0, delta=1.1, tau=0.0)
        assert covering_bound_clipped(p).value == covering_bound(p).value

    def test_shift_cancellation_example(self):
        # zeta = 2 * (2*1)^2 = 8; delta = 4/e + 0.8 puts the shifted radius
        # back at 4/e, so the bound equals the plain one there
        p = ClassParams(L=1, N=1, B=1.0, S=1.0, delta=4.0 / math.e + 0.8, tau=0.1)
        assert covering_bound_clipped(p).value == pytest.approx(4.0, rel=1e-12)

    def test_boundary_radius_rejected(self):
        p = ClassParams(L=1, N=1, B=1.0, S=1.0, delta=0.8, tau=0.1)
        with pytest.raises(ValueError, match="must exceed"):
            covering_bound_clipped(p)

    def test_converges_to_plain_as_tau_vanishes(self):
        base = ClassParams(L=2, N=3, B=1.5, S=4.0, delta=2.0)
        plain = covering_bound(base).value
        values = []
        for k in range(3, 12):
            p = ClassParams(L=2, N=3, B=1.5, S=4.0, delta=2.0, tau=10.0 ** -k)
            values.append(covering_bound_clipped(p).value)
        gaps = [abs(v - plain) for v in values]
        assert all(a >= b for a, b in zip(gaps, gaps[1:]))
        assert gaps[-1] < 1e-6


class TestLipschitzBound:
    def test_small_example(self):
        assert lipschitz_bound(1, 1, 1.0) == 8.0

    def test_no_hidden_layer_edge(self):
        assert lipschitz_bound(0, 3, 2.0) == 8.0  # 1 * ((3+1)*2)^1

    def test_monotone_in_each_argument(self):
        for L in (1, 2):
            for N in (1, 2, 4):
                for B in (1.0, 1.5, 2.0):
                    base = lipschitz_bound(L, N, B)
                    assert lipschitz_bound(L + 1, N, B) >= base
                    assert lipschitz_bound(L, N + 1, B) >= base
                    assert lipschitz_bound(L, N, B + 0.5) >= base

    def test_requires_b_at_least_one(self):
        with pytest.raises(ValueError):
            lipschitz_bound(1, 1, 0.5)


class TestVerifyLipschitz:
    def test_zero_violations_on_relu_nets(self):
        rng = np.random.default_rng(0)
        for _ in range(12):
            d = int(rng.integers(1, 4))
            depth = int(rng.integers(1, 3))
            widths = tuple(int(rng.integers(1, 5)) for _ in range(depth))
            spec = MlpSpec(d, widths, activation=activations.relu())
            B = float(rng.uniform(1.0, 2.0))
            report = verify_lipschitz(spec, B, trials=10, grid_size=500,
                                      seed=int(rng.integers(1 << 30)))
            assert report.violations == 0
            assert report.max_ratio <= 1.0

    def test_rejects_unsuitable_activation(self):
        spec = MlpSpec(2, (3,), activation=activations.sigmoid())
        with pytest.raises(ValueError, match="1-Lipschitz"):
            verify_lipschitz(spec, 1.0, trials=1, grid_size=10, seed=0)

    def test_input_grid_structure(self):
        grid = input_grid(2, 100)
        assert grid.shape == (100, 2)
        assert grid.min() == 0.0 and grid.max() == 1.0
        line = input_grid(1, 11)
        np.testing.assert_allclose(line[:, 0], np.linspace(0, 1, 11))


class TestIdentityNet:
    def test_sigmoid_reaches_target_error(self):
        built = identity_net(0.0, 1e-2, activations.sigmoid())
        assert built.sup_error <= 1e-2
        xs = np.linspace(0.0, 1.0, 2000)
        preds = forward_batch(flatten(built.params), built.spec, xs[:, None])
        assert float(np.max(np.abs(preds - xs))) <= 1e-2

    @pytest.mark.parametrize("act", [activations.tanh(), activations.softplus()],
                             ids=lambda a: a.name)
    def test_other_locally_quadratic_activations(self, act):
        built = identity_net(0.0, 1e-2, act)
        assert built.sup_error <= 1e-2

    def test_margin_extends_the_interval(self):
        built = identity_net(0.5, 1e-2, activations.sigmoid())
        xs = np.linspace(-0.5, 1.5, 4000)
        preds = forward_batch(flatten(built.params), built.spec, xs[:, None])
        assert float(np.max(np.abs(preds - xs))) <= 1e-2

    def test_sigmoid_flat_point_rejected(self):
        # the sigmoid's second derivative vanishes at the origin
        sig = activations.sigmoid()
        sym = lambda z: (lambda s: s * (1 - s) * (1 - 2 * s))(1 / (1 + np.exp(-z)))
        assert sym(0.0) == 0.0
        assert second_derivative(sig, 0.0) == pytest.approx(0.0, abs=1e-8)
        assert second_derivative(sig, 1.0) == pytest.approx(sym(1.0), abs=1e-8)
        with pytest.raises(ValueError, match="rho''"):
            identity_net(0.0, 1e-2, sig, t=0.0)

    def test_piecewise_linear_rejected(self):
        with pytest.raises(ValueError, match="second derivative"):
            identity_net(0.0, 1e-2, activations.relu())

    def test_error_decreases_as_scale_doubles(self):
        sig = activations.sigmoid()
        built = identity_net(0.0, 1e-2, sig)
        errors = [identity_error(sig, built.t, built.scale * 2.0 ** i, 0.0)
                  for i in range(4)]
        assert all(a > b for a, b in zip(errors, errors[1:]))

    def test_construction_shape(self):
        built = identity_net(0.0, 1e-2, activations.tanh())
        assert built.spec.hidden_widths == (1,)
        assert built.params.weights[0].shape == (1, 1)
        assert built.c1 > 0


class TestHardThreshold:
    def test_zero_tau_keeps_everything(self):
        theta = np.array([0.5, -0.2, 0.0, 3.0])
        np.testing.assert_array_equal(hard_threshold(theta, 0.0), theta)

    def test_large_tau_wipes_everything(self):
        theta = np.array([0.5, -0.2, 3.0])
        np.testing.assert_array_equal(hard_threshold(theta, 3.0), np.zeros(3))

    def test_never_grows_and_l0_below_clipped_norm(self):
        rng = np.random.default_rng(1)
        for _ in range(1000):
            theta = rng.normal(size=15) * rng.choice([0.01, 0.1, 1.0], size=15)
            tau = float(rng.uniform(0.01, 1.5))
            kept = hard_threshold(theta, tau)
            assert np.all(np.abs(kept) <= np.abs(theta))
            l0 = float(np.count_nonzero(kept))
            clip = clipped_norm(theta, tau)
            assert l0 <= clip + 1e-12
            assert clip <= np.count_nonzero(theta) + 1e-12

    def test_negative_tau_rejected(self):
        with pytest.raises(ValueError):
            hard_threshold(np.ones(2), -0.1)
