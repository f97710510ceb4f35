import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gradcheck import checked_configs, gradient_error
from sievevar.numerics import RngStream, sample_quantile
from sievevar.sieve_net import (
    DivergenceError,
    SieveNetArch,
    SieveNetParams,
    TrainConfig,
    active_units,
    forward,
    grow,
    init_params,
    loss,
    predict,
    sieve_order_schedule,
    train,
)


def one_unit(activation="relu", clip=None):
    arch = SieveNetArch(1, (1,), activation, clip)
    return SieveNetParams(arch, [[[1.0]]], [[0.0]], [1.0], 0.0)


class TestArch:
    def test_param_count_two_layer(self):
        # (d+1)k + k'(k+1) + (k'+1)
        arch = SieveNetArch(3, (4, 5))
        assert arch.n_params == 4 * 4 + 5 * 5 + 6

    @pytest.mark.parametrize("kwargs", [
        dict(input_dim=0),
        dict(input_dim=1, hidden_sizes=()),
        dict(input_dim=1, hidden_sizes=(1, 1, 1)),
        dict(input_dim=1, hidden_sizes=(0,)),
        dict(input_dim=1, activation="clipped_relu"),
        dict(input_dim=1, activation="clipped_relu", clip=-1.0),
        dict(input_dim=1, activation="tanh"),
    ])
    def test_invalid(self, kwargs):
        with pytest.raises(ValueError):
            SieveNetArch(**kwargs)


class TestForward:
    def test_reduces_to_relu(self):
        p = one_unit()
        assert forward(p, [3.0]) == 3.0
        assert forward(p, [-2.0]) == 0.0

    def test_clipped(self):
        assert forward(one_unit("clipped_relu", 6.0), [10.0]) == 6.0

    def test_constant_head(self):
        arch = SieveNetArch(2, (3, 4))
        p = init_params(arch, RngStream(0))
        p = SieveNetParams(arch, p.weights, p.biases, np.zeros(4), 5.0)
        for z in ([0.0, 0.0], [10.0, -3.0], [-1e3, 7.0]):
            assert forward(p, z) == 5.0

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            forward(one_unit(), [1.0, 2.0])

    def test_linear_inputs(self):
        arch = SieveNetArch(1, (1,), linear_dim=2)
        p = SieveNetParams(arch, [[[1.0]]], [[0.0]], [1.0], 0.5, [2.0, -1.0])
        assert forward(p, [1.0], [1.0, 3.0]) == pytest.approx(1.0 + 0.5 + 2.0 - 3.0)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 10_000))
    def test_permutation_symmetry(self, seed):
        arch = SieveNetArch(3, (6,))
        p = init_params(arch, RngStream(seed))
        p.out_weights = np.random.default_rng(seed).standard_normal(6)
        perm = np.random.default_rng(seed + 1).permutation(6)
        q = SieveNetParams(arch, [p.weights[0][perm]], [p.biases[0][perm]],
                           p.out_weights[perm], p.out_bias)
        Z = np.random.default_rng(seed + 2).standard_normal((20, 3))
        # the hidden-layer sum is reordered, so compare up to rounding
        np.testing.assert_allclose(predict(p, Z), predict(q, Z), rtol=0, atol=1e-12)

    def test_permutation_single_point_exact(self):
        arch = SieveNetArch(1, (2,))
        p = SieveNetParams(arch, [[[1.0], [-1.0]]], [[0.5, 0.25]], [2.0, 3.0], 1.0)
        q = SieveNetParams(arch, [[[-1.0], [1.0]]], [[0.25, 0.5]], [3.0, 2.0], 1.0)
        for z in (-2.0, 0.0, 0.1, 4.0):
            assert forward(p, [z]) == forward(q, [z])

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 10_000), st.floats(0.5, 3.0), st.floats(0.5, 5.0))
    def test_clipping_bound(self, seed, clip, bound):
        arch = SieveNetArch(2, (8,), "clipped_relu", clip)
        rng = np.random.default_rng(seed)
        p = init_params(arch, RngStream(seed))
        w = rng.standard_normal(8)
        w *= bound / np.abs(w).sum()
        p = SieveNetParams(arch, [p.weights[0] * 50], p.biases, w, rng.normal())
        Z = rng.standard_normal((200, 2)) * 100
        assert np.all(np.abs(predict(p, Z)) <= abs(p.out_bias) + 8 * bound * clip + 1e-9)


class TestLoss:
    def test_perfect_fit(self):
        p = one_unit()
        Z = np.array([[1.0], [2.0]])
        assert loss(p, Z, [1.0, 2.0], TrainConfig()) == 0.0

    def test_median_pinball(self):
        arch = SieveNetArch(1, (1,))
        p = SieveNetParams(arch, [[[0.0]]], [[0.0]], [0.0], 1.0)
        cfg = TrainConfig(loss="pinball", alpha=0.5)
        assert loss(p, np.zeros((2, 1)), [0.0, 2.0], cfg) == pytest.approx(0.5)

    def test_pinball_grid_minimizer_is_quantile(self):
        data = np.random.default_rng(0).standard_normal(200)
        arch = SieveNetArch(1, (1,))
        cfg = TrainConfig(loss="pinball", alpha=0.01)
        grid = np.linspace(-4, 0, 4001)
        values = [loss(SieveNetParams(arch, [[[0.0]]], [[0.0]], [0.0], c),
                       np.zeros((200, 1)), data, cfg) for c in grid]
        values = np.array(values)
        # pinball is flat between neighbouring order statistics
        flat = grid[values <= values.min() + 1e-12]
        q = sample_quantile(data, 0.01)
        step = grid[1] - grid[0]
        assert flat.min() - step <= q <= flat.max() + step

    def test_l1_term(self):
        p = one_unit()
        p.out_weights = np.array([-2.0])
        cfg = TrainConfig(l1_penalty=0.1)
        assert loss(p, [[1.0]], [-2.0], cfg) == pytest.approx(0.2)

    def test_empty(self):
        with pytest.raises(ValueError):
            loss(one_unit(), np.zeros((0, 1)), [], TrainConfig())

    @given(st.floats(0.01, 0.99), st.lists(st.floats(-100, 100), min_size=1, max_size=20))
    def test_pinball_nonnegative(self, alpha, ys):
        arch = SieveNetArch(1, (1,))
        p = SieveNetParams(arch, [[[0.3]]], [[0.1]], [1.2], -0.4)
        cfg = TrainConfig(loss="pinball", alpha=alpha)
        assert loss(p, np.ones((len(ys), 1)), ys, cfg) >= 0


class TestGradient:
    @pytest.mark.parametrize("seed", range(0, 20))
    def test_matches_finite_differences(self, seed):
        _, params, Z, X, y, cfg = next(checked_configs(1, start=seed * 1000))
        assert gradient_error(params, Z, X, y, cfg) <= 1e-4


class TestTrain:
    def test_constant_target(self):
        Z = np.linspace(-1, 1, 50)[:, None]
        res = train(SieveNetArch(1, (5,)), TrainConfig(max_epochs=500), Z, np.full(50, 3.7))
        assert np.mean((predict(res.params, Z) - 3.7) ** 2) <= 1e-4

    def test_trace_and_monotone_best(self):
        rng = np.random.default_rng(1)
        Z = rng.standard_normal((80, 2))
        y = np.sin(Z[:, 0]) + 0.1 * rng.standard_normal(80)
        res = train(SieveNetArch(2, (8,)), TrainConfig(max_epochs=300, tol=0), Z, y)
        assert res.loss_trace.shape == (300,) and res.epochs == 300
        final = np.mean((predict(res.params, Z) - y) ** 2)
        assert final <= res.loss_trace[0] + 1e-12
        assert final == pytest.approx(res.loss_trace.min(), rel=1e-8)

    def test_large_l1_gives_intercept_only(self):
        rng = np.random.default_rng(2)
        Z = rng.standard_normal((100, 1))
        y = 2 * Z[:, 0] + 1 + 0.1 * rng.standard_normal(100)
        res = train(SieveNetArch(1, (6,)), TrainConfig(l1_penalty=1e3, max_epochs=2000, tol=0), Z, y)
        assert np.all(np.abs(res.params.out_weights) < 1e-3)
        assert active_units(res.params, 1e-3) == 0
        np.testing.assert_allclose(predict(res.params, Z), y.mean(), atol=1e-6)

    def test_deterministic(self):
        rng = np.random.default_rng(3)
        Z = rng.standard_normal((60, 1))
        y = np.abs(Z[:, 0])
        cfg = TrainConfig(max_epochs=100, seed=9)
        a = train(SieveNetArch(1, (4,)), cfg, Z, y)
        b = train(SieveNetArch(1, (4,)), cfg, Z, y)
        assert np.array_equal(a.params.to_vector(), b.params.to_vector())
        assert np.array_equal(a.loss_trace, b.loss_trace)

    @pytest.mark.filterwarnings("ignore::RuntimeWarning")
    def test_divergence_reports_epoch(self):
        Z = np.linspace(-1, 1, 20)[:, None]
        cfg = TrainConfig(learning_rate=1e6, momentum=0.0, max_epochs=200, standardize=False)
        with pytest.raises(DivergenceError) as err:
            train(SieveNetArch(1, (20,)), cfg, Z * 1e3, Z[:, 0] * 1e3)
        assert err.value.epoch >= 1

    def test_weight_bound_projection(self):
        rng = np.random.default_rng(4)
        Z = rng.standard_normal((50, 1))
        y = 5 * Z[:, 0]
        cfg = TrainConfig(weight_bound=0.5, standardize=False, max_epochs=100)
        res = train(SieveNetArch(1, (5,)), cfg, Z, y)
        p = res.params
        assert np.abs(p.out_weights).sum() + abs(p.out_bias) <= 0.5 + 1e-12

    def test_pinball_training_hits_quantile(self):
        rng = np.random.default_rng(5)
        Z = rng.uniform(-1, 1, (400, 1))
        y = rng.standard_normal(400)
        cfg = TrainConfig(loss="pinball", alpha=0.1, max_epochs=1500, tol=0)
        res = train(SieveNetArch(1, (2,)), cfg, Z, y)
        assert np.mean(y < predict(res.params, Z)) == pytest.approx(0.1, abs=0.04)

    def test_warm_start_nesting(self):
        rng = np.random.default_rng(6)
        Z = rng.standard_normal((100, 1))
        y = np.sin(2 * Z[:, 0])
        cfg = TrainConfig(max_epochs=200)
        small = train(SieveNetArch(1, (3,)), cfg, Z, y)
        big = grow(small.params, 1, RngStream(1))
        np.testing.assert_allclose(predict(big, Z), predict(small.params, Z), rtol=0, atol=1e-12)
        res = train(big.arch, cfg, Z, y, init=big)
        small_final = np.mean((predict(small.params, Z) - y) ** 2)
        assert res.loss_trace[0] <= small_final * (1 + 1e-10)
        assert res.loss_trace.min() <= small_final * (1 + 1e-10)

    def test_solve_output_chaos_like_fit(self):
        z = np.linspace(-2, 2, 200)
        y = np.sin(3 * z)
        cfg = TrainConfig(optimizer="adam", learning_rate=0.01, init="quantile",
                          solve_output=True, max_epochs=500)
        res = train(SieveNetArch(1, (20,)), cfg, z[:, None], y)
        assert np.mean((predict(res.params, z[:, None]) - y) ** 2) < 1e-2

    def test_solve_output_rejects_l1(self):
        with pytest.raises(ValueError):
            TrainConfig(solve_output=True, l1_penalty=0.1)


class TestSerialization:
    def test_json_round_trip(self):
        arch = SieveNetArch(2, (3, 2), "clipped_relu", 4.0, linear_dim=1)
        p = init_params(arch, RngStream(11))
        p = p.with_vector(p.to_vector() + np.random.default_rng(0).standard_normal(arch.n_params) / 3)
        q = SieveNetParams.from_json(p.to_json())
        assert q.arch == p.arch
        assert np.array_equal(q.to_vector(), p.to_vector())


class TestActiveUnits:
    def test_zero(self):
        p = one_unit()
        p.out_weights = np.zeros(1)
        assert active_units(p) == 0

    def test_threshold(self):
        arch = SieveNetArch(1, (3,))
        p = init_params(arch, RngStream(0))
        p.out_weights = np.array([0.5, 1e-9, 2.0])
        assert active_units(p, 1e-6) == 2

    def test_negative_threshold(self):
        with pytest.raises(ValueError):
            active_units(one_unit(), -1.0)


class TestSieveOrder:
    def test_brute_force(self):
        assert sieve_order_schedule(1000, 1) == 7
        assert 7**3 * math.log(7) <= 1000 < 8**3 * math.log(8)

    def test_floor(self):
        assert sieve_order_schedule(3, 1) == 2

    @given(st.integers(3, 10**6), st.integers(1, 5))
    def test_definition(self, n, d):
        r = sieve_order_schedule(n, d)
        power = 2 * (1 + 1 / (d + 1))
        assert r == 2 or r**power * math.log(r) <= n
        assert (r + 1) ** power * math.log(r + 1) > n

    def test_monotone(self):
        assert sieve_order_schedule(10**4, 1) >= sieve_order_schedule(10**3, 1)
