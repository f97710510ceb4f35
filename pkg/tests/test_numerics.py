import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from sievevar.numerics import (
    Normal,
    RngStream,
    SingularSystemError,
    StudentT,
    Uniform,
    chi_square_sf,
    draw,
    ols_solve,
    sample_quantile,
    trapezoid_integrate,
)


def normal_equations(X, Y):
    # independent oracle: explicit Gauss-Jordan on X'X
    A = X.T @ X
    b = X.T @ Y
    k = A.shape[0]
    M = np.hstack([A, b[:, None]]).astype(float)
    for i in range(k):
        p = i + np.argmax(np.abs(M[i:, i]))
        M[[i, p]] = M[[p, i]]
        M[i] /= M[i, i]
        for r in range(k):
            if r != i:
                M[r] -= M[r, i] * M[i]
    return M[:, -1]


class TestOlsSolve:
    def test_intercept_only_is_mean(self):
        np.testing.assert_allclose(ols_solve(np.ones((3, 1)), np.array([1.0, 2, 3])), [2.0])

    def test_exact_line(self):
        X = np.array([[1.0, 0.0], [1.0, 1.0]])
        np.testing.assert_allclose(ols_solve(X, np.array([1.0, 3.0])), [1.0, 2.0], atol=1e-12)

    def test_matches_normal_equations(self):
        rng = np.random.default_rng(7)
        X = rng.standard_normal((20, 3))
        Y = rng.standard_normal(20)
        np.testing.assert_allclose(ols_solve(X, Y), normal_equations(X, Y), rtol=1e-8, atol=1e-10)

    def test_rank_deficient(self):
        X = np.column_stack([np.ones(5), np.arange(5.0), 2 * np.arange(5.0)])
        with pytest.raises(SingularSystemError) as err:
            ols_solve(X, np.arange(5.0))
        assert "1 of 3" in str(err.value)
        assert err.value.columns == [2]

    def test_underdetermined(self):
        with pytest.raises(SingularSystemError):
            ols_solve(np.ones((2, 3)), np.ones(2))

    def test_rejects_nan(self):
        with pytest.raises(ValueError):
            ols_solve(np.array([[1.0], [np.nan]]), np.ones(2))

    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 10_000), st.integers(1, 6), st.integers(0, 20))
    def test_residual_orthogonality(self, seed, k, extra):
        rng = np.random.default_rng(seed)
        n = k + extra
        X = rng.standard_normal((n, k)) * rng.uniform(0.1, 10, k)
        Y = rng.standard_normal(n) * 5
        beta = ols_solve(X, Y)
        ortho = np.abs(X.T @ (Y - X @ beta)).max()
        assert ortho / (np.linalg.norm(X) * np.linalg.norm(Y)) <= 1e-8


class TestSampleQuantile:
    def test_median(self):
        assert sample_quantile([1, 2, 3, 4, 5], 0.5) == 3

    def test_linear_interpolation(self):
        assert sample_quantile([0, 10], 0.5) == 5

    def test_normal_tail(self):
        x = draw(RngStream(1), Normal(), 1000)
        assert abs(sample_quantile(x, 0.01) - (-2.326)) <= 0.15

    def test_empty(self):
        with pytest.raises(ValueError):
            sample_quantile([], 0.5)

    @pytest.mark.parametrize("alpha", [0.0, 1.0, -0.1])
    def test_alpha_bounds(self, alpha):
        with pytest.raises(ValueError):
            sample_quantile([1, 2], alpha)

    @given(arrays(float, st.integers(1, 40), elements=st.floats(-1e6, 1e6)),
           st.floats(0.001, 0.999), st.floats(0.001, 0.999), st.randoms())
    def test_monotone_and_permutation_invariant(self, v, a1, a2, rnd):
        lo, hi = sorted((a1, a2))
        assert sample_quantile(v, lo) <= sample_quantile(v, hi)
        perm = list(v)
        rnd.shuffle(perm)
        assert sample_quantile(perm, a1) == sample_quantile(v, a1)


class TestTrapezoid:
    def test_identity(self):
        assert trapezoid_integrate([0, 0.5, 1], [0, 0.5, 1]) == pytest.approx(0.5)

    def test_constant(self):
        assert trapezoid_integrate([0, 1], [2, 2]) == pytest.approx(2.0)

    def test_square(self):
        xs = np.linspace(0, 1, 101)
        assert abs(trapezoid_integrate(xs, xs**2) - 1 / 3) < 1e-3

    def test_errors(self):
        with pytest.raises(ValueError):
            trapezoid_integrate([0, 1], [1, 2, 3])
        with pytest.raises(ValueError):
            trapezoid_integrate([1, 0], [1, 2])

    @given(st.integers(0, 1000), st.floats(-10, 10), st.floats(-10, 10))
    def test_linearity(self, seed, a, b):
        rng = np.random.default_rng(seed)
        xs = np.sort(rng.uniform(0, 5, 30)) + np.arange(30) * 1e-3
        f, g = rng.standard_normal(30), rng.standard_normal(30)
        lhs = trapezoid_integrate(xs, a * f + b * g)
        rhs = a * trapezoid_integrate(xs, f) + b * trapezoid_integrate(xs, g)
        assert abs(lhs - rhs) <= 1e-12


class TestChiSquare:
    def test_zero(self):
        assert chi_square_sf(0.0, 1) == 1.0

    def test_kupiec_value(self):
        assert chi_square_sf(1.4369, 1) == pytest.approx(0.2306, abs=1e-4)

    def test_critical_value_against_erf(self):
        # df=1 tail is 2 * (1 - Phi(sqrt x)) = erfc(sqrt(x / 2))
        x = 3.841
        assert chi_square_sf(x, 1) == pytest.approx(math.erfc(math.sqrt(x / 2)), abs=1e-6)
        assert chi_square_sf(x, 1) == pytest.approx(0.05, abs=1e-3)

    def test_negative(self):
        with pytest.raises(ValueError):
            chi_square_sf(-1.0, 1)


class TestDraw:
    def test_normal_mean(self):
        assert abs(draw(RngStream(3), Normal(0, 1), 100_000).mean()) < 0.02

    def test_uniform_support(self):
        u = draw(RngStream(0), Uniform(-2, 2), 100_000)
        assert u.min() >= -2 and u.max() <= 2

    def test_student_variance(self):
        t = draw(RngStream(0), StudentT(4), 100_000)
        assert abs(t.var() - 2.0) < 0.15

    @pytest.mark.parametrize("dist", [Normal(0, 0), Uniform(1, 1), StudentT(0)])
    def test_invalid(self, dist):
        with pytest.raises(ValueError):
            draw(RngStream(0), dist, 3)

    def test_reproducible(self):
        a = draw(RngStream(42), Normal(), 10_000)
        b = draw(RngStream(42), Normal(), 10_000)
        assert np.array_equal(a, b)

    def test_spawned_streams_differ(self):
        s1, s2 = RngStream(5).spawn(2)
        assert not np.array_equal(draw(s1, Normal(), 10), draw(s2, Normal(), 10))
        t1, _ = RngStream(5).spawn(2)
        assert np.array_equal(draw(t1, Normal(), 10), draw(RngStream(5).spawn(2)[0], Normal(), 10))
