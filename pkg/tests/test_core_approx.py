import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cndetect import core_approx as ca
from cndetect.core_approx import (
    ApproxConfig,
    ConfigError,
    IllConditionedError,
    RankDeficiencyError,
    SampleSeries,
    SampleWindow,
    WindowOutOfBoundsError,
    center_window,
    constraint_matrix,
    nullspace_basis,
    selector_vector,
    vandermonde,
)

from .conftest import kkt_solve, random_window


def window(xl, yl, xr, yr):
    return SampleWindow(np.array(xl, float), np.array(yl, float),
                        np.array(xr, float), np.array(yr, float), 0.0)


class TestSampleSeries:
    def test_rejects_duplicates(self):
        with pytest.raises(ValueError):
            SampleSeries([0, 1, 1, 2], [0, 0, 0, 0])

    def test_rejects_length_mismatch(self):
        with pytest.raises(ValueError):
            SampleSeries([0, 1, 2], [0, 1])

    def test_rejects_single_sample(self):
        with pytest.raises(ValueError):
            SampleSeries([0], [1])


class TestApproxConfig:
    def test_defaults(self):
        cfg = ApproxConfig(order=2)
        assert (cfg.degree_left, cfg.degree_right) == (2, 2)
        assert (cfg.support_left, cfg.support_right) == (8, 8)
        assert ApproxConfig(order=4).support_left == 10

    @pytest.mark.parametrize(
        "kwargs",
        [
            dict(order=0),
            dict(order=2, degree_left=1),
            dict(order=1, degree_right=3, support_right=3),
        ],
    )
    def test_invalid(self, kwargs):
        with pytest.raises(ConfigError):
            ApproxConfig(**kwargs)


class TestCenterWindow:
    def test_midpoint(self):
        s = SampleSeries([0, 1, 2, 3], [0, 1, 2, 3])
        cfg = ApproxConfig(order=1, degree_left=1, degree_right=1, support_left=2, support_right=2)
        w = center_window(s, 1, cfg)
        assert w.zeta == 1.5
        np.testing.assert_array_equal(w.x_left, [-1.5, -0.5])
        np.testing.assert_array_equal(w.x_right, [0.5, 1.5])
        np.testing.assert_array_equal(w.y_left, [0, 1])
        np.testing.assert_array_equal(w.y_right, [2, 3])

    def test_out_of_bounds(self):
        s = SampleSeries([0, 1, 2], [0, 1, 2])
        cfg = ApproxConfig(order=1, degree_left=1, degree_right=1, support_left=2, support_right=2)
        with pytest.raises(WindowOutOfBoundsError):
            center_window(s, 0, cfg)

    def test_symmetric_on_uniform_grid(self):
        x = 0.25 * np.arange(30)
        s = SampleSeries(x, np.sin(x))
        w = center_window(s, 12, ApproxConfig(order=2))
        np.testing.assert_allclose(w.x_left, -w.x_right[::-1], atol=1e-15)


class TestVandermonde:
    def test_examples(self):
        np.testing.assert_array_equal(vandermonde([1, 2], 2), [[1, 1, 1], [4, 2, 1]])
        np.testing.assert_array_equal(vandermonde([0], 3), [[0, 0, 0, 1]])
        np.testing.assert_array_equal(vandermonde([-1, 0, 1], 1), [[-1, 1], [0, 1], [1, 1]])

    def test_matches_numpy(self):
        x = np.linspace(-2, 3, 7)
        np.testing.assert_allclose(vandermonde(x, 4), np.vander(x, 5), rtol=1e-15)


class TestConstraintAndSelector:
    def test_constraint_examples(self):
        np.testing.assert_array_equal(constraint_matrix(1, 1, 1), [[0, 1, 0, -1]])
        np.testing.assert_array_equal(
            constraint_matrix(2, 2, 2), [[0, 1, 0, 0, -1, 0], [0, 0, 1, 0, 0, -1]]
        )
        np.testing.assert_array_equal(constraint_matrix(1, 2, 1), [[0, 0, 1, 0, -1]])

    def test_selector_examples(self):
        np.testing.assert_array_equal(selector_vector(1, 1, 1), [1, 0, -1, 0])
        np.testing.assert_array_equal(selector_vector(2, 2, 2), [1, 0, 0, -1, 0, 0])
        np.testing.assert_array_equal(selector_vector(1, 2, 1), [0, 1, 0, -1, 0])

    def test_degree_below_order(self):
        with pytest.raises(ConfigError):
            constraint_matrix(3, 2, 3)
        with pytest.raises(ConfigError):
            selector_vector(3, 3, 2)


class TestNullspace:
    def test_one_dimensional(self):
        N = nullspace_basis([[1.0, -1.0]])
        assert N.shape == (2, 1)
        np.testing.assert_allclose(np.abs(N[:, 0]), [2**-0.5, 2**-0.5])

    def test_defining_properties(self):
        C = constraint_matrix(1, 1, 1)
        N = nullspace_basis(C)
        np.testing.assert_allclose(N.T @ N, np.eye(3), atol=1e-15)
        np.testing.assert_allclose(C @ N, 0, atol=1e-15)

    @pytest.mark.parametrize("seed", range(5))
    def test_random_full_rank(self, seed):
        C = np.random.default_rng(seed).normal(size=(3, 8))
        N = nullspace_basis(C)
        assert N.shape == (8, 5)
        assert np.linalg.norm(C @ N) <= 1e-12 * max(1, np.linalg.norm(C))
        assert np.linalg.norm(N.T @ N - np.eye(5)) <= 1e-12

    def test_rank_deficient(self):
        with pytest.raises(RankDeficiencyError):
            nullspace_basis([[1.0, -1.0, 0.0], [2.0, -2.0, 0.0]])


class TestSolveCoupled:
    cfg1 = ApproxConfig(order=1, degree_left=1, degree_right=1, support_left=2, support_right=2)

    def test_continuous_line(self):
        fit = ca.solve_coupled(window([-2, -1], [-3, -1], [1, 2], [3, 5]), self.cfg1)
        np.testing.assert_allclose(fit.alpha, [2, 1], atol=1e-12)
        np.testing.assert_allclose(fit.beta, [2, 1], atol=1e-12)

    def test_slope_break(self):
        fit = ca.solve_coupled(window([-2, -1], [-2, -1], [1, 2], [2, 4]), self.cfg1)
        np.testing.assert_allclose(fit.alpha, [1, 0], atol=1e-12)
        np.testing.assert_allclose(fit.beta, [2, 0], atol=1e-12)

    def test_gamma_is_K_y(self):
        rng = np.random.default_rng(3)
        cfg = ApproxConfig(order=2, support_left=6, support_right=6)
        w = random_window(rng, cfg)
        fit = ca.solve_coupled(w, cfg)
        np.testing.assert_allclose(fit.gamma, fit.K @ w.y, rtol=1e-14)

    @pytest.mark.parametrize("seed", range(10))
    def test_matches_kkt(self, seed):
        rng = np.random.default_rng(seed)
        cfg = ApproxConfig(order=2, support_left=6, support_right=6)
        w = random_window(rng, cfg)
        gamma = ca.solve_coupled(w, cfg).gamma
        ref = kkt_solve(w, cfg)
        assert np.linalg.norm(gamma - ref) <= 1e-8 * np.linalg.norm(ref)

    def test_mismatched_window(self):
        with pytest.raises(ConfigError):
            ca.solve_coupled(window([-2, -1, -0.5], [0, 0, 0], [1, 2], [0, 0]), self.cfg1)

    def test_ill_conditioned(self):
        cfg = ApproxConfig(order=2, degree_left=4, degree_right=4, support_left=5,
                           support_right=5, cond_threshold=1e6)
        w = window(-1e-3 * np.arange(5, 0, -1), np.zeros(5), 1e-3 * np.arange(1, 6), np.zeros(5))
        with pytest.raises(IllConditionedError):
            ca.solve_coupled(w, cfg)

    def test_normalization_recovers_units(self):
        cfg = ApproxConfig(order=2, degree_left=3, degree_right=3, support_left=7, support_right=7)
        w = random_window(np.random.default_rng(9), cfg, spread=0.01)
        plain = ca.solve_coupled(w, cfg)
        scaled = ca.solve_coupled(w, ApproxConfig(**{**cfg.as_dict(), "normalize_x": True}))
        np.testing.assert_allclose(scaled.gamma, plain.gamma, rtol=1e-6)
        assert scaled.cond < plain.cond

    def test_maclaurin_coefficients(self):
        # alpha_k is the k-th derivative at the origin divided by k!
        cfg = ApproxConfig(order=2, degree_left=3, degree_right=3, support_left=7, support_right=7)
        fit = ca.solve_coupled(random_window(np.random.default_rng(4), cfg), cfg)
        for coeffs in (fit.alpha, fit.beta):
            deg = coeffs.size - 1
            for k in range(deg + 1):
                deriv = np.polyval(np.polyder(coeffs, k), 0.0) if k else np.polyval(coeffs, 0.0)
                assert deriv / np.prod(np.arange(1, k + 1)) == pytest.approx(coeffs[deg - k])


@st.composite
def configs(draw):
    n = draw(st.integers(1, 3))
    d_L = draw(st.integers(n, 4))
    d_R = draw(st.integers(n, 4))
    l_L = draw(st.integers(d_L + 1, 10))
    l_R = draw(st.integers(d_R + 1, 10))
    return ApproxConfig(order=n, degree_left=d_L, degree_right=d_R,
                        support_left=l_L, support_right=l_R)


@settings(max_examples=60, deadline=None)
@given(cfg=configs(), seed=st.integers(0, 2**32 - 1))
def test_constraints_and_kkt_property(cfg, seed):
    w = random_window(np.random.default_rng(seed), cfg)
    fit = ca.solve_coupled(w, cfg)
    C = constraint_matrix(cfg.order, cfg.degree_left, cfg.degree_right)
    assert np.linalg.norm(C @ fit.gamma) <= 1e-10 * (1 + np.linalg.norm(fit.gamma))
    ref = kkt_solve(w, cfg)
    assert np.linalg.norm(fit.gamma - ref) <= 1e-8 * max(np.linalg.norm(ref), 1e-300)


@settings(max_examples=40, deadline=None)
@given(cfg=configs(), seed=st.integers(0, 2**32 - 1))
def test_exact_polynomial_is_recovered(cfg, seed):
    rng = np.random.default_rng(seed)
    w = random_window(rng, cfg)
    deg = min(cfg.degree_left, cfg.degree_right)
    coeffs = rng.normal(size=deg + 1)
    w = SampleWindow(w.x_left, np.polyval(coeffs, w.x_left),
                     w.x_right, np.polyval(coeffs, w.x_right), 0.0)
    fit = ca.solve_coupled(w, cfg)
    np.testing.assert_allclose(fit.alpha[-(deg + 1):], coeffs, atol=1e-9)
    np.testing.assert_allclose(fit.alpha[: -(deg + 1)], 0, atol=1e-9)
    np.testing.assert_allclose(fit.beta[-(deg + 1):], coeffs, atol=1e-9)
    d = selector_vector(cfg.order, cfg.degree_left, cfg.degree_right)
    assert abs(d @ fit.gamma) <= 1e-9


@settings(max_examples=40, deadline=None)
@given(cfg=configs(), seed=st.integers(0, 2**32 - 1))
def test_fewer_constraints_never_worse(cfg, seed):
    if cfg.order == 1:
        return
    w = random_window(np.random.default_rng(seed), cfg)
    looser = ApproxConfig(**{**cfg.as_dict(), "order": cfg.order - 1})

    def resid(c):
        fit = ca.solve_coupled(w, c)
        r_l = w.y_left - np.polyval(fit.alpha, w.x_left)
        r_r = w.y_right - np.polyval(fit.beta, w.x_right)
        return r_l @ r_l + r_r @ r_r

    assert resid(looser) <= resid(cfg) * (1 + 1e-9) + 1e-12
