from __future__ import annotations

import math

import numpy as np
import pytest
from _oracles import fd_grad_dual, fd_grad_theta, loop_lagrangian, random_draw, rel_err
from hypothesis import given
from hypothesis import strategies as st

from priormatch import DomainError, InvalidInputError, ModelParams
from priormatch.objective import (
    bigram_stats,
    cost,
    cost_J,
    dual_optimum,
    grad_dual,
    grad_theta,
    lagrangian,
    output_stats,
    unigram_stats,
)

ZERO = ModelParams(0, 0)
MODES = ("unigram", "bigram")


def params_with_p0(p0):
    # x = (1, 0) gives logit gap gamma * w_a
    return ModelParams(math.log(p0 / (1 - p0)) / 10.0, 0.0)


class TestStats:
    def test_uniform_posteriors(self):
        x = np.random.default_rng(0).normal(size=(6, 2))
        np.testing.assert_allclose(unigram_stats(ZERO, x), [0.5, 0.5])
        np.testing.assert_allclose(bigram_stats(ZERO, x), np.full((2, 2), 0.25))
        np.testing.assert_allclose(bigram_stats(ZERO, x[:3]), np.full((2, 2), 0.25))

    def test_single_point(self):
        np.testing.assert_allclose(unigram_stats(params_with_p0(0.9), [(1, 0)]), [0.9, 0.1])

    def test_arithmetic_mean(self):
        # p0 = 0.8 at x = (1, 0); p0 = 0.4 at x = (c, 0) with the same weight
        w = math.log(4) / 10
        c = math.log(0.4 / 0.6) / 10 / w
        np.testing.assert_allclose(unigram_stats(ModelParams(w, 0), [(1, 0), (c, 0)]), [0.6, 0.4])

    def test_bigram_limit_outer_product(self):
        s = bigram_stats(ModelParams(100, 100), [(1, 0), (0, 1)])
        np.testing.assert_allclose(s, [[0, 1], [0, 0]], atol=1e-300)

    def test_length_errors(self):
        with pytest.raises(InvalidInputError):
            bigram_stats(ZERO, [(1, 1)])
        with pytest.raises(InvalidInputError):
            unigram_stats(ZERO, np.zeros((0, 2)))

    def test_dispatch(self):
        x = np.ones((4, 2))
        assert output_stats(ZERO, x, [0.5, 0.5]).shape == (2,)
        assert output_stats(ZERO, x, np.full((2, 2), 0.25)).shape == (2, 2)

    @given(st.floats(-2, 2), st.floats(-2, 2), st.integers(0, 2**32 - 1))
    def test_mass_conservation(self, wa, wb, seed):
        x = np.random.default_rng(seed).normal(size=(9, 2))
        params = ModelParams(wa, wb)
        assert abs(unigram_stats(params, x).sum() - 1) <= 1e-12
        assert abs(bigram_stats(params, x).sum() - 1) <= 1e-10


class TestCostJ:
    def test_uniform(self):
        assert cost_J([0.5, 0.5], [0.5, 0.5]) == pytest.approx(math.log(2), abs=1e-15)

    def test_matched_degenerate(self):
        eps = 1e-6
        assert cost_J([1, 0], [1 - eps, eps]) == pytest.approx(-math.log(1 - eps), rel=1e-12)

    def test_uniform_stats(self):
        assert cost_J([0.692, 0.308], [0.5, 0.5]) == pytest.approx(0.693147, abs=1e-6)

    def test_zero_stat_under_mass_is_infinite(self):
        assert cost_J([0.5, 0.5], [1.0, 0.0]) == math.inf

    def test_zero_prior_ignores_zero_stat(self):
        assert cost_J([1.0, 0.0], [1.0, 0.0]) == 0.0

    def test_shape_mismatch(self):
        with pytest.raises(InvalidInputError):
            cost_J([0.5, 0.5], np.full((2, 2), 0.25))

    def test_cost_wraps_stats(self):
        x = np.random.default_rng(1).normal(size=(20, 2))
        params = ModelParams(0.2, -0.1)
        prior = np.array([[0.4, 0.3], [0.2, 0.1]])
        assert cost(params, x, prior) == pytest.approx(cost_J(prior, bigram_stats(params, x)), rel=1e-15)

    @given(st.integers(0, 2**32 - 1), st.sampled_from([2, 4]))
    def test_gibbs_inequality(self, seed, k):
        rng = np.random.default_rng(seed)
        shape = (2,) if k == 2 else (2, 2)
        prior = rng.dirichlet(np.ones(k)).reshape(shape)
        stats = rng.dirichlet(np.ones(k)).reshape(shape)
        entropy = -np.sum(prior * np.log(prior))
        assert cost_J(prior, stats) >= entropy - 1e-12
        assert cost_J(prior, prior) == pytest.approx(entropy, abs=1e-12)


class TestLagrangian:
    def test_unigram_example(self):
        x = np.random.default_rng(2).normal(size=(5, 2))
        assert lagrangian(ZERO, [-2, -2], x, [0.5, 0.5]) == pytest.approx(-1 + math.log(2), abs=1e-14)

    def test_bigram_example(self):
        x = np.random.default_rng(3).normal(size=(5, 2))
        V = np.full((2, 2), -4.0)
        assert lagrangian(ZERO, V, x, np.full((2, 2), 0.25)) == pytest.approx(-1 + math.log(4), abs=1e-14)

    @pytest.mark.parametrize("mode", MODES)
    def test_matches_loop_oracle(self, mode):
        rng = np.random.default_rng(4)
        for _ in range(20):
            params, V, x, prior = random_draw(rng, mode, T=12)
            expect = loop_lagrangian(params.w_a, params.w_b, params.gamma, V, x, prior)
            assert lagrangian(params, V, x, prior) == pytest.approx(expect, rel=1e-12, abs=1e-12)

    @pytest.mark.parametrize("V", [[-1.0, 0.0], [0.5, -1.0]])
    def test_domain(self, V):
        with pytest.raises(DomainError):
            lagrangian(ZERO, V, np.ones((3, 2)), [0.5, 0.5])


class TestDualOptimum:
    def test_examples(self):
        np.testing.assert_allclose(dual_optimum([0.5, 0.5]), [-2, -2])
        np.testing.assert_allclose(dual_optimum([0.25, 0.75]), [-4, -4 / 3])
        np.testing.assert_allclose(dual_optimum(np.full((2, 2), 0.25)), np.full((2, 2), -4))

    def test_zero_stat(self):
        with pytest.raises(DomainError):
            dual_optimum([1.0, 0.0])

    @pytest.mark.parametrize("mode", MODES)
    def test_conjugate_identity(self, mode):
        rng = np.random.default_rng(5)
        for _ in range(100):
            params, _, x, prior = random_draw(rng, mode, T=30)
            s = output_stats(params, x, prior)
            V0 = dual_optimum(s)
            L0 = lagrangian(params, V0, x, prior)
            assert abs(L0 - (cost_J(prior, s) - 1)) <= 1e-10
            # strict concavity in V: every feasible move away lowers L
            for _ in range(5):
                d = rng.normal(size=V0.shape) * 0.1 * np.abs(V0)
                if np.all(V0 + d < 0):
                    assert lagrangian(params, V0 + d, x, prior) < L0

    @pytest.mark.parametrize("mode", MODES)
    def test_argmin_preserved(self, mode):
        rng = np.random.default_rng(6)
        _, _, x, prior = random_draw(rng, mode, T=200)
        grid = np.linspace(-0.6, 0.6, 5)
        J, Lmax = [], []
        for wa in grid:
            for wb in grid:
                params = ModelParams(wa, wb)
                s = output_stats(params, x, prior)
                J.append(cost_J(prior, s))
                Lmax.append(lagrangian(params, dual_optimum(s), x, prior))
        np.testing.assert_array_equal(np.argsort(J, kind="stable"), np.argsort(Lmax, kind="stable"))


class TestGradients:
    def test_zero_inputs(self):
        x = np.zeros((6, 2))
        np.testing.assert_array_equal(grad_theta(ModelParams(1, -1), [-1, -3], x, [0.3, 0.7]), [0, 0])
        V = -np.arange(1, 5, dtype=float).reshape(2, 2)
        np.testing.assert_array_equal(grad_theta(ModelParams(1, -1), V, x, np.full((2, 2), 0.25)), [0, 0])

    def test_zero_at_uniform_dual_optimum(self):
        x = np.random.default_rng(7).normal(size=(8, 2))
        np.testing.assert_allclose(grad_theta(ZERO, [-2, -2], x, [0.5, 0.5]), [0, 0], atol=1e-15)

    def test_grad_dual_example(self):
        x = np.random.default_rng(8).normal(size=(4, 2))
        np.testing.assert_allclose(grad_dual(ZERO, [-1, -1], x, [0.5, 0.5]), [-0.25, -0.25])

    def test_grad_dual_vanishes_at_optimum(self):
        rng = np.random.default_rng(9)
        params, _, x, prior = random_draw(rng, "bigram")
        V0 = dual_optimum(bigram_stats(params, x))
        np.testing.assert_allclose(grad_dual(params, V0, x, prior), 0.0, atol=1e-14)

    def test_shape_mismatch(self):
        with pytest.raises(InvalidInputError):
            grad_theta(ZERO, [-1, -1], np.ones((4, 2)), np.full((2, 2), 0.25))

    def test_zero_dual(self):
        with pytest.raises(DomainError):
            grad_dual(ZERO, [0.0, -1.0], np.ones((4, 2)), [0.5, 0.5])

    @pytest.mark.parametrize("mode", MODES)
    def test_theta_matches_finite_differences(self, mode):
        rng = np.random.default_rng(10)
        worst = max(
            rel_err(grad_theta(p, V, x, prior), fd_grad_theta(p, V, x, prior))
            for p, V, x, prior in (random_draw(rng, mode) for _ in range(150))
        )
        assert worst <= 1e-5

    @pytest.mark.parametrize("mode", MODES)
    def test_dual_matches_finite_differences(self, mode):
        rng = np.random.default_rng(12)
        worst = max(
            rel_err(grad_dual(p, V, x, prior), fd_grad_dual(p, V, x, prior))
            for p, V, x, prior in (random_draw(rng, mode) for _ in range(150))
        )
        assert worst <= 1e-6
