import numpy as np
import pytest
from scipy import stats

from bayesassess.posterior import (BetaPosterior, DirichletPosterior,
                                   summarize_samples)


def grid_bayes_beta(alpha, beta, outcomes, points=401):
    """Independent oracle: brute-force Bayes on a dense grid of [0, 1]."""
    theta = np.linspace(0.0, 1.0, points)
    density = stats.beta.pdf(theta, alpha, beta)
    for z in outcomes:
        density = density * np.where(z == 1, theta, 1.0 - theta)
    density /= np.trapezoid(density, theta)
    return theta, density


class TestBetaUpdate:
    def test_conjugate_counts(self):
        post = BetaPosterior(1.0, 1.0)
        for z in (1, 1, 1, 0, 0):
            post = post.update(z)
        assert post.eff_alpha == 4 and post.eff_beta == 3
        assert post.mean() == pytest.approx(4 / 7)

    def test_fractional_prior(self):
        post = BetaPosterior(1.5, 0.5).update(1)
        assert post.eff_alpha == 2.5 and post.eff_beta == 0.5

    def test_order_invariance(self):
        a = BetaPosterior(2.0, 3.0).update(0).update(1)
        b = BetaPosterior(2.0, 3.0).update(1).update(0)
        assert a == b

    def test_updates_leave_original_untouched(self):
        post = BetaPosterior(1.0, 1.0)
        post.update(1)
        assert post.trials == 0

    def test_matches_grid_bayes_density(self):
        # alpha, beta >= 1 keeps the prior density finite at the endpoints,
        # which the 401-point grid includes
        rng = np.random.default_rng(5)
        for _ in range(20):
            alpha, beta = rng.uniform(1.0, 4.0, 2)
            outcomes = rng.integers(0, 2, size=rng.integers(1, 40))
            post = BetaPosterior(alpha, beta)
            for z in outcomes:
                post = post.update(int(z))
            theta, grid_density = grid_bayes_beta(alpha, beta, outcomes)
            analytic = stats.beta.pdf(theta, post.eff_alpha, post.eff_beta)
            l1 = np.trapezoid(np.abs(grid_density - analytic), theta)
            assert l1 < 1e-3

    def test_mean_is_convex_combination(self):
        post = BetaPosterior(2.0, 2.0)
        prior_mean = post.mean()
        for z in [1, 1, 0, 1, 1, 1, 0, 1]:
            post = post.update(z)
        freq = post.successes / post.trials
        lo, hi = sorted([prior_mean, freq])
        assert lo <= post.mean() <= hi


class TestBetaSampling:
    def test_concentrated_posterior(self):
        rng = np.random.default_rng(0)
        post = BetaPosterior(1e9, 1.0)
        assert post.sample(rng) == pytest.approx(1.0, abs=1e-3)

    def test_mc_mean_matches_analytic(self):
        rng = np.random.default_rng(1)
        draws = [BetaPosterior(1.0, 1.0).sample(rng) for _ in range(10_000)]
        assert np.mean(draws) == pytest.approx(0.5, abs=0.01)

    def test_seed_determinism(self):
        post = BetaPosterior(3.0, 2.0, successes=4, trials=9)
        a = [post.sample(np.random.default_rng(42)) for _ in range(1)]
        b = [post.sample(np.random.default_rng(42)) for _ in range(1)]
        assert a == b


class TestBetaSummary:
    def test_mean_four_sevenths(self):
        assert BetaPosterior(4.0, 3.0).summarize().mean == pytest.approx(4 / 7, abs=1e-9)

    def test_superclass_human_posterior_mean(self):
        # Beta(280, 203): analytic mean 280/483
        summary = BetaPosterior(280.0, 203.0).summarize()
        assert summary.mean == pytest.approx(0.5797, abs=5e-5)

    def test_uniform_interval(self):
        summary = BetaPosterior(1.0, 1.0).summarize(0.95)
        assert summary.ci_low == pytest.approx(0.025, abs=1e-9)
        assert summary.ci_high == pytest.approx(0.975, abs=1e-9)

    def test_ordering_invariant(self):
        summary = BetaPosterior(5.0, 2.0, successes=3, trials=10).summarize(0.9)
        assert summary.ci_low <= summary.mean <= summary.ci_high

    def test_serialization_roundtrip(self):
        post = BetaPosterior(1.5, 0.5, successes=2, trials=5)
        assert BetaPosterior.from_dict(post.to_dict()) == post


class TestDirichlet:
    def test_update_counts(self):
        post = DirichletPosterior.with_prior([1.0, 1.0, 1.0]).update(2).update(2)
        assert post.eff_alpha.tolist() == [1.0, 1.0, 3.0]

    def test_order_invariance(self):
        base = DirichletPosterior.with_prior([0.5, 0.5, 0.5])
        a = base.update(0).update(2).update(2)
        b = base.update(2).update(0).update(2)
        assert np.array_equal(a.counts, b.counts)

    def test_mean_formula(self):
        post = DirichletPosterior(alpha=np.array([1.0, 1.0]), counts=np.array([3, 1]))
        assert np.allclose(post.mean(), [2 / 3, 1 / 3])

    def test_concentrated_sample(self):
        rng = np.random.default_rng(2)
        post = DirichletPosterior.with_prior([1e9, 1.0, 1.0])
        assert np.allclose(post.sample(rng), [1.0, 0.0, 0.0], atol=1e-3)

    def test_mc_mean(self):
        rng = np.random.default_rng(3)
        post = DirichletPosterior.with_prior([2.0, 2.0])
        draws = np.array([post.sample(rng)[0] for _ in range(10_000)])
        assert draws.mean() == pytest.approx(0.5, abs=0.01)

    def test_samples_sum_to_one(self):
        rng = np.random.default_rng(4)
        post = DirichletPosterior.with_prior([0.3, 1.7, 2.0])
        for _ in range(100):
            assert post.sample(rng).sum() == pytest.approx(1.0, abs=1e-9)

    def test_index_out_of_range(self):
        with pytest.raises(ValueError, match="out of range"):
            DirichletPosterior.with_prior([1.0, 1.0]).update(2)

    def test_serialization_roundtrip(self):
        post = DirichletPosterior.with_prior([0.25, 0.5, 0.25]).update(1)
        again = DirichletPosterior.from_dict(post.to_dict())
        assert np.array_equal(again.eff_alpha, post.eff_alpha)


class TestSummarizeSamples:
    def test_quantiles(self):
        summary = summarize_samples(np.linspace(0, 1, 10_001), level=0.9)
        assert summary.mean == pytest.approx(0.5)
        assert summary.ci_low == pytest.approx(0.05, abs=1e-3)
        assert summary.ci_high == pytest.approx(0.95, abs=1e-3)
