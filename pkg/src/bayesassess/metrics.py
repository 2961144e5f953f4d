"""Derived assessment quantities: calibration error, misclassification cost,
practical-equivalence comparisons, and Monte-Carlo rankings.

Every Monte-Carlo operation takes an explicit numpy Generator and a sample
count (default 10,000), so results are reproducible from (seed, n_samples).
"""

from dataclasses import dataclass

import numpy as np

from .pool import CostMatrix
from .posterior import BetaPosterior, DirichletPosterior, PosteriorSummary, summarize_samples

DEFAULT_MC_SAMPLES = 10_000

ROPE_REGIONS = ("below", "equivalent", "above")


@dataclass(frozen=True)
class EcePosterior:
    """Monte-Carlo draws from the posterior of expected calibration error."""

    samples: np.ndarray
    summary: PosteriorSummary

    @property
    def n_samples(self) -> int:
        return self.samples.size

    def to_dict(self, include_samples=False):
        d = {"summary": self.summary.to_dict(), "n_samples": self.n_samples}
        if include_samples:
            d["samples"] = [float(s) for s in self.samples]
        return d


@dataclass(frozen=True)
class RopeResult:
    """Posterior mass of the accuracy difference in (below, equivalent, above).

    `eta` indexes the winning region, `lam` is its probability; regions are
    relative to delta = theta_a - theta_b and the equivalence half-width
    epsilon.
    """

    mu: tuple[float, float, float]
    eta: int
    lam: float
    epsilon: float
    n_samples: int

    @property
    def region(self) -> str:
        return ROPE_REGIONS[self.eta]

    def to_dict(self):
        return {
            "mu": list(self.mu),
            "eta": self.eta,
            "region": self.region,
            "lambda": self.lam,
            "epsilon": self.epsilon,
            "n_samples": self.n_samples,
        }


@dataclass(frozen=True)
class RankDistribution:
    """Per-group rank statistics under joint posterior draws (rank 1 = extreme)."""

    direction: str
    mean_rank: np.ndarray
    rank_ci_low: np.ndarray
    rank_ci_high: np.ndarray
    extreme_probability: np.ndarray

    def to_dict(self):
        return {
            "direction": self.direction,
            "mean_rank": [float(v) for v in self.mean_rank],
            "rank_ci_low": [int(v) for v in self.rank_ci_low],
            "rank_ci_high": [int(v) for v in self.rank_ci_high],
            "extreme_probability": [float(v) for v in self.extreme_probability],
        }


@dataclass(frozen=True)
class ReliabilityDiagram:
    """Plot-ready per-bin calibration summaries plus the overall ECE posterior."""

    weights: np.ndarray
    confidences: np.ndarray
    accuracy: tuple[PosteriorSummary, ...]
    labels_per_bin: np.ndarray
    ece: EcePosterior

    def to_dict(self):
        return {
            "bins": [
                {
                    "weight": float(self.weights[b]),
                    "confidence": float(self.confidences[b]),
                    "labels": int(self.labels_per_bin[b]),
                    "accuracy": self.accuracy[b].to_dict(),
                }
                for b in range(self.weights.size)
            ],
            "ece": self.ece.to_dict(),
        }


def ece_exact(weights, accuracies, confidences) -> float:
    """Expected calibration error for known per-bin accuracies:
    sum_b p_b * |theta_b - s_b|."""
    p = np.asarray(weights, dtype=np.float64)
    theta = np.asarray(accuracies, dtype=np.float64)
    s = np.asarray(confidences, dtype=np.float64)
    if not (p.shape == theta.shape == s.shape):
        raise ValueError("weights, accuracies, and confidences must have equal length")
    if abs(p.sum() - 1.0) > 1e-6:
        raise ValueError(f"weights must sum to 1, got {p.sum()}")
    return float(np.sum(p * np.abs(theta - s)))


def _beta_param_arrays(posteriors):
    a = np.array([p.eff_alpha for p in posteriors])
    b = np.array([p.eff_beta for p in posteriors])
    return a, b


def ece_posterior(bin_posteriors, weights, confidences, n_samples=DEFAULT_MC_SAMPLES,
                  rng=None, level=0.95) -> EcePosterior:
    """Monte-Carlo posterior of the ECE: each draw samples every bin accuracy
    independently from its Beta posterior and evaluates the exact ECE sum."""
    if rng is None:
        rng = np.random.default_rng()
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    p = np.asarray(weights, dtype=np.float64)
    s = np.asarray(confidences, dtype=np.float64)
    a, b = _beta_param_arrays(bin_posteriors)
    if not (p.shape == s.shape == a.shape):
        raise ValueError("posteriors, weights, and confidences must have equal length")
    theta = rng.beta(a, b, size=(n_samples, a.size))
    samples = np.abs(theta - s) @ p
    return EcePosterior(samples=samples, summary=summarize_samples(samples, level))


def classwise_ece_posterior(cell_posteriors, cell_weights, cell_confidences,
                            n_samples=DEFAULT_MC_SAMPLES, rng=None, level=0.95) -> EcePosterior:
    """ECE posterior restricted to one class: bin weights are the class's own
    region masses, renormalized within the class."""
    w = np.asarray(cell_weights, dtype=np.float64)
    total = w.sum()
    if total <= 0:
        raise ValueError("class has no members; classwise ECE is undefined")
    return ece_posterior(cell_posteriors, w / total, cell_confidences, n_samples, rng, level)


def expected_cost_posterior(post: DirichletPosterior, costs: CostMatrix, predicted_class: int,
                            n_samples=DEFAULT_MC_SAMPLES, rng=None) -> np.ndarray:
    """Monte-Carlo samples of the classwise expected cost sum_j c[j,k] * theta_jk."""
    if rng is None:
        rng = np.random.default_rng()
    if costs.num_classes != post.num_classes:
        raise ValueError(
            f"cost matrix is {costs.num_classes}x{costs.num_classes} but posterior has K={post.num_classes}")
    col = costs.column(predicted_class)
    gammas = rng.gamma(shape=post.eff_alpha, scale=1.0, size=(n_samples, post.num_classes))
    theta = gammas / gammas.sum(axis=1, keepdims=True)
    return theta @ col


def rope_compare(post_a: BetaPosterior, post_b: BetaPosterior, epsilon=0.05,
                 n_samples=DEFAULT_MC_SAMPLES, rng=None) -> RopeResult:
    """Region-of-practical-equivalence test on delta = theta_a - theta_b.

    Estimates mu = (P(delta < -eps), P(|delta| <= eps), P(delta > eps)) by
    Monte Carlo; eta is the argmax region (ties to the lower index) and
    lam its probability.
    """
    if rng is None:
        rng = np.random.default_rng()
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    delta = rng.beta(post_a.eff_alpha, post_a.eff_beta, size=n_samples) \
        - rng.beta(post_b.eff_alpha, post_b.eff_beta, size=n_samples)
    mu = (
        float(np.mean(delta < -epsilon)),
        float(np.mean(np.abs(delta) <= epsilon)),
        float(np.mean(delta > epsilon)),
    )
    eta = int(np.argmax(mu))
    return RopeResult(mu=mu, eta=eta, lam=mu[eta], epsilon=epsilon, n_samples=n_samples)


def rank_from_samples(samples: np.ndarray, direction: str = "min", level: float = 0.95) -> RankDistribution:
    """Rank statistics from a (n_samples, G) matrix of sampled metric values.

    Rank 1 is the most extreme group under `direction`; ties within a draw
    break toward the lower group index (stable sort).
    """
    if direction not in ("min", "max"):
        raise ValueError("direction must be 'min' or 'max'")
    values = samples if direction == "min" else -samples
    order = np.argsort(values, axis=1, kind="stable")
    n, g = values.shape
    ranks = np.empty((n, g), dtype=np.int64)
    np.put_along_axis(ranks, order, np.arange(1, g + 1)[None, :].repeat(n, axis=0), axis=1)
    tail = (1.0 - level) / 2.0
    lo, hi = np.quantile(ranks, [tail, 1.0 - tail], axis=0)
    return RankDistribution(
        direction=direction,
        mean_rank=ranks.mean(axis=0),
        rank_ci_low=lo.astype(np.int64),
        rank_ci_high=hi.astype(np.int64),
        extreme_probability=np.mean(ranks == 1, axis=0),
    )


def rank_distribution(posteriors, n_samples=DEFAULT_MC_SAMPLES, rng=None,
                      direction: str = "min", level: float = 0.95) -> RankDistribution:
    """Monte-Carlo ranking of groups by jointly sampled Beta posteriors."""
    if rng is None:
        rng = np.random.default_rng()
    if len(posteriors) < 2:
        raise ValueError("ranking needs at least two groups")
    a, b = _beta_param_arrays(posteriors)
    samples = rng.beta(a, b, size=(n_samples, a.size))
    return rank_from_samples(samples, direction, level)


def reliability_diagram(bin_posteriors, weights, confidences, level=0.95,
                        n_samples=DEFAULT_MC_SAMPLES, rng=None) -> ReliabilityDiagram:
    """Per-bin accuracy summaries against bin confidence, plus the ECE posterior.

    Empty bins (weight 0) carry their prior-only summaries.
    """
    if rng is None:
        rng = np.random.default_rng()
    summaries = tuple(p.summarize(level) for p in bin_posteriors)
    labels = np.array([p.trials for p in bin_posteriors], dtype=np.int64)
    ece = ece_posterior(bin_posteriors, weights, confidences, n_samples, rng, level)
    return ReliabilityDiagram(
        weights=np.asarray(weights, dtype=np.float64),
        confidences=np.asarray(confidences, dtype=np.float64),
        accuracy=summaries,
        labels_per_bin=labels,
        ece=ece,
    )
