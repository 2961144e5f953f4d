"""Conjugate belief state for groupwise metrics.

Beta posteriors track Bernoulli outcomes (e.g. per-group accuracy),
Dirichlet posteriors track categorical outcomes (confusion-matrix columns).
Both are immutable value objects: updates return new instances, so sessions
can snapshot state at any step without copying.
"""

from dataclasses import dataclass, replace

import numpy as np
from scipy import stats


@dataclass(frozen=True)
class PosteriorSummary:
    """Posterior mean (the MPE point estimate) with a central credible interval."""

    mean: float
    ci_low: float
    ci_high: float
    level: float = 0.95

    def to_dict(self):
        return {
            "mean": self.mean,
            "ci_low": self.ci_low,
            "ci_high": self.ci_high,
            "level": self.level,
        }


@dataclass(frozen=True)
class BetaPosterior:
    """Beta prior plus Bernoulli success/trial counts.

    The effective distribution is Beta(alpha + successes, beta + failures);
    keeping prior and data separate preserves the prior for reporting and
    lets sufficiency be checked against a trajectory.
    """

    alpha: float
    beta: float
    successes: int = 0
    trials: int = 0

    def __post_init__(self):
        if self.alpha <= 0 or self.beta <= 0:
            raise ValueError("Beta parameters must be positive")
        if not 0 <= self.successes <= self.trials:
            raise ValueError("successes must lie in [0, trials]")

    @property
    def eff_alpha(self) -> float:
        return self.alpha + self.successes

    @property
    def eff_beta(self) -> float:
        return self.beta + self.trials - self.successes

    def update(self, outcome: int) -> "BetaPosterior":
        """Absorb one Bernoulli outcome (1 = success) in closed form."""
        if outcome not in (0, 1):
            raise ValueError(f"outcome must be 0 or 1, got {outcome!r}")
        return replace(self, successes=self.successes + outcome, trials=self.trials + 1)

    def mean(self) -> float:
        return self.eff_alpha / (self.eff_alpha + self.eff_beta)

    def variance(self) -> float:
        a, b = self.eff_alpha, self.eff_beta
        n = a + b
        return a * b / (n * n * (n + 1.0))

    def sample(self, rng: np.random.Generator) -> float:
        return float(rng.beta(self.eff_alpha, self.eff_beta))

    def summarize(self, level: float = 0.95) -> PosteriorSummary:
        """Central (equal-tailed) credible interval via the Beta quantile function."""
        if not 0 < level < 1:
            raise ValueError("level must be in (0, 1)")
        tail = (1.0 - level) / 2.0
        lo, hi = stats.beta.ppf([tail, 1.0 - tail], self.eff_alpha, self.eff_beta)
        return PosteriorSummary(mean=self.mean(), ci_low=float(lo), ci_high=float(hi), level=level)

    def to_dict(self):
        return {
            "alpha": self.alpha,
            "beta": self.beta,
            "successes": self.successes,
            "trials": self.trials,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            alpha=float(d["alpha"]),
            beta=float(d["beta"]),
            successes=int(d["successes"]),
            trials=int(d["trials"]),
        )


@dataclass(frozen=True)
class DirichletPosterior:
    """Dirichlet prior plus categorical counts over K outcomes."""

    alpha: np.ndarray
    counts: np.ndarray

    def __post_init__(self):
        alpha = np.asarray(self.alpha, dtype=np.float64)
        counts = np.asarray(self.counts, dtype=np.int64)
        if alpha.ndim != 1 or np.any(alpha <= 0):
            raise ValueError("Dirichlet alpha must be a vector of positive reals")
        if counts.shape != alpha.shape or np.any(counts < 0):
            raise ValueError("counts must be non-negative and match alpha's length")
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "counts", counts)

    @classmethod
    def with_prior(cls, alpha) -> "DirichletPosterior":
        alpha = np.asarray(alpha, dtype=np.float64)
        return cls(alpha=alpha, counts=np.zeros(alpha.size, dtype=np.int64))

    @property
    def num_classes(self) -> int:
        return self.alpha.size

    @property
    def eff_alpha(self) -> np.ndarray:
        return self.alpha + self.counts

    @property
    def trials(self) -> int:
        return int(self.counts.sum())

    def update(self, true_class: int) -> "DirichletPosterior":
        if not 0 <= true_class < self.num_classes:
            raise ValueError(f"class index {true_class} out of range for K={self.num_classes}")
        counts = self.counts.copy()
        counts[true_class] += 1
        return DirichletPosterior(alpha=self.alpha, counts=counts)

    def mean(self) -> np.ndarray:
        eff = self.eff_alpha
        return eff / eff.sum()

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        """One draw via K independent Gamma(eff_alpha_j, 1) normalized to sum 1."""
        gammas = rng.gamma(shape=self.eff_alpha, scale=1.0)
        return gammas / gammas.sum()

    def marginal_summary(self, j: int, level: float = 0.95) -> PosteriorSummary:
        # marginal of component j is Beta(alpha_j, alpha_0 - alpha_j)
        eff = self.eff_alpha
        marginal = BetaPosterior(alpha=float(eff[j]), beta=float(eff.sum() - eff[j]))
        return marginal.summarize(level)

    def total_variance(self) -> float:
        """Sum of the marginal variances across components."""
        eff = self.eff_alpha
        a0 = eff.sum()
        return float(np.sum(eff * (a0 - eff)) / (a0 * a0 * (a0 + 1.0)))

    def to_dict(self):
        return {
            "alpha": [float(a) for a in self.alpha],
            "counts": [int(c) for c in self.counts],
        }

    @classmethod
    def from_dict(cls, d):
        return cls(alpha=np.asarray(d["alpha"], dtype=np.float64),
                   counts=np.asarray(d["counts"], dtype=np.int64))


def summarize_samples(samples: np.ndarray, level: float = 0.95) -> PosteriorSummary:
    """Empirical mean and central quantile interval of Monte-Carlo draws."""
    samples = np.asarray(samples, dtype=np.float64)
    if samples.size == 0:
        raise ValueError("cannot summarize zero samples")
    tail = (1.0 - level) / 2.0
    lo, hi = np.quantile(samples, [tail, 1.0 - tail])
    return PosteriorSummary(mean=float(samples.mean()), ci_low=float(lo), ci_high=float(hi), level=level)
