"""Arm-selection policies: Thompson sampling and friends.

Each assessment task defines a reward over arms; a RewardContext turns the
current posterior state into sampled / point-estimate rewards so the
selection policies stay task-agnostic. All policies are pure functions of
(context, config, rng): given the same posterior state and generator state
they return the same arm.

RNG discipline (matters for the reduction identities): every Thompson-family
policy consumes exactly one joint reward draw per call, so TTTS with
beta_resample=0 and MP-TS with m=1 replay TS bit-for-bit on a shared stream;
epsilon-greedy with epsilon >= 1 skips its gate draw and consumes exactly
what the random baseline consumes.
"""

from dataclasses import dataclass

import numpy as np

from .posterior import BetaPosterior

STRATEGY_KINDS = (
    "random", "thompson", "top-two-thompson", "multiple-play-thompson",
    "epsilon-greedy", "bayes-ucb", "variance-greedy", "comparison-greedy",
)
TASKS = (
    "estimate-accuracy", "estimate-confusion", "identify-accuracy",
    "identify-ece", "identify-cost", "compare",
)

TTTS_MAX_RESAMPLE = 10_000
TTTS_CHUNK = 128
UCB_MC_SAMPLES = 10_000


@dataclass(frozen=True)
class StrategyConfig:
    kind: str = "thompson"
    m: int = 1
    beta_resample: float = 0.5
    epsilon: float = 0.1
    ucb_quantile: float = 0.975
    direction: str = "min"

    def __post_init__(self):
        if self.kind not in STRATEGY_KINDS:
            raise ValueError(f"unknown strategy kind {self.kind!r}")
        if self.m < 1:
            raise ValueError("m must be a positive integer")
        if not 0.0 <= self.beta_resample <= 1.0:
            raise ValueError("beta_resample must lie in [0, 1]")
        if not 0.0 <= self.epsilon <= 1.0:
            raise ValueError("epsilon must lie in [0, 1]")
        if not 0.0 < self.ucb_quantile < 1.0:
            raise ValueError("ucb_quantile must lie in (0, 1)")
        if self.direction not in ("min", "max"):
            raise ValueError("direction must be 'min' or 'max'")

    def to_dict(self):
        return {
            "kind": self.kind, "m": self.m, "beta_resample": self.beta_resample,
            "epsilon": self.epsilon, "ucb_quantile": self.ucb_quantile,
            "direction": self.direction,
        }

    @classmethod
    def from_dict(cls, d):
        known = {f: d[f] for f in ("kind", "m", "beta_resample", "epsilon",
                                   "ucb_quantile", "direction") if f in d}
        return cls(**known)


class RewardContext:
    """Maps posterior state to per-arm rewards; larger reward = more worth pulling.

    eligible marks arms that still have unlabeled instances; policies never
    return an ineligible arm.
    """

    eligible: np.ndarray

    def sample_rewards(self, rng, size=None) -> np.ndarray:
        """One joint posterior draw mapped to rewards; shape (G,) or (size, G)."""
        raise NotImplementedError

    def mean_rewards(self) -> np.ndarray:
        """Rewards at the posterior means (the greedy point estimate)."""
        raise NotImplementedError

    @property
    def num_arms(self) -> int:
        return self.eligible.size

    def num_eligible(self) -> int:
        return int(self.eligible.sum())


def _oriented(values: np.ndarray, direction: str) -> np.ndarray:
    return -values if direction == "min" else values


class AccuracyIdentifyContext(RewardContext):
    """Reward = sampled accuracy, negated for direction='min' (Table-style
    least/most accurate group identification)."""

    def __init__(self, posteriors, direction="min", eligible=None):
        self.a = np.array([p.eff_alpha for p in posteriors])
        self.b = np.array([p.eff_beta for p in posteriors])
        self.direction = direction
        self.eligible = np.ones(self.a.size, bool) if eligible is None else np.asarray(eligible, bool)

    def sample_rewards(self, rng, size=None):
        shape = (self.a.size,) if size is None else (size, self.a.size)
        return _oriented(rng.beta(self.a, self.b, size=shape), self.direction)

    def mean_rewards(self):
        return _oriented(self.a / (self.a + self.b), self.direction)


def _beta_variance(a, b):
    n = a + b
    return a * b / (n * n * (n + 1.0))


def _beta_variance_drop(a, b):
    """Per-outcome posterior-variance reductions (drop1, drop0) after one more
    Bernoulli observation."""
    var = _beta_variance(a, b)
    return var - _beta_variance(a + 1.0, b), var - _beta_variance(a, b + 1.0)


class AccuracyEstimateContext(RewardContext):
    """Variance-reduction reward for estimation:
    r(z|g) = p_g * (Var(theta_g | L) - Var(theta_g | L, z)).

    sample_rewards weights the two z branches by a sampled theta (Thompson);
    mean_rewards weights them by the posterior predictive (variance-greedy).
    """

    def __init__(self, posteriors, weights, eligible=None):
        self.a = np.array([p.eff_alpha for p in posteriors])
        self.b = np.array([p.eff_beta for p in posteriors])
        self.weights = np.asarray(weights, dtype=np.float64)
        self.eligible = np.ones(self.a.size, bool) if eligible is None else np.asarray(eligible, bool)

    def _expected_drop(self, theta):
        drop1, drop0 = _beta_variance_drop(self.a, self.b)
        return self.weights * (theta * drop1 + (1.0 - theta) * drop0)

    def sample_rewards(self, rng, size=None):
        shape = (self.a.size,) if size is None else (size, self.a.size)
        return self._expected_drop(rng.beta(self.a, self.b, size=shape))

    def mean_rewards(self):
        return self._expected_drop(self.a / (self.a + self.b))


class EceIdentifyContext(RewardContext):
    """Reward = sampled classwise calibration error
    sum_b p_gb * |theta_gb - s_gb| with within-class bin weights."""

    def __init__(self, cell_posteriors, cell_weights, cell_confidences,
                 direction="max", eligible=None):
        # cell_* have shape (G, B); weights are renormalized within each class
        self.a = np.array([[c.eff_alpha for c in row] for row in cell_posteriors])
        self.b = np.array([[c.eff_beta for c in row] for row in cell_posteriors])
        w = np.asarray(cell_weights, dtype=np.float64)
        totals = w.sum(axis=1, keepdims=True)
        self.w = np.divide(w, totals, out=np.zeros_like(w), where=totals > 0)
        self.s = np.asarray(cell_confidences, dtype=np.float64)
        self.direction = direction
        self.eligible = np.ones(self.a.shape[0], bool) if eligible is None else np.asarray(eligible, bool)

    def _ece(self, theta):
        return np.sum(self.w * np.abs(theta - self.s), axis=-1)

    def sample_rewards(self, rng, size=None):
        shape = self.a.shape if size is None else (size, *self.a.shape)
        return _oriented(self._ece(rng.beta(self.a, self.b, size=shape)), self.direction)

    def mean_rewards(self):
        return _oriented(self._ece(self.a / (self.a + self.b)), self.direction)


class CostIdentifyContext(RewardContext):
    """Reward = sampled classwise expected cost sum_j c_jk * theta_jk."""

    def __init__(self, posteriors, costs, direction="max", eligible=None):
        # eff[:, k] is the Dirichlet parameter vector of predicted class k
        self.eff = np.stack([p.eff_alpha for p in posteriors], axis=1)
        self.costs = costs.c
        self.direction = direction
        self.eligible = np.ones(self.eff.shape[1], bool) if eligible is None else np.asarray(eligible, bool)

    def _cost(self, theta):
        return np.sum(self.costs * theta, axis=-2)

    def sample_rewards(self, rng, size=None):
        shape = self.eff.shape if size is None else (size, *self.eff.shape)
        gammas = rng.gamma(shape=np.broadcast_to(self.eff, shape), scale=1.0)
        theta = gammas / gammas.sum(axis=-2, keepdims=True)
        return _oriented(self._cost(theta), self.direction)

    def mean_rewards(self):
        theta = self.eff / self.eff.sum(axis=0, keepdims=True)
        return _oriented(self._cost(theta), self.direction)


class ConfusionEstimateContext(RewardContext):
    """Variance-reduction reward for confusion-matrix estimation with
    Dirichlet columns: r(z|k) = p_k * (TotalVar(L) - TotalVar(L, z))."""

    def __init__(self, posteriors, weights, eligible=None):
        self.eff = np.stack([p.eff_alpha for p in posteriors], axis=1)  # (K, G)
        self.weights = np.asarray(weights, dtype=np.float64)
        self.eligible = np.ones(self.eff.shape[1], bool) if eligible is None else np.asarray(eligible, bool)

    def _drops(self):
        """Per-arm, per-outcome total-variance reductions, shape (K, G)."""
        eff = self.eff
        a0 = eff.sum(axis=0, keepdims=True)
        total = np.sum(eff * (a0 - eff), axis=0, keepdims=True) / (a0 * a0 * (a0 + 1.0))
        # after observing outcome j: alpha_j += 1, alpha_0 += 1
        s = np.sum(eff * (a0 - eff), axis=0, keepdims=True)
        numer = s + a0 - eff * (a0 + 1.0 - eff) + (eff + 1.0) * (a0 - eff)
        after = numer / ((a0 + 1.0) ** 2 * (a0 + 2.0))
        return total - after

    def _expected_drop(self, theta):
        return self.weights * np.sum(theta * self._drops(), axis=-2)

    def sample_rewards(self, rng, size=None):
        shape = self.eff.shape if size is None else (size, *self.eff.shape)
        gammas = rng.gamma(shape=np.broadcast_to(self.eff, shape), scale=1.0)
        theta = gammas / gammas.sum(axis=-2, keepdims=True)
        return self._expected_drop(theta)

    def mean_rewards(self):
        theta = self.eff / self.eff.sum(axis=0, keepdims=True)
        return self._expected_drop(theta)


def _masked_argmax(rewards: np.ndarray, eligible: np.ndarray) -> int:
    if not eligible.any():
        raise ValueError("no eligible arms")
    masked = np.where(eligible, rewards, -np.inf)
    return int(np.argmax(masked))


def _masked_top_m(rewards: np.ndarray, eligible: np.ndarray, m: int) -> list[int]:
    if m > eligible.sum():
        raise ValueError(f"m={m} exceeds the {int(eligible.sum())} eligible arms")
    masked = np.where(eligible, rewards, -np.inf)
    order = np.argsort(-masked, kind="stable")
    return [int(g) for g in order[:m]]


def ts_select(ctx: RewardContext, rng) -> int:
    """Thompson sampling: one joint posterior draw, pick the arm with the
    largest expected reward under the sampled parameters."""
    return _masked_argmax(ctx.sample_rewards(rng), ctx.eligible)


def ttts_select(ctx: RewardContext, beta_resample, rng,
                max_resample=TTTS_MAX_RESAMPLE, chunk=TTTS_CHUNK) -> int:
    """Top-two Thompson sampling.

    Draws the TS winner I; with probability beta_resample keeps re-drawing
    until a different arm J wins and returns J. Re-sampling is capped at
    max_resample joint draws (degenerate posteriors never produce a
    challenger); the fallback is the runner-up of the last draw. Re-draws are
    consumed from the stream in chunks for speed.
    """
    rewards = ctx.sample_rewards(rng)
    winner = _masked_argmax(rewards, ctx.eligible)
    if beta_resample <= 0.0:
        return winner  # no gate draw: reduces to TS on an identical stream
    if rng.random() >= beta_resample:
        return winner
    if ctx.num_eligible() < 2:
        return winner
    masked = np.where(ctx.eligible, rewards, -np.inf)[None, :]
    attempts = 0
    while attempts < max_resample:
        n = min(chunk, max_resample - attempts)
        draws = ctx.sample_rewards(rng, size=n)
        masked = np.where(ctx.eligible, draws, -np.inf)
        winners = np.argmax(masked, axis=1)
        hits = np.nonzero(winners != winner)[0]
        if hits.size:
            return int(winners[hits[0]])
        attempts += n
    # runner-up of the last draw
    last = masked[-1].copy()
    last[winner] = -np.inf
    return _masked_argmax(last, ctx.eligible)


def mpts_select(ctx: RewardContext, m, rng) -> list[int]:
    """Multiple-play Thompson sampling: one joint draw, return the top-m arms."""
    return _masked_top_m(ctx.sample_rewards(rng), ctx.eligible, m)


def variance_greedy_select(ctx: RewardContext) -> int:
    """Greedy expected-variance-reduction pick (estimation tasks); ties to the
    lowest arm index. Deterministic: no generator is consumed."""
    return _masked_argmax(ctx.mean_rewards(), ctx.eligible)


def random_select(ctx: RewardContext, rng) -> int:
    arms = np.nonzero(ctx.eligible)[0]
    if arms.size == 0:
        raise ValueError("no eligible arms")
    return int(arms[rng.integers(arms.size)])


def epsilon_greedy_select(ctx: RewardContext, epsilon, rng) -> int:
    """Greedy on posterior-mean rewards with probability 1-epsilon, else uniform."""
    if epsilon >= 1.0:
        return random_select(ctx, rng)  # no gate draw: matches random's stream
    if epsilon > 0.0 and rng.random() < epsilon:
        return random_select(ctx, rng)
    return _masked_argmax(ctx.mean_rewards(), ctx.eligible)


def bayes_ucb_select(ctx: RewardContext, quantile=0.975, rng=None,
                     n_samples=UCB_MC_SAMPLES) -> int:
    """Arm with the largest upper reward quantile, estimated from Monte-Carlo
    reward draws (min-direction tasks see this as the lower metric quantile,
    since their reward is the negated metric)."""
    draws = ctx.sample_rewards(rng, size=n_samples)
    upper = np.quantile(draws, quantile, axis=0)
    return _masked_argmax(upper, ctx.eligible)


def baseline_select(kind, ctx: RewardContext, cfg: StrategyConfig, rng) -> int:
    if kind == "random":
        return random_select(ctx, rng)
    if kind == "epsilon-greedy":
        return epsilon_greedy_select(ctx, cfg.epsilon, rng)
    if kind == "bayes-ucb":
        return bayes_ucb_select(ctx, cfg.ucb_quantile, rng)
    raise ValueError(f"unknown baseline {kind!r}")


def comparison_select(post_a: BetaPosterior, post_b: BetaPosterior, epsilon=0.05,
                      n_samples=10_000, rng=None) -> int:
    """Maximal-expected-model-change pick between two groups (0 = A, 1 = B).

    For each candidate group and hypothetical outcome z, evaluates the ROPE
    confidence lambda on the updated posterior pair and weights the branches
    by the group's posterior predictive. All four branch evaluations share
    one derived substream (common random numbers) so the comparison is not
    drowned in Monte-Carlo noise. Ties go to A.
    """
    from .metrics import rope_compare  # local import to avoid a cycle

    branch_seed = int(rng.integers(2**63))

    def branch_lambda(a, b):
        branch_rng = np.random.Generator(np.random.PCG64(branch_seed))
        return rope_compare(a, b, epsilon, n_samples, branch_rng).lam

    expected = []
    for which, post in ((0, post_a), (1, post_b)):
        p1 = post.mean()
        lam1 = branch_lambda(post_a.update(1) if which == 0 else post_a,
                             post_b.update(1) if which == 1 else post_b)
        lam0 = branch_lambda(post_a.update(0) if which == 0 else post_a,
                             post_b.update(0) if which == 1 else post_b)
        expected.append(p1 * lam1 + (1.0 - p1) * lam0)
    return 1 if expected[1] > expected[0] else 0


def select_arms(cfg: StrategyConfig, ctx: RewardContext, rng) -> list[int]:
    """Dispatch a strategy config to its policy; always returns a list of arms."""
    if cfg.kind == "thompson":
        return [ts_select(ctx, rng)]
    if cfg.kind == "top-two-thompson":
        return [ttts_select(ctx, cfg.beta_resample, rng)]
    if cfg.kind == "multiple-play-thompson":
        return mpts_select(ctx, cfg.m, rng)
    if cfg.kind == "variance-greedy":
        return [variance_greedy_select(ctx)]
    if cfg.kind in ("random", "epsilon-greedy", "bayes-ucb"):
        return [baseline_select(cfg.kind, ctx, cfg, rng)]
    raise ValueError(f"strategy {cfg.kind!r} is not arm-dispatchable")
