"""Evaluation of assessment runs against full-pool ground truth: weighted
RMSE, scaled confusion RMSE, mean reciprocal rank, labels-to-identify,
relative ECE error, comparison success, and multi-run aggregation with a
Wilcoxon signed-rank test.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .metrics import ece_exact, rope_compare
from .pool import GroupIndex, PartitionSpec, Pool, assign_groups
from .posterior import BetaPosterior
from .priors import PriorConfig, beta_priors, dirichlet_priors

WILCOXON_EXACT_MAX_N = 20


@dataclass(frozen=True)
class GroundTruth:
    """Frozen full-pool truth for benchmark evaluation.

    accuracy[g] is the empirical accuracy of group g (0 for empty groups,
    which carry weight 0); confusion[j, k] = P(y = j | predicted k).
    """

    weights: np.ndarray
    accuracy: np.ndarray
    confusion: np.ndarray | None = None
    ece_marginal: float | None = None
    classwise_ece: np.ndarray | None = None
    expected_cost: np.ndarray | None = None
    rope: dict = field(default_factory=dict)

    def top_set(self, task: str, m: int, direction: str) -> set[int]:
        """True m most extreme groups for an identification task."""
        if task == "identify-accuracy":
            values = self.accuracy
        elif task == "identify-ece":
            values = self.classwise_ece
        elif task == "identify-cost":
            values = self.expected_cost
        else:
            raise ValueError(f"no top-set for task {task!r}")
        if values is None:
            raise ValueError(f"ground truth lacks the metric for {task!r}")
        oriented = values if direction == "min" else -values
        if m > oriented.size:
            raise ValueError(f"m={m} exceeds {oriented.size} groups")
        return {int(g) for g in np.argsort(oriented, kind="stable")[:m]}

    def rope_truth(self, pair) -> tuple[int, float]:
        key = tuple(pair)
        if key not in self.rope:
            raise ValueError(f"ground truth has no ROPE entry for pair {key}")
        return self.rope[key]


def _group_accuracy(pool: Pool, index: GroupIndex) -> np.ndarray:
    acc = np.zeros(index.num_groups)
    for g, members in enumerate(index.members):
        if members:
            correct = sum(1 for pos in members
                          if pool.records[pos].label == pool.records[pos].predicted)
            acc[g] = correct / len(members)
    return acc


def _confusion_truth(pool: Pool, class_index: GroupIndex) -> np.ndarray:
    k = pool.num_classes
    counts = np.zeros((k, k))
    for r in pool:
        counts[r.label, r.predicted] += 1
    col_totals = counts.sum(axis=0, keepdims=True)
    return np.divide(counts, col_totals, out=np.zeros_like(counts), where=col_totals > 0)


def compute_ground_truth(pool: Pool, cfg) -> GroundTruth:
    """Evaluate every task-relevant metric on the fully labeled pool.

    cfg is a session config; its partition/prior/seed determine the grouping,
    the reference posteriors for ROPE truth, and the MC stream.
    """
    if not pool.fully_labeled:
        raise ValueError("ground truth requires a fully labeled pool")
    index = assign_groups(pool, cfg.partition)
    weights = index.weights
    accuracy = _group_accuracy(pool, index)

    kwargs = {}
    if cfg.task in ("estimate-confusion", "identify-cost"):
        kwargs["confusion"] = _confusion_truth(pool, index)
        if cfg.cost_matrix is not None:
            kwargs["expected_cost"] = np.sum(cfg.cost_matrix.c * kwargs["confusion"], axis=0)
    if cfg.task == "identify-ece":
        b = cfg.partition.num_bins
        k = pool.num_classes
        cell_counts = np.array([len(m) for m in index.members], dtype=np.float64).reshape(k, b)
        cell_acc = _group_accuracy(pool, index).reshape(k, b)
        cell_conf = index.mean_confidence.reshape(k, b)
        class_totals = cell_counts.sum(axis=1, keepdims=True)
        w = np.divide(cell_counts, class_totals, out=np.zeros_like(cell_counts),
                      where=class_totals > 0)
        kwargs["classwise_ece"] = np.sum(w * np.abs(cell_acc - cell_conf), axis=1)
        weights = (class_totals[:, 0] / class_totals.sum())
        # classwise accuracy truth for completeness: accuracy over the class
        acc_by_class = np.divide((cell_acc * cell_counts).sum(axis=1), class_totals[:, 0],
                                 out=np.zeros(k), where=class_totals[:, 0] > 0)
        accuracy = acc_by_class
    if cfg.task == "compare":
        pair = cfg.compare_pair or (0, 1)
        posts = _full_pool_posteriors(pool, index, cfg.prior)
        rng = np.random.default_rng(np.random.SeedSequence(cfg.seed, spawn_key=(2,)))
        result = rope_compare(posts[pair[0]], posts[pair[1]], cfg.rope_epsilon,
                              cfg.n_samples, rng)
        kwargs["rope"] = {tuple(pair): (result.eta, result.lam)}

    return GroundTruth(weights=weights, accuracy=accuracy, **kwargs)


def _full_pool_posteriors(pool: Pool, index: GroupIndex, prior: PriorConfig) -> list[BetaPosterior]:
    posts = beta_priors(index, prior)
    for g, members in enumerate(index.members):
        correct = sum(1 for pos in members
                      if pool.records[pos].label == pool.records[pos].predicted)
        posts[g] = BetaPosterior(posts[g].alpha, posts[g].beta,
                                 successes=correct, trials=len(members))
    return posts


def marginal_ece_truth(pool: Pool, num_bins: int = 10) -> float:
    """Frequentist ECE of the fully labeled pool over equal-width score bins."""
    index = assign_groups(pool, PartitionSpec(kind="score-bin", num_bins=num_bins))
    acc = _group_accuracy(pool, index)
    populated = index.weights > 0
    return ece_exact(index.weights[populated], acc[populated],
                     index.mean_confidence[populated])


def rmse_groupwise(estimates, truth, weights) -> float:
    """Weighted RMSE (sum_g p_g (theta_g - est_g)^2)^(1/2); weight-0 groups
    are excluded so empty groups cannot poison the result."""
    est = np.asarray(estimates, dtype=np.float64)
    tru = np.asarray(truth, dtype=np.float64)
    p = np.asarray(weights, dtype=np.float64)
    if not (est.shape == tru.shape == p.shape):
        raise ValueError("estimates, truth, and weights must have equal length")
    mask = p > 0
    return float(np.sqrt(np.sum(p[mask] * (tru[mask] - est[mask]) ** 2)))


def rmse_confusion(estimate, truth, class_weights) -> float:
    """(sum_k p_k sum_j (theta_jk - est_jk)^2)^(1/2) over confusion columns."""
    est = np.asarray(estimate, dtype=np.float64)
    tru = np.asarray(truth, dtype=np.float64)
    p = np.asarray(class_weights, dtype=np.float64)
    if est.shape != tru.shape or est.shape[1] != p.size:
        raise ValueError("confusion shapes do not match")
    mask = p > 0
    sq = ((tru - est) ** 2).sum(axis=0)
    return float(np.sqrt(np.sum(p[mask] * sq[mask])))


def rmse_confusion_scaled(estimate, truth, class_weights, theta0: float) -> float:
    """Confusion RMSE divided by theta0, the RMSE of the no-label informative
    estimate; values above 1 mean labels made things worse than scores alone."""
    if theta0 <= 0:
        raise ValueError("reference theta0 must be positive")
    return rmse_confusion(estimate, truth, class_weights) / theta0


def confusion_reference(pool: Pool, prior_strength: float | None = None) -> np.ndarray:
    """The zero-label confusion estimate from scores alone (informative prior mean)."""
    index = assign_groups(pool, PartitionSpec(kind="predicted-class"))
    cfg = PriorConfig(kind="informative", strength=prior_strength)
    priors = dirichlet_priors(pool, index, cfg)
    return np.stack([p.mean() for p in priors], axis=1)


def mrr(predicted_order, true_top: set[int]) -> float:
    """Mean reciprocal rank of the true top-m groups within a predicted order.

    When reading the rank of one true member, the other true members are
    removed from the list above it, so a predicted top-m that equals the true
    top-m scores exactly 1 regardless of internal order.
    """
    if not true_top:
        raise ValueError("true_top must be non-empty")
    order = list(predicted_order)
    if len(set(order)) != len(order):
        raise ValueError("predicted order contains duplicates")
    missing = true_top.difference(order)
    if missing:
        raise ValueError(f"true members {sorted(missing)} absent from the predicted order")
    total = 0.0
    for member in true_top:
        rank = 1
        for g in order:
            if g == member:
                break
            if g not in true_top:
                rank += 1
        total += 1.0 / rank
    return total / len(true_top)


@dataclass(frozen=True)
class IdentificationResult:
    reached: bool
    step: int | None
    percent: float | None

    def to_dict(self):
        return {"reached": self.reached, "step": self.step, "percent": self.percent}


def labels_to_identify(mrr_series, pool_size: int, threshold: float = 0.99,
                       sustained: bool = False) -> IdentificationResult:
    """First step whose MRR exceeds the threshold, as a count and % of pool.

    sustained=True instead finds the first step after which the MRR never
    drops back to the threshold or below.
    """
    series = list(mrr_series)
    crossing = None
    if sustained:
        for i in range(len(series) - 1, -1, -1):
            if series[i] > threshold:
                crossing = i + 1
            else:
                break
    else:
        for i, value in enumerate(series):
            if value > threshold:
                crossing = i + 1
                break
    if crossing is None:
        return IdentificationResult(reached=False, step=None, percent=None)
    return IdentificationResult(reached=True, step=crossing,
                                percent=100.0 * crossing / pool_size)


def ece_percentage_error(estimates, ece_true: float) -> float:
    """Mean relative absolute ECE estimation error across runs, in percent."""
    if ece_true <= 0:
        raise ValueError("ground-truth ECE must be positive")
    est = np.asarray(estimates, dtype=np.float64)
    return float(100.0 * np.mean(np.abs(est - ece_true) / ece_true))


def comparison_success(result, eta_star: int, lam_star: float, rtol: float = 0.05) -> bool:
    """True when the winning ROPE region matches truth and lambda is within
    rtol of its full-pool value. `result` is a RopeResult (or anything with
    eta / lam attributes)."""
    if result.eta != eta_star:
        return False
    return abs(result.lam - lam_star) / lam_star < rtol


def _signed_rank_statistic(differences):
    d = np.asarray(differences, dtype=np.float64)
    d = d[d != 0]
    n = d.size
    if n == 0:
        return 0.0, np.array([]), 0
    order = np.abs(d)
    # average ranks for ties
    sorter = np.argsort(order, kind="stable")
    ranks = np.empty(n)
    sorted_abs = order[sorter]
    i = 0
    while i < n:
        j = i
        while j + 1 < n and sorted_abs[j + 1] == sorted_abs[i]:
            j += 1
        ranks[sorter[i:j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    w_plus = float(ranks[d > 0].sum())
    return w_plus, ranks, n


def _exact_signed_rank_pvalue(w_plus, ranks):
    # distribution of W+ over the 2^n equiprobable sign assignments, built by
    # convolution over doubled ranks (ties give half-integer average ranks)
    doubled = np.rint(ranks * 2).astype(np.int64)
    pmf = np.array([1.0])
    for r in doubled:
        extended = np.zeros(pmf.size + r)
        extended[:pmf.size] += pmf
        extended[r:] += pmf
        pmf = extended / 2.0
    support = np.arange(pmf.size)
    center = doubled.sum() / 2.0
    observed = abs(2.0 * w_plus - center)
    p = float(pmf[np.abs(support - center) >= observed - 1e-9].sum())
    return min(1.0, p)


def _normal_signed_rank_pvalue(w_plus, ranks, n):
    mean = n * (n + 1) / 4.0
    var = n * (n + 1) * (2 * n + 1) / 24.0
    # tie correction on the rank variance
    _, counts = np.unique(ranks, return_counts=True)
    var -= np.sum(counts**3 - counts) / 48.0
    if var <= 0:
        return 1.0
    diff = w_plus - mean
    correction = 0.5 * np.sign(diff)
    z = (diff - correction) / math.sqrt(var)
    return float(2.0 * 0.5 * math.erfc(abs(z) / math.sqrt(2.0)))


def wilcoxon_signed_rank(x, y=None) -> tuple[float, float]:
    """Two-sided Wilcoxon signed-rank test; returns (W+, p).

    Zero differences are dropped. The null distribution is exact (full
    enumeration via convolution) for n <= 20 non-zero pairs, and a normal
    approximation with continuity and tie corrections above. All-zero
    differences give p = 1 (no evidence of any difference).
    """
    x = np.asarray(x, dtype=np.float64)
    if y is not None:
        y = np.asarray(y, dtype=np.float64)
        if x.shape != y.shape:
            raise ValueError("paired samples must have equal length")
        d = x - y
    else:
        d = x
    w_plus, ranks, n = _signed_rank_statistic(d)
    if n == 0:
        return 0.0, 1.0
    if n <= WILCOXON_EXACT_MAX_N:
        return w_plus, _exact_signed_rank_pvalue(w_plus, ranks)
    return w_plus, _normal_signed_rank_pvalue(w_plus, ranks, n)


def aggregate_runs(values, baseline=None, alpha: float = 0.05) -> dict:
    """Mean and standard error over runs; when a paired baseline is given,
    adds the two-sided Wilcoxon signed-rank comparison at level alpha."""
    v = np.asarray(values, dtype=np.float64)
    if v.size < 2:
        raise ValueError("aggregation needs at least 2 runs")
    out = {
        "mean": float(v.mean()),
        "se": float(v.std(ddof=1) / math.sqrt(v.size)),
        "n_runs": int(v.size),
    }
    if baseline is not None:
        b = np.asarray(baseline, dtype=np.float64)
        if b.shape != v.shape:
            raise ValueError("paired baseline must match the number of runs")
        stat, p = wilcoxon_signed_rank(v, b)
        out["wilcoxon_statistic"] = stat
        out["p_value"] = p
        out["significant"] = bool(p < alpha)
    return out
