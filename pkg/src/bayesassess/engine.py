"""The assessment session loop: select a group, draw an instance, query the
oracle, update the posterior, log the step.

A session is strictly sequential. ActiveSession exposes the loop as
next_query / submit so the same code path serves both replay simulation
(run_session) and the HTTP labeling service; feeding the same outcome
sequence through either path yields identical posterior states.
"""

import hashlib
import json
from dataclasses import dataclass, field, replace

import numpy as np

from .evalharness import GroundTruth, comparison_success, mrr
from .metrics import DEFAULT_MC_SAMPLES, rope_compare
from .pool import (CostMatrix, PartitionSpec, Pool, assign_groups,
                   load_cost_matrix, score_bin_of)
from .priors import PriorConfig, beta_priors, dirichlet_priors
from .strategies import (AccuracyEstimateContext, AccuracyIdentifyContext,
                         ConfusionEstimateContext, CostIdentifyContext,
                         EceIdentifyContext, StrategyConfig, TASKS,
                         comparison_select, select_arms)

OUTCOME_KINDS = ("correctness", "true-class")
BETA_TASKS = ("estimate-accuracy", "identify-accuracy", "compare")
DIRICHLET_TASKS = ("estimate-confusion", "identify-cost")
IDENTIFY_TASKS = ("identify-accuracy", "identify-ece", "identify-cost")
MRR_STOP_THRESHOLD = 0.99
LAMBDA_STOP_RTOL = 0.05


class ConfigError(ValueError):
    pass


class OracleError(RuntimeError):
    pass


class SessionDone(RuntimeError):
    def __init__(self, reason):
        self.reason = reason
        super().__init__(f"session is over ({reason})")


class SubmitMismatch(ValueError):
    """The submitted instance does not match the pending query."""


@dataclass(frozen=True)
class SessionConfig:
    partition: PartitionSpec
    prior: PriorConfig
    strategy: StrategyConfig
    task: str
    seed: int
    budget: int | None = None  # None = until stopped or exhausted
    outcome_kind: str = "correctness"
    compare_pair: tuple[int, int] | None = None
    cost_matrix: CostMatrix | None = None
    rope_epsilon: float = 0.05
    n_samples: int = DEFAULT_MC_SAMPLES
    snapshot_every: int = 100

    def __post_init__(self):
        if self.task not in TASKS:
            raise ConfigError(f"unknown task {self.task!r}")
        if self.budget is not None and self.budget < 1:
            raise ConfigError("budget must be >= 1 (or null for until-stopped)")
        if self.outcome_kind not in OUTCOME_KINDS:
            raise ConfigError(f"unknown outcome kind {self.outcome_kind!r}")
        if self.task in DIRICHLET_TASKS:
            if self.outcome_kind != "true-class":
                raise ConfigError(f"task {self.task!r} requires outcome_kind='true-class'")
            if self.partition.kind != "predicted-class":
                raise ConfigError(f"task {self.task!r} requires a predicted-class partition")
        if self.task == "identify-cost" and self.cost_matrix is None:
            raise ConfigError("identify-cost requires a cost matrix")
        if self.task == "identify-ece" and self.partition.kind != "class-and-bin":
            raise ConfigError("identify-ece requires a class-and-bin partition")
        if self.rope_epsilon <= 0:
            raise ConfigError("rope_epsilon must be positive")

    def digest(self) -> str:
        return hashlib.sha256(
            json.dumps(self.to_dict(), sort_keys=True).encode()
        ).hexdigest()[:16]

    def to_dict(self):
        d = {
            "partition": self.partition.to_dict(),
            "prior": self.prior.to_dict(),
            "strategy": self.strategy.to_dict(),
            "task": self.task,
            "seed": self.seed,
            "budget": self.budget if self.budget is not None else "until-stopped",
            "outcome_kind": self.outcome_kind,
            "rope_epsilon": self.rope_epsilon,
            "n_samples": self.n_samples,
        }
        if self.compare_pair is not None:
            d["compare_pair"] = list(self.compare_pair)
        if self.cost_matrix is not None:
            d["cost_matrix"] = [[float(v) for v in row] for row in self.cost_matrix.c]
        return d

    @classmethod
    def from_dict(cls, d):
        budget = d.get("budget")
        if budget in (None, "until-stopped"):
            budget = None
        else:
            budget = int(budget)
        cost = d.get("cost_matrix")
        if isinstance(cost, str):
            cost = load_cost_matrix(cost)
        elif cost is not None:
            cost = CostMatrix(np.asarray(cost, dtype=np.float64))
        pair = d.get("compare_pair")
        strategy = dict(d.get("strategy", {}))
        task = d["task"]
        # the interesting direction is task-dependent: least accurate group,
        # but most costly / least calibrated class
        if "direction" not in strategy:
            strategy["direction"] = "max" if task in ("identify-ece", "identify-cost") else "min"
        return cls(
            partition=PartitionSpec.from_dict(d["partition"]),
            prior=PriorConfig.from_dict(d.get("prior", {})),
            strategy=StrategyConfig.from_dict(strategy),
            task=task,
            seed=int(d["seed"]),
            budget=budget,
            outcome_kind=d.get("outcome_kind", "true-class" if task in DIRICHLET_TASKS else "correctness"),
            compare_pair=tuple(pair) if pair is not None else None,
            cost_matrix=cost,
            rope_epsilon=float(d.get("rope_epsilon", 0.05)),
            n_samples=int(d.get("n_samples", DEFAULT_MC_SAMPLES)),
            snapshot_every=int(d.get("snapshot_every", 100)),
        )


def load_config_file(path):
    """Read a session config JSON document; returns (SessionConfig, n_runs)."""
    with open(path) as fh:
        doc = json.load(fh)
    runs = int(doc.pop("runs", 1))
    return SessionConfig.from_dict(doc), runs


@dataclass
class Trajectory:
    """Columnar log of one session: step i holds (group, instance, outcome,
    posterior digest). Full posterior snapshots are kept every
    `snapshot_every` steps and at the end."""

    seed: int
    config_digest: str
    run_index: int = 0
    groups: list = field(default_factory=list)
    instance_ids: list = field(default_factory=list)
    outcomes: list = field(default_factory=list)
    post_means: list = field(default_factory=list)
    post_trials: list = field(default_factory=list)
    terminal_reason: str | None = None
    snapshots: dict = field(default_factory=dict)
    mrr_series: list | None = None

    @property
    def num_steps(self) -> int:
        return len(self.groups)

    def append(self, group, instance_id, outcome, post_mean, post_trials):
        self.groups.append(int(group))
        self.instance_ids.append(instance_id)
        self.outcomes.append(int(outcome))
        self.post_means.append(float(post_mean))
        self.post_trials.append(int(post_trials))

    def iter_steps(self):
        for i in range(self.num_steps):
            yield {
                "i": i + 1,
                "group": self.groups[i],
                "id": self.instance_ids[i],
                "z": self.outcomes[i],
                "post": {"mean": self.post_means[i], "trials": self.post_trials[i]},
            }

    def write_jsonl(self, fh):
        header = {"run": self.run_index, "seed": self.seed, "config_digest": self.config_digest}
        fh.write(json.dumps(header, sort_keys=True) + "\n")
        for step in self.iter_steps():
            fh.write(json.dumps(step, sort_keys=True) + "\n")
        footer = {"terminal": self.terminal_reason, "steps": self.num_steps}
        fh.write(json.dumps(footer, sort_keys=True) + "\n")

    def to_jsonl(self, path):
        with open(path, "w") as fh:
            self.write_jsonl(fh)


def write_trajectories(trajectories, path):
    with open(path, "w") as fh:
        for t in trajectories:
            t.write_jsonl(fh)


def read_trajectories(path) -> list[Trajectory]:
    trajectories = []
    current = None
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            row = json.loads(line)
            if "run" in row and "seed" in row:
                current = Trajectory(seed=row["seed"], config_digest=row["config_digest"],
                                     run_index=row["run"])
                trajectories.append(current)
            elif "terminal" in row:
                if current is not None:
                    current.terminal_reason = row["terminal"]
            else:
                if current is None:  # headerless file: single anonymous run
                    current = Trajectory(seed=0, config_digest="")
                    trajectories.append(current)
                current.append(row["group"], row["id"], row["z"],
                               row["post"]["mean"], row["post"]["trials"])
    return trajectories


class ReplayOracle:
    """Answers label queries from a fully labeled pool, one query per instance.

    Labels are revealed only through query(); nothing else exposes them.
    """

    kind = "replay"

    def __init__(self, pool: Pool):
        for r in pool:
            if r.label is None:
                raise OracleError(f"record {r.id!r} has no label; replay oracle needs a fully labeled pool")
        self._labels = {r.id: r.label for r in pool}
        self._queried = set()

    def query(self, instance_id: str) -> int:
        if len(self._queried) == len(self._labels):
            raise OracleError("replay oracle exhausted: every instance has been queried")
        if instance_id in self._queried:
            raise OracleError(f"instance {instance_id!r} was already queried")
        if instance_id not in self._labels:
            raise OracleError(f"unknown instance {instance_id!r}")
        self._queried.add(instance_id)
        return self._labels[instance_id]


def make_replay_oracle(pool: Pool) -> ReplayOracle:
    return ReplayOracle(pool)


@dataclass(frozen=True)
class PendingQuery:
    instance_id: str
    group: int
    group_name: str
    predicted_class: int
    confidence: float
    step: int
    display_url: str | None = None

    def to_dict(self):
        return {
            "instance_id": self.instance_id,
            "group": self.group,
            "group_name": self.group_name,
            "predicted_class": self.predicted_class,
            "confidence": self.confidence,
            "step": self.step,
            "display_url": self.display_url,
        }


class ActiveSession:
    """Mutable state of one assessment session over an immutable pool."""

    def __init__(self, pool: Pool, cfg: SessionConfig):
        self.pool = pool
        self.cfg = cfg
        self.rng = np.random.default_rng(cfg.seed)
        self.index = assign_groups(pool, cfg.partition)
        self._setup_arms()
        self.trajectory = Trajectory(seed=cfg.seed, config_digest=cfg.digest())
        self._queue: list[PendingQuery] = []
        self._member_maps: dict[int, dict] = {}  # lazy pos->slot maps for log replay
        self._terminal: str | None = None
        # dedicated stream for stopping-rule Monte Carlo so benchmark
        # evaluation never perturbs the selection stream
        self._eval_rng = np.random.default_rng(np.random.SeedSequence(cfg.seed, spawn_key=(1,)))
        self._last_submit = None

    def _setup_arms(self):
        pool, cfg = self.pool, self.cfg
        task = cfg.task
        if task == "identify-ece":
            # arms are predicted classes; posterior cells live on class x bin
            k, b = pool.num_classes, cfg.partition.num_bins
            cells = beta_priors(self.index, cfg.prior)
            self.cells = [[cells[c * b + j] for j in range(b)] for c in range(k)]
            counts = np.array([len(m) for m in self.index.members], dtype=np.float64)
            self.cell_weights = counts.reshape(k, b)
            self.cell_conf = self.index.mean_confidence.reshape(k, b)
            self.arm_names = tuple(f"class:{c}" for c in range(k))
            members = [[] for _ in range(k)]
            for c in range(k):
                for j in range(b):
                    members[c].extend(self.index.members[c * b + j])
            self._members = [sorted(m) for m in members]
            counts_by_class = self.cell_weights.sum(axis=1)
            self.arm_weights = counts_by_class / counts_by_class.sum()
            self.cell_weights /= counts.sum()
        elif task in DIRICHLET_TASKS:
            self.dirichlets = dirichlet_priors(pool, self.index, cfg.prior)
            self.arm_names = self.index.names
            self._members = [list(m) for m in self.index.members]
            self.arm_weights = self.index.weights
        else:
            self.betas = beta_priors(self.index, cfg.prior)
            self.arm_names = self.index.names
            self._members = [list(m) for m in self.index.members]
            self.arm_weights = self.index.weights
            if task == "compare":
                pair = cfg.compare_pair
                if pair is None:
                    if self.index.num_groups != 2:
                        raise ConfigError(
                            "compare task needs compare_pair unless the partition has exactly 2 groups")
                    pair = (0, 1)
                if not all(0 <= g < self.index.num_groups for g in pair) or pair[0] == pair[1]:
                    raise ConfigError(f"invalid compare_pair {pair!r}")
                self.pair = tuple(pair)

    @property
    def num_arms(self) -> int:
        return len(self.arm_names)

    @property
    def labels_used(self) -> int:
        return self.trajectory.num_steps

    @property
    def terminal_reason(self):
        return self._terminal

    @property
    def is_done(self) -> bool:
        return self._terminal is not None

    def _eligible(self) -> np.ndarray:
        mask = np.array([len(m) > 0 for m in self._members], dtype=bool)
        if self.cfg.task == "compare":
            pair_mask = np.zeros(self.num_arms, dtype=bool)
            pair_mask[list(self.pair)] = True
            mask &= pair_mask
        return mask

    def _context(self):
        cfg = self.cfg
        eligible = self._eligible()
        if cfg.task == "identify-accuracy":
            return AccuracyIdentifyContext(self.betas, cfg.strategy.direction, eligible)
        if cfg.task in ("estimate-accuracy", "compare"):
            return AccuracyEstimateContext(self.betas, self.arm_weights, eligible)
        if cfg.task == "identify-ece":
            return EceIdentifyContext(self.cells, self.cell_weights, self.cell_conf,
                                      cfg.strategy.direction, eligible)
        if cfg.task == "identify-cost":
            return CostIdentifyContext(self.dirichlets, cfg.cost_matrix,
                                       cfg.strategy.direction, eligible)
        if cfg.task == "estimate-confusion":
            return ConfusionEstimateContext(self.dirichlets, self.arm_weights, eligible)
        raise ConfigError(f"no reward context for task {self.cfg.task!r}")

    def _budget_remaining(self):
        if self.cfg.budget is None:
            return None
        return self.cfg.budget - self.labels_used - len(self._queue)

    def _select_next_arms(self) -> list[int]:
        cfg = self.cfg
        eligible = self._eligible()
        if not eligible.any():
            raise SessionDone(self._finish("exhausted"))
        if cfg.task == "compare" and cfg.strategy.kind in ("thompson", "comparison-greedy"):
            a, b = self.pair
            if not eligible[a] or not eligible[b]:
                return [a if eligible[a] else b]
            pick = comparison_select(self.betas[a], self.betas[b], cfg.rope_epsilon,
                                     cfg.n_samples, self.rng)
            return [self.pair[pick]]
        try:
            return select_arms(cfg.strategy, self._context(), self.rng)
        except ValueError as exc:
            # multiple-play needs m eligible arms; a drained pool ends the session
            if cfg.strategy.kind == "multiple-play-thompson" and cfg.strategy.m > eligible.sum():
                raise SessionDone(self._finish("exhausted")) from exc
            raise

    def _draw_instance(self, arm: int) -> int:
        if self._member_maps:
            self._member_maps.clear()  # swap-pop below invalidates replay maps
        members = self._members[arm]
        j = int(self.rng.integers(len(members)))
        members[j], members[-1] = members[-1], members[j]
        return members.pop()

    def _remove_member(self, arm: int, pos: int):
        slot_of = self._member_maps.get(arm)
        members = self._members[arm]
        if slot_of is None:
            slot_of = {p: i for i, p in enumerate(members)}
            self._member_maps[arm] = slot_of
        j = slot_of.pop(pos, None)
        if j is None:
            raise SubmitMismatch(f"instance position {pos} is not unlabeled in arm {arm}")
        last = members[-1]
        members[j] = last
        members.pop()
        if j < len(members):
            slot_of[last] = j

    def next_query(self) -> PendingQuery:
        """Select the next instance to label; idempotent while unanswered."""
        if self._terminal is not None:
            raise SessionDone(self._terminal)
        if self._queue:
            return self._queue[0]
        arms = self._select_next_arms()
        remaining = self._budget_remaining()
        if remaining is not None:
            arms = arms[:remaining]
        for offset, arm in enumerate(arms):
            pos = self._draw_instance(arm)
            record = self.pool.records[pos]
            self._queue.append(PendingQuery(
                instance_id=record.id,
                group=arm,
                group_name=self.arm_names[arm],
                predicted_class=record.predicted,
                confidence=record.confidence,
                step=self.labels_used + offset + 1,
                display_url=record.attributes.get("display_url"),
            ))
        return self._queue[0]

    @property
    def pending(self) -> PendingQuery | None:
        return self._queue[0] if self._queue else None

    def _validate_outcome(self, outcome: int) -> int:
        outcome = int(outcome)
        if self.cfg.outcome_kind == "correctness":
            if outcome not in (0, 1):
                raise ValueError(f"correctness outcome must be 0 or 1, got {outcome}")
        else:
            if not 0 <= outcome < self.pool.num_classes:
                raise ValueError(
                    f"true-class outcome must lie in [0, {self.pool.num_classes - 1}], got {outcome}")
        return outcome

    def submit(self, instance_id: str, outcome: int) -> dict:
        """Apply one labeling outcome to the pending query; returns the
        updated posterior digest. Re-submitting the identical (instance,
        outcome) pair is idempotent."""
        if self._last_submit is not None and self._last_submit[:2] == (instance_id, int(outcome)):
            return self._last_submit[2]
        if not self._queue:
            raise SubmitMismatch("no query is pending")
        head = self._queue[0]
        if head.instance_id != instance_id:
            raise SubmitMismatch(
                f"pending instance is {head.instance_id!r}, got {instance_id!r}")
        outcome = self._validate_outcome(outcome)

        arm = head.group
        record = self.pool.record(instance_id)
        if self.cfg.task == "identify-ece":
            j = score_bin_of(record.confidence, self.cfg.partition.num_bins)
            updated = self.cells[arm][j].update(self._as_correctness(outcome, record))
            self.cells[arm][j] = updated
            digest_mean, digest_trials = updated.mean(), updated.trials
        elif self.cfg.task in DIRICHLET_TASKS:
            updated = self.dirichlets[arm].update(outcome)
            self.dirichlets[arm] = updated
            digest_mean = float(updated.mean()[arm]) if arm < updated.num_classes else 0.0
            digest_trials = updated.trials
        else:
            updated = self.betas[arm].update(self._as_correctness(outcome, record))
            self.betas[arm] = updated
            digest_mean, digest_trials = updated.mean(), updated.trials

        self._queue.pop(0)
        self.trajectory.append(arm, instance_id, outcome, digest_mean, digest_trials)
        step = self.labels_used
        every = self.cfg.snapshot_every
        if every and step % every == 0:
            self.trajectory.snapshots[step] = self.posterior_state()
        if self._budget_remaining() == 0 and not self._queue:
            self._finish("budget")
        elif not self._queue and not self._eligible().any():
            self._finish("exhausted")
        digest = {"group": arm, "mean": digest_mean, "trials": digest_trials, "step": step}
        self._last_submit = (instance_id, outcome, digest)
        return digest

    def _as_correctness(self, outcome: int, record) -> int:
        if self.cfg.outcome_kind == "correctness":
            return outcome
        return int(outcome == record.predicted)

    def apply_logged_step(self, group: int, instance_id: str, outcome: int):
        """Re-apply one trajectory step when rebuilding a session from its log.

        Skips arm selection and the instance draw (both already decided when
        the log was written) but runs the same posterior update and
        bookkeeping as submit, so the rebuilt state equals the original.
        """
        pos = self.pool.index_of(instance_id)
        record = self.pool.records[pos]
        self._remove_member(group, pos)
        self._queue.insert(0, PendingQuery(
            instance_id=instance_id, group=group, group_name=self.arm_names[group],
            predicted_class=record.predicted, confidence=record.confidence,
            step=self.labels_used + 1, display_url=record.attributes.get("display_url")))
        self._last_submit = None
        return self.submit(instance_id, outcome)

    def _finish(self, reason: str) -> str:
        self._terminal = reason
        self.trajectory.terminal_reason = reason
        if self.cfg.snapshot_every:
            self.trajectory.snapshots[self.labels_used] = self.posterior_state()
        return reason

    def mark_stopped(self, reason="stopped"):
        self._finish(reason)

    # ----- estimates ------------------------------------------------------

    def metric_means(self) -> np.ndarray:
        """Per-arm point estimate (posterior mean) of the task metric."""
        task = self.cfg.task
        if task == "identify-ece":
            a = np.array([[c.eff_alpha for c in row] for row in self.cells])
            b = np.array([[c.eff_beta for c in row] for row in self.cells])
            w = self.cell_weights
            totals = w.sum(axis=1, keepdims=True)
            w = np.divide(w, totals, out=np.zeros_like(w), where=totals > 0)
            return np.sum(w * np.abs(a / (a + b) - self.cell_conf), axis=1)
        if task == "identify-cost":
            eff = np.stack([p.eff_alpha for p in self.dirichlets], axis=1)
            theta = eff / eff.sum(axis=0, keepdims=True)
            return np.sum(self.cfg.cost_matrix.c * theta, axis=0)
        if task in DIRICHLET_TASKS:
            eff = np.stack([p.eff_alpha for p in self.dirichlets], axis=1)
            theta = eff / eff.sum(axis=0, keepdims=True)
            return np.diag(theta).copy()
        return np.array([p.mean() for p in self.betas])

    def confusion_estimate(self) -> np.ndarray:
        """Posterior-mean confusion matrix, columns indexed by predicted class."""
        if self.cfg.task not in DIRICHLET_TASKS:
            raise ValueError("confusion estimates exist only for Dirichlet tasks")
        eff = np.stack([p.eff_alpha for p in self.dirichlets], axis=1)
        return eff / eff.sum(axis=0, keepdims=True)

    def rank_order(self) -> list[int]:
        """Arms ordered best-first under the task direction, ties to lower index."""
        means = self.metric_means()
        values = means if self.cfg.strategy.direction == "min" else -means
        return [int(g) for g in np.argsort(values, kind="stable")]

    def current_rope(self):
        a, b = self.pair
        return rope_compare(self.betas[a], self.betas[b], self.cfg.rope_epsilon,
                            self.cfg.n_samples, self._eval_rng)

    def posterior_state(self) -> dict:
        if self.cfg.task == "identify-ece":
            return {"cells": [[c.to_dict() for c in row] for row in self.cells]}
        if self.cfg.task in DIRICHLET_TASKS:
            return {"dirichlets": [p.to_dict() for p in self.dirichlets]}
        return {"betas": [p.to_dict() for p in self.betas]}


def check_stopping(task: str, session: ActiveSession, truth: GroundTruth | None):
    """Benchmark stopping rules; live sessions (truth is None) never stop early."""
    if truth is None:
        return False, "no ground truth: runs to budget"
    if task in IDENTIFY_TASKS:
        m = session.cfg.strategy.m
        target = truth.top_set(task, m, session.cfg.strategy.direction)
        value = mrr(session.rank_order(), target)
        return value > MRR_STOP_THRESHOLD, f"mrr={value:.4f}"
    if task == "compare":
        result = session.current_rope()
        eta_star, lam_star = truth.rope_truth(session.pair)
        ok = comparison_success(result, eta_star, lam_star, LAMBDA_STOP_RTOL)
        return ok, f"eta={result.eta} lambda={result.lam:.4f}"
    return False, "estimation runs to budget"


def run_session(pool: Pool, cfg: SessionConfig, oracle=None,
                truth: GroundTruth | None = None) -> Trajectory:
    """Drive one session against an oracle until budget, stopping, or exhaustion."""
    session = ActiveSession(pool, cfg)
    if oracle is None:
        oracle = make_replay_oracle(pool)
    track_mrr = truth is not None and cfg.task in IDENTIFY_TASKS
    if track_mrr:
        session.trajectory.mrr_series = []
        m = cfg.strategy.m
        target = truth.top_set(cfg.task, m, cfg.strategy.direction)
    while not session.is_done:
        try:
            query = session.next_query()
        except SessionDone:
            break
        label = oracle.query(query.instance_id)
        if cfg.outcome_kind == "true-class":
            outcome = int(label)
        else:
            outcome = int(label == query.predicted_class)
        session.submit(query.instance_id, outcome)
        if track_mrr:
            value = mrr(session.rank_order(), target)
            session.trajectory.mrr_series.append(value)
            if value > MRR_STOP_THRESHOLD and not session.is_done:
                session.mark_stopped("stopped")
        elif truth is not None and not session.is_done:
            stop, reason = check_stopping(cfg.task, session, truth)
            if stop:
                session.mark_stopped("stopped")
    return session.trajectory


_WORKER = {}


def _init_worker(pool, cfg, truth):
    _WORKER.update(pool=pool, cfg=cfg, truth=truth)


def _run_indexed(run_index: int) -> Trajectory:
    pool, cfg, truth = _WORKER["pool"], _WORKER["cfg"], _WORKER["truth"]
    run_cfg = replace(cfg, seed=cfg.seed + run_index)
    trajectory = run_session(pool, run_cfg, make_replay_oracle(pool), truth)
    trajectory.run_index = run_index
    return trajectory


def run_experiment(pool: Pool, cfg: SessionConfig, n_runs: int,
                   truth: GroundTruth | None = None, jobs: int = 1) -> list[Trajectory]:
    """Independent repeated sessions; run r uses seed = cfg.seed + r so results
    are reproducible run-by-run and order-independent."""
    if n_runs < 1:
        raise ConfigError("n_runs must be >= 1")
    if jobs <= 1 or n_runs == 1:
        _init_worker(pool, cfg, truth)
        return [_run_indexed(i) for i in range(n_runs)]
    from concurrent.futures import ProcessPoolExecutor
    with ProcessPoolExecutor(max_workers=jobs, initializer=_init_worker,
                             initargs=(pool, cfg, truth)) as executor:
        return list(executor.map(_run_indexed, range(n_runs)))
