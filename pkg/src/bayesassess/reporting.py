"""Assessment reports: the JSON snapshot consumed by the CLI, the HTTP
service, and the labeling UI. One schema serves them all so a report built
from a trajectory file and a live get_state response are interchangeable.

All Monte-Carlo pieces draw from a stream derived from the session seed, so
identical inputs produce byte-identical reports.
"""

import json

import numpy as np

from .metrics import (classwise_ece_posterior, expected_cost_posterior,
                      rank_from_samples, reliability_diagram)
from .posterior import summarize_samples

REPORT_LEVEL = 0.95


def _report_rng(session):
    return np.random.default_rng(np.random.SeedSequence(session.cfg.seed, spawn_key=(3,)))


def session_report(session, level: float = REPORT_LEVEL) -> dict:
    """Snapshot of a session's posterior state: per-group summaries, rankings,
    and the task-specific extras (ECE, cost, ROPE, reliability)."""
    cfg = session.cfg
    rng = _report_rng(session)
    n_samples = cfg.n_samples
    task = cfg.task

    labels_per_arm = [0] * session.num_arms
    for g in session.trajectory.groups:
        labels_per_arm[g] += 1

    report = {
        "task": task,
        "direction": cfg.strategy.direction,
        "strategy": cfg.strategy.kind,
        "partition": cfg.partition.to_dict(),
        "config_digest": cfg.digest(),
        "seed": cfg.seed,
        "n_samples": n_samples,
        "level": level,
        "steps": session.labels_used,
        "budget": cfg.budget,
        "terminal": session.terminal_reason,
        "metric_name": _metric_name(task),
    }

    groups = []
    metric_summaries, metric_samples = _metric_posteriors(session, rng, level)
    for g in range(session.num_arms):
        groups.append({
            "g": g,
            "name": session.arm_names[g],
            "weight": float(session.arm_weights[g]),
            "labels": labels_per_arm[g],
            "metric": metric_summaries[g].to_dict(),
        })
    report["groups"] = groups

    if session.num_arms >= 2 and task != "compare":
        report["ranking"] = rank_from_samples(
            metric_samples, cfg.strategy.direction, level).to_dict()

    if task == "compare":
        report["rope"] = session.current_rope().to_dict()

    if cfg.partition.kind == "score-bin":
        diagram = reliability_diagram(session.betas, session.arm_weights,
                                      session.index.mean_confidence, level, n_samples, rng)
        report["reliability"] = diagram.to_dict()
        report["ece"] = diagram.ece.to_dict()

    return report


def _metric_name(task):
    return {
        "estimate-accuracy": "accuracy",
        "identify-accuracy": "accuracy",
        "compare": "accuracy",
        "identify-ece": "classwise_ece",
        "identify-cost": "expected_cost",
        "estimate-confusion": "diagonal_confusion",
    }[task]


def _metric_posteriors(session, rng, level):
    """Per-arm metric summaries plus a joint (n_samples, G) sample matrix for
    ranking; sampling strategy depends on the task's posterior family."""
    cfg = session.cfg
    n = cfg.n_samples
    task = cfg.task
    if task == "identify-ece":
        summaries, columns = [], []
        for g in range(session.num_arms):
            ece = classwise_ece_posterior(session.cells[g], session.cell_weights[g],
                                          session.cell_conf[g], n, rng, level)
            summaries.append(ece.summary)
            columns.append(ece.samples)
        return summaries, np.stack(columns, axis=1)
    if task == "identify-cost":
        summaries, columns = [], []
        for g in range(session.num_arms):
            samples = expected_cost_posterior(session.dirichlets[g], cfg.cost_matrix, g, n, rng)
            summaries.append(summarize_samples(samples, level))
            columns.append(samples)
        return summaries, np.stack(columns, axis=1)
    if task == "estimate-confusion":
        summaries, columns = [], []
        for g, post in enumerate(session.dirichlets):
            summaries.append(post.marginal_summary(g, level))
            draws = np.stack([post.sample(rng) for _ in range(256)])
            columns.append(draws[:, g])
        return summaries, np.stack(columns, axis=1)
    # Beta-posterior tasks
    a = np.array([p.eff_alpha for p in session.betas])
    b = np.array([p.eff_beta for p in session.betas])
    samples = rng.beta(a, b, size=(n, a.size))
    return [p.summarize(level) for p in session.betas], samples


def replay_report(trajectory, pool, cfg, level: float = REPORT_LEVEL) -> dict:
    """Rebuild the posterior state a trajectory ends in, then report on it.

    The rebuilt session applies each logged (group, outcome) pair in order;
    final parameters therefore equal prior + aggregated counts, which is also
    how posterior sufficiency gets cross-checked in tests.
    """
    from .engine import ActiveSession  # deferred: engine imports evalharness, not us

    session = ActiveSession(pool, cfg)
    for step in trajectory.iter_steps():
        session.apply_logged_step(step["group"], step["id"], step["z"])
    if trajectory.terminal_reason is not None:
        session.mark_stopped(trajectory.terminal_reason)
    report = session_report(session, level)
    report["run_index"] = trajectory.run_index
    return report


def report_json(report: dict) -> str:
    """Canonical serialization: sorted keys, stable float formatting."""
    return json.dumps(report, sort_keys=True, indent=2)
