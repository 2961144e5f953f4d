"""Command-line entry point.

Subcommands: ingest, synth, run, eval, report, serve. Batch commands run
against the core package; `serve` exposes the live labeling service over
HTTP. Every randomized command takes its seed from the config file or an
explicit --seed flag; there is no wall-clock seeding.
"""

import argparse
import sys
from dataclasses import replace

import numpy as np

from . import engine, evalharness, reporting
from .pool import ingest_predictions
from .synth import SynthSpec, linspace_profile, synth_pool


def _fail(message, code=1):
    print(f"error: {message}", file=sys.stderr)
    raise SystemExit(code)


def _load_config(path, args):
    try:
        cfg, runs = engine.load_config_file(path)
    except FileNotFoundError:
        _fail(f"config file not found: {path}\nusage: see --help", code=2)
    except (engine.ConfigError, ValueError, KeyError) as exc:
        _fail(f"invalid config {path}: {exc}", code=2)
    if getattr(args, "seed", None) is not None:
        cfg = replace(cfg, seed=args.seed)
    if getattr(args, "budget", None) is not None:
        cfg = replace(cfg, budget=args.budget)
    if getattr(args, "runs", None) is not None:
        runs = args.runs
    return cfg, runs


def _load_pool(path, fmt=None):
    if fmt is None:
        fmt = "csv" if str(path).endswith(".csv") else "jsonl"
    try:
        return ingest_predictions(path, fmt)
    except FileNotFoundError:
        _fail(f"pool file not found: {path}", code=2)
    except ValueError as exc:
        _fail(f"failed to ingest {path}: {exc}")


def cmd_ingest(args):
    pool = _load_pool(args.infile, args.format)
    if args.out:
        pool.to_jsonl(args.out)
    print(f"ingested {len(pool)} records, K={pool.num_classes}"
          + (f", wrote {args.out}" if args.out else ""))
    return 0


def cmd_synth(args):
    if args.profile:
        profile = tuple(float(v) for v in args.profile.split(","))
    elif args.profile_linspace:
        lo, hi = (float(v) for v in args.profile_linspace.split(","))
        profile = linspace_profile(lo, hi, args.classes)
    else:
        profile = tuple([0.8] * args.classes)
    weights = None
    if args.class_weights:
        weights = tuple(float(v) for v in args.class_weights.split(","))
    spec = SynthSpec(num_classes=args.classes, size=args.size, accuracy_profile=profile,
                     calibration_offset=args.offset, seed=args.seed, class_weights=weights)
    pool = synth_pool(spec)
    pool.to_jsonl(args.out)
    print(f"wrote {len(pool)} synthetic records to {args.out}")
    return 0


def cmd_run(args):
    cfg, runs = _load_config(args.config, args)
    pool = _load_pool(args.pool)
    truth = None
    if args.benchmark:
        truth = evalharness.compute_ground_truth(pool, cfg)
    trajectories = engine.run_experiment(pool, cfg, runs, truth=truth, jobs=args.jobs)
    engine.write_trajectories(trajectories, args.out)
    steps = [t.num_steps for t in trajectories]
    print(f"wrote {len(trajectories)} run(s) to {args.out} "
          f"(steps: min {min(steps)}, median {int(np.median(steps))}, max {max(steps)})")
    return 0


def cmd_eval(args):
    cfg, _ = _load_config(args.config, args)
    pool = _load_pool(args.truth_from)
    truth = evalharness.compute_ground_truth(pool, cfg)
    methods = {}
    for spec in args.traj:
        name, _, path = spec.rpartition("=")
        if not name:
            name = path.rsplit("/", 1)[-1].removesuffix(".jsonl")
        methods[name] = engine.read_trajectories(path)
    report = _evaluate_methods(pool, cfg, truth, methods)
    payload = reporting.report_json(report)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(payload + "\n")
        print(f"wrote evaluation to {args.out}")
    else:
        print(payload)
    return 0


def _evaluate_methods(pool, cfg, truth, methods):
    """Per-method metric arrays + aggregation; the first method is the baseline
    for paired significance tests."""
    out = {"task": cfg.task, "config_digest": cfg.digest(), "methods": {}}
    per_method_values = {}
    for name, trajectories in methods.items():
        values = []
        for t in trajectories:
            values.append(_trajectory_metric(pool, cfg, truth, t))
        per_method_values[name] = values

    baseline_name = next(iter(methods), None)
    for name, values in per_method_values.items():
        numeric = [v for v in values if v is not None]
        censored = len(values) - len(numeric)
        entry = {"per_run": values, "censored_runs": censored}
        if len(numeric) >= 2:
            baseline = None
            if name != baseline_name:
                paired = [
                    (v, b) for v, b in zip(values, per_method_values[baseline_name])
                    if v is not None and b is not None
                ]
                if len(paired) >= 2:
                    entry["aggregate"] = evalharness.aggregate_runs(
                        [p[0] for p in paired], [p[1] for p in paired])
                    entry["aggregate"]["significant_vs"] = baseline_name
            if "aggregate" not in entry:
                entry["aggregate"] = evalharness.aggregate_runs(numeric)
        out["methods"][name] = entry
    return out


def _trajectory_metric(pool, cfg, truth, trajectory):
    """One scalar per run: RMSE for estimation, labels-to-identify for
    identification, labels used for comparison."""
    task = cfg.task
    if task in ("identify-accuracy", "identify-ece", "identify-cost"):
        if trajectory.mrr_series is not None:
            result = evalharness.labels_to_identify(trajectory.mrr_series, len(pool))
            return result.step if result.reached else None
        # trajectory came from a benchmark run that stopped at the MRR threshold
        return trajectory.num_steps if trajectory.terminal_reason == "stopped" else None
    report = reporting.replay_report(trajectory, pool, cfg)
    if task in ("estimate-accuracy", "compare"):
        estimates = np.array([g["metric"]["mean"] for g in report["groups"]])
        return evalharness.rmse_groupwise(estimates, truth.accuracy, truth.weights)
    if task == "estimate-confusion":
        session = _rebuild_session(pool, cfg, trajectory)
        theta0 = evalharness.rmse_confusion(
            evalharness.confusion_reference(pool, cfg.prior.strength),
            truth.confusion, truth.weights)
        return evalharness.rmse_confusion_scaled(
            session.confusion_estimate(), truth.confusion, truth.weights, theta0)
    raise ValueError(f"no evaluation metric for task {task!r}")


def _rebuild_session(pool, cfg, trajectory):
    session = engine.ActiveSession(pool, cfg)
    for step in trajectory.iter_steps():
        session.apply_logged_step(step["group"], step["id"], step["z"])
    return session


def cmd_report(args):
    cfg, _ = _load_config(args.config, args)
    pool = _load_pool(args.pool)
    trajectories = engine.read_trajectories(args.traj)
    if not trajectories:
        _fail(f"no trajectories found in {args.traj}")
    if args.run is not None:
        trajectories = [t for t in trajectories if t.run_index == args.run]
        if not trajectories:
            _fail(f"run {args.run} not present in {args.traj}")
    reports = [reporting.replay_report(t, pool, cfg) for t in trajectories]
    payload = reports[0] if len(reports) == 1 else {"runs": reports}
    text = reporting.report_json(payload)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
        print(f"wrote report to {args.out}")
    else:
        print(text)
    return 0


def cmd_serve(args):
    import uvicorn

    from .service.app import create_app

    pool = _load_pool(args.pool)
    defaults = None
    if args.config:
        cfg, _ = _load_config(args.config, args)
        defaults = cfg
    app = create_app(pool, defaults=defaults, token=args.token, state_dir=args.state_dir)
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="bayesassess",
        description="Label-efficient Bayesian assessment of black-box classifiers.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="validate a predictions file")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--format", choices=["jsonl", "csv"], default=None)
    p.add_argument("--out", help="write the validated pool as canonical JSONL")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("synth", help="generate a synthetic labeled pool")
    p.add_argument("--classes", type=int, required=True)
    p.add_argument("--size", type=int, required=True)
    p.add_argument("--profile", help="comma-separated per-class accuracies")
    p.add_argument("--profile-linspace", help="LOW,HIGH evenly spaced accuracies")
    p.add_argument("--offset", type=float, default=0.0,
                   help="confidence = accuracy + offset (clamped)")
    p.add_argument("--class-weights", help="comma-separated predicted-class frequencies")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("run", help="run assessment session(s) against a replay oracle")
    p.add_argument("--config", required=True)
    p.add_argument("--pool", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, help="override the config seed")
    p.add_argument("--budget", type=int, help="override the config budget")
    p.add_argument("--runs", type=int, help="override the config run count")
    p.add_argument("--jobs", type=int, default=1, help="parallel workers for independent runs")
    p.add_argument("--benchmark", action="store_true",
                   help="enable ground-truth stopping rules (identification/comparison)")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("eval", help="evaluate trajectories against full-pool ground truth")
    p.add_argument("--truth-from", required=True, help="fully labeled pool file")
    p.add_argument("--traj", action="append", required=True,
                   help="trajectory file, optionally NAME=path; repeatable")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("report", help="produce an assessment report from a trajectory")
    p.add_argument("--traj", required=True)
    p.add_argument("--pool", required=True)
    p.add_argument("--config", required=True)
    p.add_argument("--run", type=int, help="report only this run index")
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("serve", help="start the HTTP labeling session service")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--pool", required=True)
    p.add_argument("--config", help="default session config for created sessions")
    p.add_argument("--token", help="static auth token required in X-Auth-Token")
    p.add_argument("--state-dir", help="directory for append-only session logs")
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except SystemExit:
        raise
    except (engine.ConfigError, ValueError) as exc:
        _fail(str(exc))
    except OSError as exc:
        _fail(str(exc))


if __name__ == "__main__":
    raise SystemExit(main())
