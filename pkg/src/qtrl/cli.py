"""Command-line entry point: ``qtrl train | eval | sweep``.

Exit codes: 0 success, 2 usage, 3 numerical abort, 4 I/O or invalid file.

``eval`` only touches the classical stack (``dense``, ``envs``,
``inference``, ``export``); the training modules are imported lazily.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from pathlib import Path

import numpy as np

from .errors import ConfigurationError, NumericalError

EXIT_OK, EXIT_USAGE, EXIT_NUMERICAL, EXIT_IO = 0, 2, 3, 4


class _Usage(Exception):
    pass


def _positive_int(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {v}")
    return v


def _int_list(text):
    try:
        values = [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not values:
        raise argparse.ArgumentTypeError("list must not be empty")
    return values


def _default_out():
    return os.environ.get("QTRL_OUT_DIR", "runs")


def _add_train_flags(p, sweep=False):
    p.add_argument("--env", choices=["cartpole", "minigrid"], default="cartpole")
    p.add_argument("--mode", choices=["classical", "qtrl"], default="classical")
    if sweep:
        p.add_argument("--depths", type=_int_list, default=None,
                       help="comma-separated circuit depths (qtrl mode)")
        p.add_argument("--seeds", type=_int_list, required=True, help="comma-separated seeds")
        p.add_argument("--jobs", type=_positive_int, default=1)
    else:
        p.add_argument("--depth", type=_positive_int, default=1)
        p.add_argument("--seed", type=int, default=0)
    p.add_argument("--episodes", type=_positive_int, default=None,
                   help="default: 2000 (cartpole) / 4000 (minigrid)")
    p.add_argument("--gamma", type=float, default=0.99)
    p.add_argument("--lr", type=float, default=None, help="default depends on --mode")
    p.add_argument("--hidden", type=_int_list, default=None, help="policy hidden layer sizes")
    p.add_argument("--prob-scale", type=float, default=None,
                   help="multiplier on the probability feature (default 2**n)")
    p.add_argument("--out", default=None, help="output root (default $QTRL_OUT_DIR or ./runs)")
    p.add_argument("--record-timing", action="store_true",
                   help="fill the elapsed_ms log column (makes logs run-dependent)")
    p.add_argument("--log-every", type=int, default=0, help="print progress every N episodes")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qtrl", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    _add_train_flags(sub.add_parser("train", help="train one policy"))
    _add_train_flags(sub.add_parser("sweep", help="train over several seeds and depths"), sweep=True)

    ev = sub.add_parser("eval", help="greedy evaluation of an exported policy (classical only)")
    ev.add_argument("--model", required=True)
    ev.add_argument("--env", choices=["cartpole", "minigrid"], default=None,
                    help="default: the environment recorded in the model")
    ev.add_argument("--eval-episodes", type=_positive_int, default=10)
    ev.add_argument("--seed", type=int, default=0)
    ev.add_argument("--observations", default=None,
                    help=".npy file of observations; writes their action distributions")
    ev.add_argument("--probs-out", default=None, help="output .npy for --observations")
    ev.add_argument("--json", action="store_true", help="print the report as JSON")
    return parser


def run_tag(env, mode, depth):
    return f"{env}-{mode}" + (f"-L{depth}" if mode == "qtrl" else "")


def run_name(env, mode, depth, seed):
    return f"{run_tag(env, mode, depth)}-s{seed}"


def _train_config(args, depth, seed):
    from .trainer import TrainConfig

    episodes = args.episodes or {"cartpole": 2000, "minigrid": 4000}[args.env]
    return TrainConfig(
        env=args.env, mode=args.mode, depth=depth, episodes=episodes, gamma=args.gamma,
        lr=args.lr, seed=seed, hidden=tuple(args.hidden) if args.hidden else None,
        prob_scale=args.prob_scale,
    )


def train_run(cfg, out_dir: Path, *, record_timing=False, log_every=0, stream=None) -> dict:
    """Train, then write log.csv, policy.json and manifest.json into ``out_dir``."""
    from . import export
    from .trainer import train

    def progress(rec):
        if log_every and (rec.episode + 1) % log_every == 0:
            print(f"[{out_dir.name}] episode {rec.episode + 1}/{cfg.episodes} reward {rec.total_reward:g}",
                  file=sys.stderr, flush=True)

    started = export.now()
    result = train(cfg, callback=progress)
    finished = export.now()

    paths = {"log": "log.csv", "policy": "policy.json", "manifest": "manifest.json"}
    summary = {
        "last10_average": result.log.last_average(10),
        "last100_average": result.log.last_average(100),
        "episodes": len(result.log),
    }
    provenance = {
        "env": cfg.env,
        "mode": cfg.mode,
        "depth": cfg.depth if cfg.mode == "qtrl" else None,
        "n_qubits": result.n_qubits,
        "seed": cfg.seed,
        "training_episodes": cfg.episodes,
        "final_last10_average": summary["last10_average"],
        "manifest": paths["manifest"],
    }
    export.write_log_csv(out_dir / paths["log"], result.log.records, timing=record_timing)
    export.ExportedPolicy(result.policy_spec, result.theta, provenance).save(out_dir / paths["policy"])
    manifest = export.make_manifest(cfg.to_dict(), paths, started, finished, {"summary": summary})
    export.atomic_write(out_dir / paths["manifest"], json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    if stream is not None:
        print(f"{out_dir.name}: last-10 average {summary['last10_average']:.3f}, "
              f"last-100 average {summary['last100_average']:.3f}", file=stream)
    return summary


def cmd_train(args) -> int:
    cfg = _train_config(args, args.depth, args.seed)
    out = Path(args.out or _default_out()) / run_name(cfg.env, cfg.mode, cfg.depth, cfg.seed)
    train_run(cfg, out, record_timing=args.record_timing, log_every=args.log_every, stream=sys.stdout)
    print(f"wrote {out}")
    return EXIT_OK


def _load_observations(path):
    path = Path(path)
    if path.suffix == ".json":
        return np.array(json.loads(path.read_text()), dtype=np.float64)
    return np.load(path)


def cmd_eval(args) -> int:
    from . import export, inference

    policy = export.ExportedPolicy.load(args.model)
    env = args.env or policy.provenance.get("env")
    if env is None:
        raise _Usage("model does not record its environment; pass --env")
    if args.observations:
        obs = _load_observations(args.observations)
        probs = inference.action_probabilities(policy.policy_spec, policy.theta, obs)
        out = args.probs_out or str(Path(args.observations).with_suffix("")) + ".probs.npy"
        np.save(out, probs)
        print(f"wrote action probabilities for {len(probs)} observations to {out}")
    report = inference.evaluate(policy.policy_spec, policy.theta, env, args.eval_episodes, args.seed)
    if args.json:
        print(json.dumps({"mean": report.mean, "min": report.min, "max": report.max,
                          "totals": list(report.totals)}))
    else:
        print(f"{env}: {args.eval_episodes} greedy episodes, mean {report.mean:.3f}, "
              f"min {report.min:.3f}, max {report.max:.3f}")
    return EXIT_OK


def _sweep_one(job):
    cfg, out_dir, record_timing = job
    try:
        train_run(cfg, out_dir, record_timing=record_timing)
    except NumericalError as exc:
        return EXIT_NUMERICAL, str(exc)
    except OSError as exc:
        return EXIT_IO, str(exc)
    return EXIT_OK, ""


def aggregate_logs(log_paths) -> str:
    """Per-episode mean/min/max reward across runs, as CSV text."""
    from .export import fmt, read_log_csv

    rewards = [read_log_csv(p)["total_reward"] for p in log_paths]
    length = min(len(r) for r in rewards)
    stack = np.vstack([r[:length] for r in rewards])
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["episode", "mean_reward", "min_reward", "max_reward", "n_runs"])
    for e in range(length):
        col = stack[:, e]
        w.writerow([e, fmt(col.mean()), fmt(col.min()), fmt(col.max()), len(col)])
    return buf.getvalue()


def cmd_sweep(args) -> int:
    from .export import atomic_write

    depths = (args.depths or [1]) if args.mode == "qtrl" else [1]
    root = Path(args.out or _default_out())
    jobs = []
    for d in depths:
        for s in args.seeds:
            cfg = _train_config(args, d, s)
            jobs.append((cfg, root / run_name(cfg.env, cfg.mode, d, s), args.record_timing))

    if args.jobs > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_sweep_one, jobs))
    else:
        results = [_sweep_one(j) for j in jobs]

    status = 0
    runs = []
    for (cfg, out_dir, _), (code, message) in zip(jobs, results):
        runs.append({"run": out_dir.name, "exit_code": code, "error": message})
        if code and not status:
            status = code
            print(f"run {out_dir.name} failed: {message}", file=sys.stderr)

    aggregates = []
    for d in depths:
        tag = run_tag(args.env, args.mode, d)
        logs = [out / "log.csv" for (cfg, out, _), (code, _) in zip(jobs, results)
                if cfg.depth == d and code == 0]
        if not logs:
            continue
        name = f"aggregate-{tag}.csv"
        atomic_write(root / name, aggregate_logs(logs))
        aggregates.append(name)
        print(f"wrote {root / name} ({len(logs)} runs)")

    summary = {"partial": bool(status), "runs": runs, "aggregates": aggregates}
    atomic_write(root / "sweep.json", json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return status


COMMANDS = {"train": cmd_train, "eval": cmd_eval, "sweep": cmd_sweep}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    from .export import PolicyFileError

    try:
        return COMMANDS[args.command](args)
    except (_Usage, ConfigurationError) as exc:
        parser.print_usage(sys.stderr)
        print(f"qtrl: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalError as exc:
        print(f"qtrl: numerical abort: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (PolicyFileError, OSError) as exc:
        print(f"qtrl: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
