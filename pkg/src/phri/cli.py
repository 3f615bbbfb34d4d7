"""Command-line entry point: run scenarios, validate the model, run sweeps.

Exit codes: 0 success, 1 config error, 2 controller abort, 3 oracle failure.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor

from . import __version__
from .analysis import steady_state_metrics
from .config import load_config
from .errors import ConfigError, WindowOutOfRange
from .logio import write_log, write_meta, write_metrics
from .simulator import run_scenario

log = logging.getLogger("phri")


def _setup_logging():
    level = os.environ.get("PHRI_LOG_LEVEL", "INFO").upper()
    logging.basicConfig(level=getattr(logging, level, logging.INFO),
                        format="%(levelname)s %(name)s: %(message)s")


def _apply_overrides(cfg, args):
    kw = {}
    if args.seed is not None:
        kw["seed"] = args.seed
    if args.dt is not None:
        kw["dt"] = args.dt
    if args.duration is not None:
        kw["duration"] = args.duration
    return cfg.with_overrides(**kw) if kw else cfg


def cmd_run(args) -> int:
    from .config import config_to_dict

    try:
        cfg = _apply_overrides(load_config(args.config), args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    os.makedirs(args.out, exist_ok=True)
    result = run_scenario(cfg)
    write_log(args.out, result)
    write_meta(args.out, result, config_to_dict(cfg), __version__)

    window = cfg.metrics_window or (0.5 * cfg.duration, cfg.duration)
    try:
        report = steady_state_metrics(result, window, cfg.tool, cfg.env)
        write_metrics(args.out, report.to_dict())
    except WindowOutOfRange:
        write_metrics(args.out, {"incomplete": True,
                                 "reason": "log ends before the metrics window"})
    if "abort" in result.meta:
        print(f"aborted: {result.meta['abort']}", file=sys.stderr)
        return 2
    print(f"wrote {result.n_steps} steps to {args.out}")
    return 0


def cmd_validate(args) -> int:
    from .validate import run_oracles

    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    report = run_oracles(cfg.chain, cfg.friction, cfg.gravity_scale,
                         cfg.inertia_scale, cfg.inertia_joints,
                         sweep_size=args.sweep_size,
                         center=cfg.initial_state.q)
    for line in report.lines():
        print(line)
    return 0 if report.passed else 3


def _sweep_one(payload) -> int:
    config_path, out_dir, seed = payload
    ns = argparse.Namespace(config=config_path, out=out_dir, seed=seed,
                            dt=None, duration=None)
    return cmd_run(ns)


def cmd_sweep(args) -> int:
    try:
        seeds = [int(s) for s in args.seeds.split(",")]
    except ValueError:
        print("error: --seeds must be a comma-separated list of ints", file=sys.stderr)
        return 1
    jobs = [(args.config, os.path.join(args.out, f"seed{{:d}}".format(s)), s)
            for s in seeds]
    with ProcessPoolExecutor(max_workers=args.jobs) as pool:
        codes = list(pool.map(_sweep_one, jobs))
    worst = max(codes)
    print(f"sweep finished: {codes.count(0)}/{len(codes)} runs ok")
    return worst


def cmd_make_configs(args) -> int:
    from .scenarios import write_canonical_configs

    for path in write_canonical_configs(args.out):
        print(path)
    return 0


def main(argv=None) -> int:
    _setup_logging()
    parser = argparse.ArgumentParser(prog="phri", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one scenario and write log/metrics/meta")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--out", required=True)
    p_run.add_argument("--seed", type=int)
    p_run.add_argument("--dt", type=float)
    p_run.add_argument("--duration", type=float)
    p_run.set_defaults(func=cmd_run)

    p_val = sub.add_parser("validate", help="run the model oracle suite")
    p_val.add_argument("--config", required=True)
    p_val.add_argument("--sweep-size", type=int, default=1000)
    p_val.set_defaults(func=cmd_validate)

    p_sw = sub.add_parser("sweep", help="run one config across several seeds")
    p_sw.add_argument("--config", required=True)
    p_sw.add_argument("--out", required=True)
    p_sw.add_argument("--seeds", required=True)
    p_sw.add_argument("--jobs", type=int, default=None)
    p_sw.set_defaults(func=cmd_sweep)

    p_mk = sub.add_parser("make-configs", help="regenerate the canonical configs")
    p_mk.add_argument("--out", default="configs")
    p_mk.set_defaults(func=cmd_make_configs)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
