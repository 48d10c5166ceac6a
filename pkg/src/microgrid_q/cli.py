"""Command-line entry point (``microgrid-q``).

Subcommands::

    gen-data --seed S --hours H --out trace.csv
    train    --config run.json --out DIR [--seed S] [--policy delayed|vanilla]
    dp       --config run.json --out DIR
    eval     --qtable DIR/qtable_delayed.bin --config run.json
    compare  --config run.json --seeds N --out DIR
"""
from __future__ import annotations

import argparse
import json
import logging
import sys

from .config import RunConfig, load_config
from .data import save_trace, synth_trace
from .experiment import build_instance, compare, evaluate_qtable, measures, run_experiment, solve_dp


def _config(path) -> RunConfig:
    return load_config(path) if path else RunConfig()


def _print(doc) -> None:
    print(json.dumps(doc, indent=2, sort_keys=True))


def cmd_gen_data(args) -> int:
    trace = synth_trace(args.seed, args.hours)
    save_trace(trace, args.out)
    print(f"wrote {len(trace)} hourly records to {args.out}")
    return 0


def cmd_train(args) -> int:
    cfg = _config(args.config)
    summary = run_experiment(cfg, args.out, seed=args.seed, policies=(args.policy,))
    _print(summary["table"])
    return 0


def cmd_dp(args) -> int:
    from pathlib import Path

    cfg = _config(args.config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    traj = solve_dp(build_instance(cfg), out)
    doc = {"config": cfg.to_json(), "policies": {"dp": measures(traj, traj)}}
    (out / "summary.json").write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    _print(doc["policies"])
    return 0


def cmd_eval(args) -> int:
    _print(evaluate_qtable(args.qtable, _config(args.config)))
    return 0


def cmd_compare(args) -> int:
    doc = compare(_config(args.config), args.out, args.seeds)
    _print(doc["aggregate"])
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="microgrid-q", description="Tabular Q-learning with delayed Q-update for microgrid dispatch.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen-data", help="write a synthetic hourly trace CSV")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--hours", type=int, default=720)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_gen_data)

    t = sub.add_parser("train", help="train one Q-learning policy and evaluate it against the DP optimum")
    t.add_argument("--config")
    t.add_argument("--out", required=True)
    t.add_argument("--seed", type=int, default=None, help="learning seed (default: hyperparams.seed)")
    t.add_argument("--policy", choices=("delayed", "vanilla"), default="delayed")
    t.set_defaults(func=cmd_train)

    d = sub.add_parser("dp", help="solve the validation window exactly")
    d.add_argument("--config")
    d.add_argument("--out", required=True)
    d.set_defaults(func=cmd_dp)

    e = sub.add_parser("eval", help="evaluate a saved Q-table on the validation window")
    e.add_argument("--qtable", required=True)
    e.add_argument("--config")
    e.set_defaults(func=cmd_eval)

    c = sub.add_parser("compare", help="delayed vs vanilla vs DP over several seeds")
    c.add_argument("--config")
    c.add_argument("--seeds", type=int, default=None, help="number of learning seeds (default: config seeds)")
    c.add_argument("--out", default=None, help="output directory (default: config output_dir)")
    c.set_defaults(func=cmd_compare)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    if getattr(args, "out", "") is None:
        args.out = _config(args.config).output_dir
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
