"""Command line entry point: ``btlearn run`` and ``btlearn check-tree``."""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
import time

from .firesim import BEHAVIOR_TITLES, BEHAVIORS
from .harness import ExperimentConfig, run_experiment
from .treedef import TreeDefError, parse_tree_document, serialize_tree


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="btlearn", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a fire-control experiment")
    run.add_argument("--config", metavar="PATH", help="JSON file with ExperimentConfig fields")
    run.add_argument("--scenario", type=int, choices=(1, 2))
    run.add_argument("--trials", type=int)
    run.add_argument("--iterations", type=int)
    run.add_argument("--seed", type=int, dest="master_seed")
    run.add_argument("--out", dest="out_dir", metavar="DIR")
    run.add_argument("--baseline", action=argparse.BooleanOptionalAction, default=None,
                     help="also run the random baseline (default: on)")
    run.add_argument("--tree", dest="tree_path", metavar="PATH", help="tree document (.bt3.json)")
    run.add_argument("--alpha", type=float)
    run.add_argument("--gamma", type=float)
    run.add_argument("--epsilon", type=float, help="initial exploration rate")
    run.add_argument("--window", type=int, help="smoothing window for accuracy curves")
    run.add_argument("--figures", action="store_true", help="also render PNG figures")

    check = sub.add_parser("check-tree", help="validate a tree document")
    check.add_argument("path")
    check.add_argument("--canonical", action="store_true", help="print the canonical form")
    return parser


def config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    data: dict = {}
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            data = json.load(fh)
    for key in ("scenario", "trials", "iterations", "master_seed", "out_dir", "baseline",
                "tree_path", "window"):
        value = getattr(args, key)
        if value is not None:
            data[key] = value
    if args.figures:
        data["figures"] = True
    config = ExperimentConfig.from_dict(data)
    overrides = {k: v for k, v in (("alpha", args.alpha), ("gamma", args.gamma),
                                   ("epsilon_start", args.epsilon)) if v is not None}
    if overrides:
        if "epsilon_start" in overrides:
            overrides["epsilon_floor"] = min(config.learner.epsilon_floor,
                                             overrides["epsilon_start"])
        config.learner = dataclasses.replace(config.learner, **overrides)
        config.node_params = {k: dataclasses.replace(v, **overrides)
                              for k, v in config.node_params.items()}
    return config


def cmd_run(args: argparse.Namespace) -> int:
    config = config_from_args(args)
    started = time.perf_counter()
    result = run_experiment(config)
    elapsed = time.perf_counter() - started
    print(f"scenario {config.scenario}: {config.trials} trials x {config.iterations} iterations "
          f"in {elapsed:.1f}s")
    for behavior, acc in zip(BEHAVIORS, result.behavior_accuracy):
        print(f"  {BEHAVIOR_TITLES[behavior]:<17} {acc:.3f}")
    for node_id in result.node_ids:
        first, last = result.first_last(node_id)
        line = f"  node {node_id}: first-100 {first:.3f}  last-100 {last:.3f}"
        if result.baseline_trials:
            _, base = result.first_last(node_id, baseline=True)
            line += f"  baseline {base:.3f}"
        print(line)
    if config.out_dir:
        print(f"outputs written to {config.out_dir}")
    return 0


def cmd_check_tree(args: argparse.Namespace) -> int:
    with open(args.path, encoding="utf-8") as fh:
        doc = parse_tree_document(fh.read())
    if args.canonical:
        sys.stdout.write(serialize_tree(doc))
    else:
        print(f"{args.path}: ok ({len(doc.nodes)} nodes, root {doc.root_id!r})")
    return 0


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    try:
        if args.command == "run":
            return cmd_run(args)
        return cmd_check_tree(args)
    except TreeDefError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
