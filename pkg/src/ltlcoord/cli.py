"""Command line entry point: validate, precompute, simulate and plot scenarios."""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from typing import List, Optional

from .planner import PlanningError
from .plot import read_trajectories, render_svg
from .product import CACHE_ENV, NoPathError
from .scenario import ScenarioError, load_scenario, resolve_path
from .sim import SafetyViolationError, Simulator

EXIT_OK, EXIT_FAILURE, EXIT_BAD_SCENARIO = 0, 1, 2

log = logging.getLogger("ltlcoord")


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ltlcoord", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, out=False):
        sp.add_argument("--scenario", required=True,
                        help="scenario JSON file or the name of a bundled scenario (e.g. example1)")
        sp.add_argument("--warn-as-error", action="store_true", help="treat validation warnings as errors")
        if out:
            sp.add_argument("--out", required=True, help="output directory")

    sp = sub.add_parser("check", help="validate a scenario file")
    common(sp)
    sp = sub.add_parser("precompute", help="build and cache the offline automata and potentials")
    common(sp)
    sp.add_argument("--cache-dir", help=f"cache directory (default: ${CACHE_ENV})")
    sp = sub.add_parser("run", help="simulate a scenario and write its outputs")
    common(sp, out=True)
    sp.add_argument("--seed", type=int, help="override the scenario seed")
    sp.add_argument("--duration", type=float, help="override the simulated duration in seconds")
    sp.add_argument("--cache-dir", help=f"cache directory (default: ${CACHE_ENV})")
    sp = sub.add_parser("plot", help="render plot.svg from a trajectories log")
    common(sp, out=True)
    sp.add_argument("--log", help="trajectories CSV (default: OUT/trajectories.csv)")
    return p


def _load(args):
    loaded = load_scenario(args.scenario, warn_as_error=args.warn_as_error)
    for w in loaded.warnings:
        print(f"warning: {w}", file=sys.stderr)
    return loaded.config


def _write(path: str, text: str):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def cmd_check(args) -> int:
    cfg = _load(args)
    print(f"{cfg.name}: ok ({len(cfg.robots)} robots, margin {cfg.sensing_margin():.3f} m)")
    return EXIT_OK


def cmd_precompute(args) -> int:
    cfg = _load(args)
    cache_dir = args.cache_dir or os.environ.get(CACHE_ENV)
    if not cache_dir:
        print(f"error: give --cache-dir or set ${CACHE_ENV}", file=sys.stderr)
        return EXIT_FAILURE
    sim = Simulator(cfg, cache_dir)
    seen = set()
    for rid in sorted(sim.robots):
        b = sim.robots[rid].ctx.bundle
        if id(b) in seen:
            continue
        seen.add(id(b))
        print(f"robot {rid}: CTS {len(b.cts)} states / {b.cts.n_edges} edges, "
              f"PBA {len(b.pba)} states / {b.pba.n_edges} edges, |F*| = {len(b.pba.fstar)}")
    return EXIT_OK


def cmd_run(args) -> int:
    cfg = _load(args)
    if args.seed is not None:
        cfg.seed = args.seed
    if args.duration is not None:
        cfg.duration = args.duration
    os.makedirs(args.out, exist_ok=True)
    sim = Simulator(cfg, args.cache_dir or os.environ.get(CACHE_ENV))
    try:
        report = sim.run()
    except SafetyViolationError as exc:
        with open(resolve_path(args.scenario), "r", encoding="utf-8") as fh:
            scenario = json.load(fh)
        bundle = dict(exc.reproduction, scenario_file=scenario)
        _write(os.path.join(args.out, "reproduction.json"), json.dumps(bundle, indent=1, sort_keys=True) + "\n")
        print(f"error: {exc}; reproduction bundle written to {args.out}", file=sys.stderr)
        return EXIT_FAILURE
    _write(os.path.join(args.out, "trajectories.csv"), report.trajectories_csv())
    _write(os.path.join(args.out, "events.jsonl"), report.events_jsonl())
    _write(os.path.join(args.out, "metrics.json"), json.dumps(report.metrics, indent=1, sort_keys=True) + "\n")
    radii = {rc.id: rc.radius for rc in cfg.robots}
    _write(os.path.join(args.out, "plot.svg"),
           render_svg(cfg.workspace, read_trajectories(report.trajectories_csv()), radii, title=cfg.name))
    m = report.metrics
    print(f"{cfg.name}: CT {m['CT_rounds']} rounds / {m['CT_pairs']} pairs, "
          f"{m['n_local_replans']} local replans, safety violations {m['safety_violations']}")
    return EXIT_OK


def cmd_plot(args) -> int:
    cfg = _load(args)
    src = args.log or os.path.join(args.out, "trajectories.csv")
    with open(src, "r", encoding="utf-8") as fh:
        tracks = read_trajectories(fh.read())
    os.makedirs(args.out, exist_ok=True)
    radii = {rc.id: rc.radius for rc in cfg.robots}
    _write(os.path.join(args.out, "plot.svg"), render_svg(cfg.workspace, tracks, radii, title=cfg.name))
    return EXIT_OK


COMMANDS = {"check": cmd_check, "precompute": cmd_precompute, "run": cmd_run, "plot": cmd_plot}


def main(argv: Optional[List[str]] = None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except ScenarioError as exc:
        for problem in exc.problems:
            print(f"error: {problem}", file=sys.stderr)
        return EXIT_BAD_SCENARIO
    except (PlanningError, NoPathError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE


def entry():
    sys.exit(main())


if __name__ == "__main__":
    entry()
