"""Command line entry point: ``veisim run | sweep | render | list``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path

from .escooter import BehaviorType
from .experiment import read_trajectory, run_sweep, write_results, write_trajectory
from .render import render_strip
from .scenario_io import ScenarioParseError, builtin_names, expand_grid, load_grid, load_scenario
from .simulation import ConfigError, run_episode

log = logging.getLogger("veisim")


def _times(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma separated list of seconds, got {text!r}") from None


def _cmd_run(args) -> int:
    sc = load_scenario(args.scenario)
    if args.behavior:
        sc = sc.with_behavior(args.behavior)
    res = run_episode(sc)
    info = {
        "use_case": sc.use_case,
        "behavior": sc.behavior.value,
        "outcome": res.outcome.value,
        "t_event_s": round(res.t_event, 6),
        "final_mode": res.final_mode.name.lower(),
        "decision_gap_m": None if res.decision_gap != res.decision_gap else round(res.decision_gap, 4),
        "min_separation_m": round(res.min_separation, 4),
        "collided_with": res.collided_with,
    }
    print(json.dumps(info, indent=2))
    if args.out:
        out = Path(args.out)
        write_trajectory(sc, res, out / "trajectory.csv")
        (out / "episode.json").write_text(json.dumps(info, indent=2) + "\n")
        times = args.times or _default_times(res)
        (out / "strip.svg").write_text(render_strip(sc, res, times))
        log.info("wrote %s", out)
    return 0


def _default_times(res) -> list[float]:
    end = res.trajectory[-1].t
    return [round(end * k / 3, 1) for k in range(4)]


def _cmd_sweep(args) -> int:
    base = load_scenario(args.scenario)
    grid = load_grid(args.grid)
    behaviors = list(BehaviorType) if args.behavior == "both" else [BehaviorType(args.behavior)]
    scenarios = [sc for b in behaviors for sc in expand_grid(base.with_behavior(b), grid)]
    log.info("running %d episodes on %d worker(s)", len(scenarios), args.workers)
    t0 = time.perf_counter()
    result = run_sweep(scenarios, workers=args.workers)
    log.info("sweep finished in %.1f s", time.perf_counter() - t0)
    files = write_results(result, args.out, figure=not args.no_figure)
    for (case, behavior), agg in result.by_case().items():
        print(f"{case:24s} {behavior:10s} episodes={agg.episodes:6d} collisions={agg.collisions:6d} "
              f"rate={agg.collision_rate:6.2f}%")
    for f in files.values():
        print(f)
    return 0


def _cmd_render(args) -> int:
    sc, res = read_trajectory(args.log)
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    Path(args.out).write_text(render_strip(sc, res, args.times))
    print(args.out)
    return 0


def _cmd_list(args) -> int:
    print("scenarios:", " ".join(builtin_names("scenarios")))
    print("grids:    ", " ".join(builtin_names("grids")))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="veisim", description="Vehicle / e-scooter interaction simulator.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one episode")
    run.add_argument("--scenario", required=True, help="scenario YAML path or builtin name")
    run.add_argument("--behavior", choices=[b.value for b in BehaviorType])
    run.add_argument("--out", help="directory for trajectory.csv, episode.json and strip.svg")
    run.add_argument("--times", type=_times, help="strip frame times in seconds, e.g. 0,3,6.1,7.5")
    run.set_defaults(func=_cmd_run)

    sweep = sub.add_parser("sweep", help="run a parameter grid")
    sweep.add_argument("--scenario", required=True)
    sweep.add_argument("--grid", required=True)
    sweep.add_argument("--behavior", choices=["aggressive", "normal", "both"], default="both")
    sweep.add_argument("--out", required=True)
    sweep.add_argument("--workers", type=int, default=1)
    sweep.add_argument("--no-figure", action="store_true", help="skip outcomes.svg")
    sweep.set_defaults(func=_cmd_sweep)

    render = sub.add_parser("render", help="render frames from a trajectory log")
    render.add_argument("--log", required=True)
    render.add_argument("--times", type=_times, required=True)
    render.add_argument("--out", required=True)
    render.set_defaults(func=_cmd_render)

    lst = sub.add_parser("list", help="list builtin scenarios and grids")
    lst.set_defaults(func=_cmd_list)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, ScenarioParseError, FileNotFoundError, ValueError) as exc:
        print(f"veisim: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
