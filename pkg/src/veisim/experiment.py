"""Batch sweeps, collision-rate aggregation and result files."""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .escooter import EscooterState, FsmMode
from .scenario_io import SYMBOLS, scenario_from_dict, scenario_to_dict, symbol_value
from .simulation import ConfigError, EpisodeResult, Frame, Outcome, Scenario, simulate
from .vehicle import VehicleState

CSV_COLUMNS = ["episode_id", "use_case", "behavior", *SYMBOLS, "outcome", "t_event_s", "min_separation_m"]
DEFAULT_CHUNK = 2048


@dataclass(frozen=True)
class SweepRow:
    episode_id: int
    use_case: str
    behavior: str
    values: dict
    outcome: Outcome
    t_event: float
    min_separation: float
    collided_with: str | None = None

    def csv_fields(self) -> list[str]:
        swept = ["" if self.values.get(s) is None else f"{self.values[s]:g}" for s in SYMBOLS]
        return [str(self.episode_id), self.use_case, self.behavior, *swept,
                self.outcome.value, f"{self.t_event:.3f}", f"{self.min_separation:.4f}"]


@dataclass(frozen=True)
class Aggregate:
    episodes: int
    collisions: int
    reached: int
    timeouts: int

    @property
    def collision_rate(self) -> float:
        return 100.0 * self.collisions / self.episodes if self.episodes else math.nan


def _aggregate(rows: Iterable[SweepRow]) -> Aggregate:
    counts = {o: 0 for o in Outcome}
    n = 0
    for r in rows:
        counts[r.outcome] += 1
        n += 1
    return Aggregate(n, counts[Outcome.COLLISION], counts[Outcome.REACHED], counts[Outcome.TIMEOUT])


@dataclass
class SweepResult:
    rows: list[SweepRow] = field(default_factory=list)

    @property
    def aggregate(self) -> Aggregate:
        return _aggregate(self.rows)

    @property
    def episodes(self) -> int:
        return len(self.rows)

    @property
    def collisions(self) -> int:
        return self.aggregate.collisions

    @property
    def collision_rate(self) -> float:
        """Percentage of episodes ending in a collision."""
        return self.aggregate.collision_rate

    def by_case(self) -> dict[tuple[str, str], Aggregate]:
        """Aggregates per (use case, behavior), in order of first appearance."""
        keys: dict[tuple[str, str], list[SweepRow]] = {}
        for r in self.rows:
            keys.setdefault((r.use_case, r.behavior), []).append(r)
        return {k: _aggregate(v) for k, v in keys.items()}

    def select(self, use_case: str | None = None, behavior: str | None = None) -> "SweepResult":
        return SweepResult([r for r in self.rows
                            if (use_case is None or r.use_case == use_case)
                            and (behavior is None or r.behavior == behavior)])

    @classmethod
    def merge(cls, *parts: "SweepResult") -> "SweepResult":
        return cls([r for p in parts for r in p.rows])


def _check(scenarios: Sequence[Scenario], start_id: int):
    for i, sc in enumerate(scenarios):
        if not isinstance(sc, Scenario):
            raise ConfigError(f"scenario {start_id + i}: expected Scenario, got {type(sc).__name__}")
        try:
            sc._validate()
        except ConfigError as exc:
            raise ConfigError(f"scenario {start_id + i} ({sc.use_case}): {exc}") from None


def _simulate_chunk(chunk: list[Scenario]) -> list[EpisodeResult]:
    return simulate(chunk, record=False)


def run_sweep(scenarios: Sequence[Scenario], workers: int = 1, *, start_id: int = 0,
              chunk_size: int = DEFAULT_CHUNK) -> SweepResult:
    """Run every scenario; rows come back in input order whatever the schedule."""
    scenarios = list(scenarios)
    if not scenarios:
        raise ConfigError("sweep needs at least one scenario")
    if workers < 1:
        raise ConfigError(f"workers must be >= 1, got {workers}")
    _check(scenarios, start_id)
    size = max(1, min(chunk_size, math.ceil(len(scenarios) / workers)))
    chunks = [scenarios[i:i + size] for i in range(0, len(scenarios), size)]
    if workers == 1 or len(chunks) == 1:
        parts = [_simulate_chunk(c) for c in chunks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_simulate_chunk, chunks))
    results = [r for part in parts for r in part]
    rows = [
        SweepRow(
            episode_id=start_id + i,
            use_case=sc.use_case,
            behavior=sc.behavior.value,
            values={s: symbol_value(sc, s) for s in SYMBOLS},
            outcome=res.outcome,
            t_event=res.t_event,
            min_separation=res.min_separation,
            collided_with=res.collided_with,
        )
        for i, (sc, res) in enumerate(zip(scenarios, results))
    ]
    return SweepResult(rows)


def compare_rates(a, b) -> float:
    """Percentage-point change from ``a`` to ``b`` (results or plain rates)."""
    rate_a = getattr(a, "collision_rate", a)
    rate_b = getattr(b, "collision_rate", b)
    return float(rate_b) - float(rate_a)


def results_csv(r: SweepResult) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for row in r.rows:
        w.writerow(row.csv_fields())
    return buf.getvalue()


def summary_dict(r: SweepResult) -> dict:
    agg = r.aggregate
    return {
        "episodes": agg.episodes,
        "collisions": agg.collisions,
        "collision_rate_percent": f"{agg.collision_rate:.2f}",
        "cases": [
            {
                "use_case": case,
                "behavior": behavior,
                "episodes": a.episodes,
                "collisions": a.collisions,
                "reached": a.reached,
                "timeouts": a.timeouts,
                "collision_rate_percent": f"{a.collision_rate:.2f}",
            }
            for (case, behavior), a in r.by_case().items()
        ],
    }


def write_results(r: SweepResult, path: str | Path, figure: bool = True) -> dict[str, Path]:
    """Write ``results.csv`` and ``summary.json`` (plus ``outcomes.svg``) into ``path``."""
    if not r.rows:
        raise ConfigError("refusing to write an empty sweep")
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    files = {"csv": out / "results.csv", "summary": out / "summary.json"}
    files["csv"].write_text(results_csv(r))
    files["summary"].write_text(json.dumps(summary_dict(r), indent=2) + "\n")
    if figure:
        from .render import render_outcome_histogram

        files["figure"] = out / "outcomes.svg"
        files["figure"].write_text(render_outcome_histogram(r))
    return files


def read_results_csv(path: str | Path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


# ---------------------------------------------------------------------------
# Trajectory logs: '#'-prefixed header lines carry the scenario and outcome,
# then one CSV row per logged step. Floats are written with repr() so a log
# reloads bit-exactly.

_LOG_MAGIC = "# veisim trajectory log v1"


def trajectory_columns(n_vehicles: int) -> list[str]:
    cols = ["step", "t_s", "esc_x", "esc_y", "esc_vx", "esc_vy", "mode", "decision_gap"]
    for j in range(n_vehicles):
        cols += [f"veh{j}_x", f"veh{j}_y", f"veh{j}_psi", f"veh{j}_v"]
    return cols + ["perceived"]


def trajectory_csv(sc: Scenario, res: EpisodeResult) -> str:
    if not res.trajectory:
        raise ValueError("episode was run without recording a trajectory")
    meta = {
        "outcome": res.outcome.value,
        "t_event": res.t_event,
        "min_separation": res.min_separation,
        "final_mode": res.final_mode.name.lower(),
        "decision_gap": None if math.isnan(res.decision_gap) else res.decision_gap,
        "collided_with": res.collided_with,
        "degenerate_contact": res.degenerate_contact,
    }
    buf = io.StringIO()
    buf.write(_LOG_MAGIC + "\n")
    buf.write("# scenario: " + json.dumps(scenario_to_dict(sc), sort_keys=True) + "\n")
    buf.write("# result: " + json.dumps(meta, sort_keys=True) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(trajectory_columns(len(sc.vehicles)))
    for k, f in enumerate(res.trajectory):
        e = f.escooter
        row = [k, repr(f.t), repr(float(e.pos[0])), repr(float(e.pos[1])),
               repr(float(e.vel[0])), repr(float(e.vel[1])), e.mode.name.lower(), repr(float(e.decision_gap))]
        for v in f.vehicles:
            row += [repr(float(v.x)), repr(float(v.y)), repr(float(v.psi)), repr(float(v.v))]
        row.append(";".join(str(j) for j in f.perceived))
        w.writerow(row)
    return buf.getvalue()


def write_trajectory(sc: Scenario, res: EpisodeResult, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(trajectory_csv(sc, res))
    return path


def read_trajectory(path: str | Path) -> tuple[Scenario, EpisodeResult]:
    text = Path(path).read_text()
    lines = text.splitlines()
    if not lines or lines[0] != _LOG_MAGIC:
        raise ValueError(f"{path}: not a veisim trajectory log")
    header = {}
    body_start = 1
    for body_start in range(1, len(lines)):
        line = lines[body_start]
        if not line.startswith("# "):
            break
        key, _, value = line[2:].partition(": ")
        header[key] = json.loads(value)
    sc = scenario_from_dict(header["scenario"])
    meta = header["result"]
    n_veh = len(sc.vehicles)
    frames = []
    for rec in csv.DictReader(lines[body_start:]):
        esc = EscooterState(
            pos=np.array([float(rec["esc_x"]), float(rec["esc_y"])]),
            vel=np.array([float(rec["esc_vx"]), float(rec["esc_vy"])]),
            mode=FsmMode[rec["mode"].upper()],
            decision_gap=float(rec["decision_gap"]),
        )
        vehicles = tuple(
            VehicleState(float(rec[f"veh{j}_x"]), float(rec[f"veh{j}_y"]),
                         float(rec[f"veh{j}_psi"]), float(rec[f"veh{j}_v"]))
            for j in range(n_veh)
        )
        perceived = tuple(int(j) for j in rec["perceived"].split(";") if j)
        frames.append(Frame(float(rec["t_s"]), esc, vehicles, perceived))
    res = EpisodeResult(
        outcome=Outcome(meta["outcome"]),
        t_event=meta["t_event"],
        min_separation=meta["min_separation"],
        final_mode=FsmMode[meta["final_mode"].upper()],
        decision_gap=math.nan if meta["decision_gap"] is None else meta["decision_gap"],
        degenerate_contact=meta["degenerate_contact"],
        collided_with=meta["collided_with"],
        trajectory=frames,
    )
    return sc, res
