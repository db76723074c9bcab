"""World assembly and the fixed-step episode loop.

Episodes are advanced in lockstep as numpy batches: ``simulate`` takes any
number of scenarios, groups them by vehicle count and steps each group
together. ``run_episode`` is the one-scenario case with the trajectory
recorded. Every per-episode quantity is computed elementwise, so an episode's
result does not depend on which other episodes share its batch.

Tick order (fixed for determinism):
  1. step moving vehicles,
  2. perceive (sector field of view),
  3. forces toward the current target plus repulsion from perceived vehicles,
  4. state machine (decision at the decision point, latched),
  5. integrate the e-scooter,
  6. collision test, then arrival test.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .escooter import (
    DECISION_TOLERANCE,
    BehaviorType,
    EscooterParams,
    EscooterState,
    FsmMode,
    current_target,
    desired_velocity,
    destination_force,
    fov_direction,
    fsm_step,
    integrate_escooter,
    total_force,
    vehicle_repulsion,
)
from .geom2d import (
    OrientedRect,
    closest_point_on_rect,
    norm,
    point_in_rect,
    points_in_sector,
    rect_sample_points,
    vec2,
)
from .vehicle import VehicleSpec, VehicleState, bicycle_step, constant_speed_controller, footprint

ARRIVAL_TOLERANCE = 0.5
DEFAULT_T_MAX = 30.0
DEFAULT_DT = 0.1


class ConfigError(ValueError):
    """Invalid scenario or sweep configuration."""


class MapKind(str, enum.Enum):
    INTERSECTION = "intersection"
    STRAIGHT_ROAD = "straight_road"


class Outcome(str, enum.Enum):
    COLLISION = "collision"
    REACHED = "reached"
    TIMEOUT = "timeout"


_OUTCOME_CODES = (Outcome.COLLISION, Outcome.REACHED, Outcome.TIMEOUT)


@dataclass(frozen=True)
class CrossingThresholds:
    aggressive: float = 15.0
    normal: float = 200.0

    def __post_init__(self):
        if not (0 < self.aggressive < self.normal):
            raise ConfigError(
                f"need 0 < aggressive threshold < normal threshold, got {self.aggressive}, {self.normal}"
            )

    def for_behavior(self, behavior: BehaviorType) -> float:
        return self.aggressive if BehaviorType(behavior) is BehaviorType.AGGRESSIVE else self.normal


@dataclass(frozen=True)
class Scenario:
    map_kind: MapKind
    vehicles: tuple[tuple[VehicleState, VehicleSpec], ...]
    escooter_init: tuple[float, float]
    destination: tuple[float, float]
    decision_point: tuple[float, float]
    escooter_params: EscooterParams = EscooterParams()
    behavior: BehaviorType = BehaviorType.AGGRESSIVE
    thresholds: CrossingThresholds = CrossingThresholds()
    lane_width: float = 4.0
    t_max: float = DEFAULT_T_MAX
    dt: float = DEFAULT_DT
    use_case: str = ""

    def __post_init__(self):
        object.__setattr__(self, "map_kind", MapKind(self.map_kind))
        object.__setattr__(self, "behavior", BehaviorType(self.behavior))
        object.__setattr__(self, "vehicles", tuple((s, sp) for s, sp in self.vehicles))
        for name in ("escooter_init", "destination", "decision_point"):
            pt = tuple(float(c) for c in getattr(self, name))
            if len(pt) != 2 or not all(math.isfinite(c) for c in pt):
                raise ConfigError(f"{name} must be two finite coordinates, got {getattr(self, name)!r}")
            object.__setattr__(self, name, pt)
        thr = self.thresholds.for_behavior(self.behavior)
        if self.escooter_params.crossing_threshold != thr:
            object.__setattr__(self, "escooter_params", replace(self.escooter_params, crossing_threshold=thr))
        if not self.use_case:
            object.__setattr__(self, "use_case", default_use_case(self.map_kind, self.vehicles))
        self._validate()

    def _validate(self):
        if not (self.dt > 0):
            raise ConfigError(f"dt must be > 0, got {self.dt}")
        if not (self.t_max >= self.dt):
            raise ConfigError(f"t_max must be >= dt, got t_max={self.t_max}, dt={self.dt}")
        if not (self.lane_width > 0):
            raise ConfigError(f"lane_width must be > 0, got {self.lane_width}")
        if not self.vehicles:
            raise ConfigError("scenario needs at least one vehicle")
        names = [spec.name for _, spec in self.vehicles]
        if len(set(names)) != len(names):
            raise ConfigError(f"vehicle names must be unique, got {names}")
        init = np.array(self.escooter_init)
        seg = np.array(self.destination) - init
        seg2 = float(seg @ seg)
        if seg2 > 0:
            t = float((np.array(self.decision_point) - init) @ seg) / seg2
            if not (0.0 <= t <= 1.0):
                raise ConfigError(
                    f"decision_point {self.decision_point} does not lie between "
                    f"escooter_init {self.escooter_init} and destination {self.destination}"
                )

    @property
    def n_steps(self) -> int:
        return int(round(self.t_max / self.dt))

    def vehicle(self, name: str) -> tuple[VehicleState, VehicleSpec]:
        for state, spec in self.vehicles:
            if spec.name == name:
                return state, spec
        raise KeyError(name)

    def with_behavior(self, behavior: BehaviorType) -> "Scenario":
        return replace(self, behavior=BehaviorType(behavior))


def default_use_case(map_kind: MapKind, vehicles) -> str:
    n_hazard = sum(1 for _, spec in vehicles if spec.hazard)
    if MapKind(map_kind) is MapKind.STRAIGHT_ROAD:
        return "one_vehicle_passing" if n_hazard == 1 else f"{n_hazard}_vehicle_passing"
    return {1: "one_vehicle_crossing", 2: "two_vehicle_crossing"}.get(n_hazard, f"{n_hazard}_vehicle_crossing")


@dataclass(frozen=True)
class Frame:
    t: float
    escooter: EscooterState
    vehicles: tuple[VehicleState, ...]
    perceived: tuple[int, ...] = ()

    @property
    def mode(self) -> FsmMode:
        return self.escooter.mode


@dataclass
class EpisodeResult:
    outcome: Outcome
    t_event: float
    min_separation: float
    final_mode: FsmMode
    decision_gap: float = math.nan
    degenerate_contact: bool = False
    collided_with: str | None = None
    trajectory: list[Frame] = field(default_factory=list)


def detect_collision(esc: EscooterState, body_radius: float, vehicles: Sequence[OrientedRect]) -> bool:
    return any(bool(point_in_rect(esc.pos, r, inflate=body_radius)) for r in vehicles)


def gap_distance(esc_pos, vehicles: Sequence[tuple[VehicleState, VehicleSpec]]) -> float:
    """Distance to the nearest hazard vehicle footprint; inf when there is none."""
    p = np.asarray(esc_pos, float)
    gaps = [float(norm(p - closest_point_on_rect(p, footprint(s, spec))))
            for s, spec in vehicles if spec.hazard]
    return min(gaps, default=math.inf)


def run_episode(sc: Scenario, record: bool = True) -> EpisodeResult:
    return simulate([sc], record=record)[0]


def simulate(scenarios: Sequence[Scenario], record: bool = False) -> list[EpisodeResult]:
    """Run every scenario to completion; results are in input order."""
    results: list[EpisodeResult | None] = [None] * len(scenarios)
    groups: dict[int, list[int]] = {}
    for i, sc in enumerate(scenarios):
        if not isinstance(sc, Scenario):
            raise ConfigError(f"scenario {i}: expected Scenario, got {type(sc).__name__}")
        groups.setdefault(len(sc.vehicles), []).append(i)
    for idx in groups.values():
        for i, res in zip(idx, _run_batch([scenarios[i] for i in idx], record)):
            results[i] = res
    return results  # type: ignore[return-value]


def _rects(x, y, psi, length, width) -> OrientedRect:
    return OrientedRect(vec2(x, y), psi, length, width)


def _gap(pos, rects: OrientedRect, hazard):
    """Per-episode hazard gap plus the closest points used as influence points."""
    closest = closest_point_on_rect(pos[:, None, :], rects)
    d = norm(pos[:, None, :] - closest)
    return np.min(np.where(hazard, d, np.inf), axis=-1), closest


def _run_batch(scs: list[Scenario], record: bool) -> list[EpisodeResult]:
    n = len(scs)

    def per_vehicle(fn):
        return np.array([[fn(s, sp) for s, sp in sc.vehicles] for sc in scs], dtype=float)

    def per_episode(fn):
        return np.array([fn(sc) for sc in scs], dtype=float)

    vx = per_vehicle(lambda s, sp: s.x)
    vy = per_vehicle(lambda s, sp: s.y)
    vpsi = per_vehicle(lambda s, sp: s.psi)
    vv = per_vehicle(lambda s, sp: s.v)
    length = per_vehicle(lambda s, sp: sp.length)
    width = per_vehicle(lambda s, sp: sp.width)
    lf = per_vehicle(lambda s, sp: sp.lf)
    lr = per_vehicle(lambda s, sp: sp.lr)
    moving = per_vehicle(lambda s, sp: sp.moving).astype(bool)
    hazard = per_vehicle(lambda s, sp: sp.hazard).astype(bool)

    prm = [sc.escooter_params for sc in scs]
    mass = np.array([p.mass for p in prm])
    k_des = np.array([p.k_des for p in prm])
    v0 = np.array([p.v0 for p in prm])
    sigma = np.array([p.sigma_des for p in prm])
    A = np.array([p.A_veh for p in prm])
    b = np.array([p.b_veh for p in prm])
    radius = np.array([p.fov_radius for p in prm])
    cos_half = np.cos(np.array([p.fov_half_angle for p in prm]))
    threshold = np.array([p.crossing_threshold for p in prm])
    v_max = np.array([p.v_max for p in prm])
    body = np.array([p.body_radius for p in prm])

    dt = per_episode(lambda sc: sc.dt)
    n_steps = np.array([sc.n_steps for sc in scs])
    dp = np.array([sc.decision_point for sc in scs], dtype=float)
    dest = np.array([sc.destination for sc in scs], dtype=float)

    pos = np.array([sc.escooter_init for sc in scs], dtype=float)
    vel = np.zeros((n, 2))
    mode = np.full(n, int(FsmMode.APPROACH))
    decision_gap = np.full(n, np.nan)
    seen = np.zeros(vx.shape, bool)

    alive = np.ones(n, bool)
    outcome = np.full(n, -1)
    t_event = np.zeros(n)
    end_step = np.zeros(n, int)
    degenerate = np.zeros(n, bool)
    hit = np.full(n, -1)

    rects = _rects(vx, vy, vpsi, length, width)
    min_sep, _ = _gap(pos, rects, hazard)

    def finish(mask, code, k):
        nonlocal alive
        mask = mask & alive
        outcome[mask] = code
        t_event[mask] = k * dt[mask]
        end_step[mask] = k
        alive = alive & ~mask

    def snapshot():
        return (pos.copy(), vel.copy(), mode.copy(), decision_gap.copy(),
                vx.copy(), vy.copy(), vpsi.copy(), vv.copy(), seen.copy())

    log = [snapshot()] if record else []
    contact = point_in_rect(pos[:, None, :], rects, body[:, None])
    hit[:] = np.where(contact.any(axis=-1), np.argmax(contact, axis=-1), -1)
    finish(contact.any(axis=-1), 0, 0)
    finish(norm(pos - dest) <= ARRIVAL_TOLERANCE, 1, 0)

    k = 0
    while alive.any():
        k += 1
        live = alive[:, None]

        # 1. vehicles
        vs = VehicleState(vx, vy, vpsi, vv)
        accel, steer = constant_speed_controller(vs)
        nxt = bicycle_step(vs, accel, steer, lf, lr, dt[:, None])
        upd = moving & live
        vx = np.where(upd, nxt.x, vx)
        vy = np.where(upd, nxt.y, vy)
        vpsi = np.where(upd, nxt.psi, vpsi)
        vv = np.where(upd, nxt.v, vv)
        rects = _rects(vx, vy, vpsi, length, width)

        # 2. perception
        target = current_target(mode, dp, dest)
        look = fov_direction(pos, vel, target)
        in_fov = points_in_sector(
            rect_sample_points(rects),
            pos[:, None, None, :],
            look[:, None, None, :],
            radius[:, None, None],
            cos_half[:, None, None],
        )
        seen = np.any(in_fov, axis=-1)

        # 3. forces
        gap, influence = _gap(pos, rects, hazard)
        v_des = desired_velocity(pos, target, v0, sigma, v_max)
        f_des = destination_force(v_des, vel, k_des)
        f_rep, degen = vehicle_repulsion(pos, influence, A, b, mask=seen)
        f = total_force(f_des, f_rep)
        degenerate |= degen & alive

        # 4. state machine
        at_dp = norm(pos - dp) <= DECISION_TOLERANCE
        at_dest = norm(pos - dest) <= ARRIVAL_TOLERANCE
        new_mode = fsm_step(mode, gap, threshold, at_dp, at_dest)
        decided = alive & (mode == FsmMode.APPROACH) & (new_mode != FsmMode.APPROACH)
        decision_gap = np.where(decided, gap, decision_gap)

        # 5. integrate
        st = integrate_escooter(EscooterState(pos, vel, new_mode), f, mass, dt, v_max)
        pos = np.where(live, st.pos, pos)
        vel = np.where(live, st.vel, vel)
        mode = np.where(alive, new_mode, mode)

        # 6. collision, arrival, timeout
        gap_after, _ = _gap(pos, rects, hazard)
        min_sep = np.where(alive, np.minimum(min_sep, np.minimum(gap, gap_after)), min_sep)
        contact = point_in_rect(pos[:, None, :], rects, body[:, None])
        collided = contact.any(axis=-1)
        hit = np.where(alive & collided, np.argmax(contact, axis=-1), hit)
        arrived = alive & ~collided & (norm(pos - dest) <= ARRIVAL_TOLERANCE)
        mode = np.where(arrived, fsm_step(mode, np.zeros(n), threshold, False, True), mode)

        if record:
            log.append(snapshot())
        finish(collided, 0, k)
        finish(arrived, 1, k)
        finish(k >= n_steps, 2, k)

    results = []
    for i in range(n):
        traj = []
        if record:
            for step in range(end_step[i] + 1):
                p, v, m, g, x, y, psi, sp, sn = log[step]
                traj.append(Frame(
                    t=step * float(dt[i]),
                    escooter=EscooterState(p[i].copy(), v[i].copy(), FsmMode(int(m[i])), float(g[i])),
                    vehicles=tuple(VehicleState(float(x[i, j]), float(y[i, j]), float(psi[i, j]), float(sp[i, j]))
                                   for j in range(x.shape[1])),
                    perceived=tuple(int(j) for j in np.flatnonzero(sn[i])),
                ))
        results.append(EpisodeResult(
            outcome=_OUTCOME_CODES[outcome[i]],
            t_event=float(t_event[i]),
            min_separation=float(min_sep[i]),
            final_mode=FsmMode(int(mode[i])),
            decision_gap=float(decision_gap[i]),
            degenerate_contact=bool(degenerate[i]),
            collided_with=scs[i].vehicles[hit[i]][1].name if hit[i] >= 0 else None,
            trajectory=traj,
        ))
    return results
