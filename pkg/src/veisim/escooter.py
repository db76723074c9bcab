"""E-scooter agent: social-force dynamics, sector perception and the
approach/decide/cross state machine.

All force and kinematics helpers accept single vectors or stacked batches
(trailing axis of 2).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace

import numpy as np

from .geom2d import (
    OrientedRect,
    Sector,
    closest_point_on_rect,
    norm,
    sector_contains_rect,
    vec2,
)

# Below this speed the rider looks at the current target instead of along the velocity.
FOV_SPEED_EPS = 0.1
DECISION_TOLERANCE = 0.5


class FsmMode(enum.IntEnum):
    APPROACH = 0
    WAIT = 1
    MOVE = 2
    DONE = 3


class BehaviorType(str, enum.Enum):
    AGGRESSIVE = "aggressive"
    NORMAL = "normal"


@dataclass(frozen=True)
class EscooterParams:
    mass: float = 90.0
    k_des: float = 60.0
    v0: float = 100.0
    sigma_des: float = 1.0
    A_veh: float = 100.0
    b_veh: float = 2.0
    fov_radius: float = 10.0
    fov_angle: float = 120.0  # degrees, full opening
    # Minimum gap (m) that commits the rider to crossing.
    crossing_threshold: float = 15.0
    v_max: float = 5.0
    body_radius: float = 0.4

    def __post_init__(self):
        for name in ("mass", "k_des", "v0", "sigma_des", "A_veh", "b_veh",
                     "fov_radius", "fov_angle", "crossing_threshold", "v_max", "body_radius"):
            value = getattr(self, name)
            if not (np.isfinite(value) or (name == "v_max" and value == np.inf)) or value <= 0:
                raise ValueError(f"escooter parameter {name!r} must be finite and > 0, got {value!r}")
        if self.fov_angle > 360.0:
            raise ValueError(f"fov_angle must lie in (0, 360], got {self.fov_angle!r}")

    @property
    def fov_half_angle(self) -> float:
        return np.deg2rad(self.fov_angle) / 2.0


@dataclass(frozen=True)
class EscooterState:
    pos: np.ndarray
    vel: np.ndarray = field(default_factory=lambda: np.zeros(2))
    mode: FsmMode = FsmMode.APPROACH
    # Gap latched at the single crossing decision; NaN until decided.
    decision_gap: float = np.nan

    def __post_init__(self):
        object.__setattr__(self, "pos", np.asarray(self.pos, float))
        object.__setattr__(self, "vel", np.asarray(self.vel, float))


def _clamp_speed(v: np.ndarray, v_max) -> np.ndarray:
    speed = norm(v)
    over = speed > v_max
    scale = np.where(over, v_max / np.where(over, speed, 1.0), 1.0)
    return v * scale[..., None]


def desired_velocity(s_esc, s_des, v0, sigma_des, v_max=np.inf) -> np.ndarray:
    """v0 * (s_des - s_esc) / (|s_des - s_esc|^2 + sigma^2), capped at ``v_max``."""
    d = np.asarray(s_des, float) - np.asarray(s_esc, float)
    denom = d[..., 0] * d[..., 0] + d[..., 1] * d[..., 1] + np.asarray(sigma_des, float) ** 2
    v = d * (np.asarray(v0, float) / denom)[..., None]
    return _clamp_speed(v, np.asarray(v_max, float))


def destination_force(v_des, v_esc, k_des) -> np.ndarray:
    return np.asarray(k_des, float)[..., None] * (np.asarray(v_des, float) - np.asarray(v_esc, float))


def vehicle_repulsion(s_esc, influence_points, A_veh, b_veh, mask=None):
    """Summed exponential push away from each influence point.

    ``influence_points`` has shape (..., n, 2); ``mask`` (..., n) selects the
    points that contribute. A point coinciding with the e-scooter has no
    direction: its term is dropped and reported in the returned
    ``degenerate`` flag.

    Returns ``(force, degenerate)``.
    """
    s_esc = np.asarray(s_esc, float)
    pts = np.asarray(influence_points, float).reshape(s_esc.shape[:-1] + (-1, 2))
    n = pts.shape[-2]
    if mask is None:
        mask = np.ones(pts.shape[:-1], bool)
    A = np.asarray(A_veh, float)
    b = np.asarray(b_veh, float)
    force = np.zeros(np.broadcast_shapes(s_esc.shape, pts.shape[:-2] + (2,)))
    degenerate = np.zeros(force.shape[:-1], bool)
    # Explicit loop keeps the summation order fixed for every batch size.
    for i in range(n):
        d = s_esc - pts[..., i, :]
        dist = norm(d)
        active = mask[..., i]
        zero = active & (dist == 0.0)
        degenerate = degenerate | zero
        use = active & ~zero
        mag = np.where(use, A * np.exp(-b * dist) / np.where(use, dist, 1.0), 0.0)
        force = force + d * mag[..., None]
    if force.ndim == 1:
        degenerate = bool(degenerate)
    return force, degenerate


def total_force(f_des, f_rep) -> np.ndarray:
    return np.asarray(f_des, float) + np.asarray(f_rep, float)


def fov_direction(pos, vel, target) -> np.ndarray:
    """Unit viewing direction: along the velocity when moving, else toward ``target``."""
    pos = np.asarray(pos, float)
    vel = np.asarray(vel, float)
    to_target = np.asarray(target, float) - pos
    speed = norm(vel)
    moving = speed > FOV_SPEED_EPS
    d = np.where(moving[..., None], vel, to_target)
    n = norm(d)
    ok = n > 0
    unit = d / np.where(ok, n, 1.0)[..., None]
    return np.where(ok[..., None], unit, np.array([1.0, 0.0]))


def current_target(mode, decision_point, destination) -> np.ndarray:
    approach = np.asarray(mode) == FsmMode.APPROACH
    return np.where(approach[..., None], decision_point, destination)


def fov_sector(state: EscooterState, params: EscooterParams, target) -> Sector:
    u = fov_direction(state.pos, state.vel, target)
    return Sector(state.pos, np.arctan2(u[..., 1], u[..., 0]), params.fov_radius, params.fov_half_angle)


def perceive(state: EscooterState, params: EscooterParams, vehicles: list[OrientedRect],
             target=None) -> list[np.ndarray]:
    """Influence points of the vehicles the rider can see.

    ``target`` orients the field of view when the e-scooter is (nearly) at
    rest; it defaults to a point straight ahead along +x.
    """
    if target is None:
        target = state.pos + vec2(1.0, 0.0)
    sector = fov_sector(state, params, target)
    return [closest_point_on_rect(state.pos, r) for r in vehicles if sector_contains_rect(sector, r)]


def fsm_step(mode, gap, threshold, at_decision_point, at_destination):
    """Advance the rider state machine by one tick.

    Approach decides once on reaching the decision point: a gap of at least
    ``threshold`` means Move, anything smaller means Wait. Wait never leaves.
    Move ends in Done at the destination.
    """
    mode_arr = np.asarray(mode)
    gap = np.asarray(gap, float)
    if np.any(gap < 0):
        raise ValueError("gap must be >= 0")
    decided = np.where(gap >= threshold, FsmMode.MOVE, FsmMode.WAIT)
    out = np.where((mode_arr == FsmMode.APPROACH) & at_decision_point, decided, mode_arr)
    out = np.where((mode_arr == FsmMode.MOVE) & at_destination, FsmMode.DONE, out)
    return FsmMode(int(out)) if out.ndim == 0 else out


def integrate_escooter(state: EscooterState, f_total, mass, dt, v_max) -> EscooterState:
    """Semi-implicit Euler step; Wait and Done hold the rider still."""
    if np.any(np.asarray(dt) <= 0) or np.any(np.asarray(mass) <= 0):
        raise ValueError("dt and mass must be > 0")
    dt = np.asarray(dt, float)[..., None]
    vel = state.vel + (np.asarray(f_total, float) / np.asarray(mass, float)[..., None]) * dt
    vel = _clamp_speed(vel, np.asarray(v_max, float))
    pos = state.pos + vel * dt
    mode = np.asarray(state.mode)
    hold = ((mode == FsmMode.WAIT) | (mode == FsmMode.DONE))[..., None]
    vel = np.where(hold, 0.0, vel)
    pos = np.where(hold, state.pos, pos)
    return replace(state, pos=pos, vel=vel)
