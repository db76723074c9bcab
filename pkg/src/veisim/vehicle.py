"""Vehicles: kinematic bicycle model driven along fixed constant-speed paths."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .geom2d import OrientedRect, vec2, wrap_angle


class InvalidSteerError(ValueError):
    pass


class Role(str, enum.Enum):
    PARKED = "parked"
    FOLLOWER = "follower"
    CROSSING = "crossing"
    PASSING = "passing"


@dataclass(frozen=True)
class VehicleState:
    x: float
    y: float
    psi: float
    v: float

    def __post_init__(self):
        if np.any(np.asarray(self.v) < 0):
            raise ValueError(f"vehicle speed must be >= 0, got {self.v!r}")


@dataclass(frozen=True)
class VehicleSpec:
    name: str = "veh"
    role: Role = Role.PARKED
    hazard: bool = False
    length: float = 4.6
    width: float = 1.8
    lf: float = 1.25
    lr: float = 1.25

    def __post_init__(self):
        object.__setattr__(self, "role", Role(self.role))
        if not (self.width > 0 and self.lf > 0 and self.lr > 0 and self.length > self.lf + self.lr):
            raise ValueError(
                f"vehicle {self.name!r}: need width > 0 and length > lf + lr > 0 "
                f"(length={self.length}, width={self.width}, lf={self.lf}, lr={self.lr})"
            )

    @property
    def moving(self) -> bool:
        return self.role is not Role.PARKED


def bicycle_step(s: VehicleState, accel, steer, lf, lr, dt) -> VehicleState:
    """One explicit Euler step of the kinematic bicycle model (CG reference point)."""
    steer = np.asarray(steer, float)
    if np.any(np.abs(steer) >= np.pi / 2):
        raise InvalidSteerError(f"steering angle must satisfy |steer| < pi/2, got {steer!r}")
    if np.any(np.asarray(dt) <= 0):
        raise ValueError("dt must be > 0")
    beta = np.arctan(lr / (lf + lr) * np.tan(steer))
    x = s.x + s.v * np.cos(s.psi + beta) * dt
    y = s.y + s.v * np.sin(s.psi + beta) * dt
    psi = s.psi + (s.v / lr) * np.sin(beta) * dt
    # Only re-wrap when needed so a constant in-range heading stays bit-identical.
    psi = np.where(np.abs(psi) > np.pi, wrap_angle(psi), psi)
    if psi.ndim == 0:
        psi = float(psi)
    v = np.maximum(s.v + accel * dt, 0.0)
    return VehicleState(x, y, psi, v)


def constant_speed_controller(s: VehicleState):
    """Zero acceleration and zero steering: hold the initial speed and heading."""
    return np.zeros_like(s.v, dtype=float), np.zeros_like(s.v, dtype=float)


def footprint(s: VehicleState, spec: VehicleSpec) -> OrientedRect:
    return OrientedRect(vec2(s.x, s.y), wrap_angle(s.psi), spec.length, spec.width)
