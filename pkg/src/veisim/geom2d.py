"""Planar geometry on numpy arrays.

Points and vectors are float arrays whose last axis has length 2. Every
function broadcasts over leading axes, so the same code serves a single
query and a batch of lockstep episodes.

Frame convention: heading 0 is +x (East), counterclockwise positive.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "vec2",
    "norm",
    "wrap_angle",
    "unit_from_heading",
    "OrientedRect",
    "Sector",
    "rect_corners",
    "rect_sample_points",
    "closest_point_on_rect",
    "point_in_rect",
    "points_in_sector",
    "sector_contains_rect",
]

BOUNDARY_EPS = 1e-9


def vec2(x, y) -> np.ndarray:
    return np.stack(np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float)), axis=-1)


def norm(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, float)
    return np.sqrt(v[..., 0] * v[..., 0] + v[..., 1] * v[..., 1])


def wrap_angle(a):
    """Map an angle to (-pi, pi]."""
    a = np.asarray(a, float)
    w = np.mod(a + np.pi, 2.0 * np.pi) - np.pi
    w = np.where(w <= -np.pi, w + 2.0 * np.pi, w)
    return w if w.ndim else float(w)


def unit_from_heading(heading) -> np.ndarray:
    heading = np.asarray(heading, float)
    return vec2(np.cos(heading), np.sin(heading))


@dataclass(frozen=True)
class OrientedRect:
    """Rectangle of ``length`` along ``heading`` and ``width`` across it."""

    center: np.ndarray
    heading: np.ndarray | float
    length: np.ndarray | float
    width: np.ndarray | float

    def __post_init__(self):
        center = np.asarray(self.center, float)
        if center.shape[-1:] != (2,):
            raise ValueError(f"center must have a trailing axis of 2, got shape {center.shape}")
        if np.any(~(np.asarray(self.length) > 0)) or np.any(~(np.asarray(self.width) > 0)):
            raise ValueError("rectangle length and width must be > 0")
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "heading", wrap_angle(self.heading))

    @property
    def half_extents(self) -> tuple[np.ndarray, np.ndarray]:
        return 0.5 * np.asarray(self.length, float), 0.5 * np.asarray(self.width, float)


@dataclass(frozen=True)
class Sector:
    """Circular sector: points within ``radius`` of ``apex`` and within
    ``half_angle`` of ``heading``."""

    apex: np.ndarray
    heading: np.ndarray | float
    radius: np.ndarray | float
    half_angle: np.ndarray | float

    def __post_init__(self):
        apex = np.asarray(self.apex, float)
        if apex.shape[-1:] != (2,):
            raise ValueError(f"apex must have a trailing axis of 2, got shape {apex.shape}")
        if np.any(~(np.asarray(self.radius) > 0)):
            raise ValueError("sector radius must be > 0")
        half = np.asarray(self.half_angle, float)
        if np.any(~((half > 0) & (half <= np.pi))):
            raise ValueError("sector half_angle must lie in (0, pi]")
        object.__setattr__(self, "apex", apex)
        object.__setattr__(self, "heading", wrap_angle(self.heading))


def _to_local(p, r: OrientedRect):
    c, s = np.cos(r.heading), np.sin(r.heading)
    d = np.asarray(p, float) - r.center
    u = d[..., 0] * c + d[..., 1] * s
    w = -d[..., 0] * s + d[..., 1] * c
    return u, w, c, s


def rect_corners(r: OrientedRect) -> np.ndarray:
    """Corners in counterclockwise order starting front-left; shape (..., 4, 2)."""
    hl, hw = r.half_extents
    c, s = np.cos(r.heading), np.sin(r.heading)
    su = np.array([1.0, -1.0, -1.0, 1.0])
    sw = np.array([1.0, 1.0, -1.0, -1.0])
    u = np.expand_dims(hl, -1) * su
    w = np.expand_dims(hw, -1) * sw
    c = np.expand_dims(c, -1)
    s = np.expand_dims(s, -1)
    x = r.center[..., 0:1] + u * c - w * s
    y = r.center[..., 1:2] + u * s + w * c
    return np.stack([x, y], axis=-1)


def rect_sample_points(r: OrientedRect) -> np.ndarray:
    """The four corners followed by the center; shape (..., 5, 2)."""
    return np.concatenate([rect_corners(r), r.center[..., None, :]], axis=-2)


def closest_point_on_rect(p, r: OrientedRect) -> np.ndarray:
    """Point of the closed rectangle nearest to ``p``. Interior points map to themselves."""
    p = np.asarray(p, float)
    hl, hw = r.half_extents
    u, w, c, s = _to_local(p, r)
    uc = np.clip(u, -hl, hl)
    wc = np.clip(w, -hw, hw)
    q = vec2(r.center[..., 0] + uc * c - wc * s, r.center[..., 1] + uc * s + wc * c)
    inside = (uc == u) & (wc == w)
    return np.where(inside[..., None], np.broadcast_to(p, q.shape), q)


def point_in_rect(p, r: OrientedRect, inflate=0.0):
    """True where ``p`` lies in ``r`` grown by ``inflate`` on every side (boundary inclusive)."""
    inflate = np.asarray(inflate, float)
    if np.any(inflate < 0):
        raise ValueError("inflate must be >= 0")
    hl, hw = r.half_extents
    u, w, _, _ = _to_local(p, r)
    # Absorb rounding in hl + inflate so exact boundary points count as inside.
    inside = (np.abs(u) <= hl + inflate + BOUNDARY_EPS) & (np.abs(w) <= hw + inflate + BOUNDARY_EPS)
    return inside if inside.ndim else bool(inside)


def points_in_sector(points, apex, direction, radius, cos_half):
    """Sector membership using a unit ``direction`` and precomputed ``cos(half_angle)``.

    This is the trig-free form the simulation loop uses; ``points`` broadcast
    against ``apex``.
    """
    d = np.asarray(points, float) - apex
    dist = norm(d)
    along = d[..., 0] * direction[..., 0] + d[..., 1] * direction[..., 1]
    return (dist <= radius) & ((dist == 0.0) | (along >= dist * cos_half))


def sector_contains_rect(s: Sector, r: OrientedRect):
    """True where any corner or the center of ``r`` falls inside ``s``."""
    pts = rect_sample_points(r)
    apex = s.apex[..., None, :]
    direction = unit_from_heading(s.heading)[..., None, :]
    radius = np.asarray(s.radius, float)[..., None]
    cos_half = np.cos(np.asarray(s.half_angle, float))[..., None]
    hit = np.any(points_in_sector(pts, apex, direction, radius, cos_half), axis=-1)
    return hit if hit.ndim else bool(hit)
