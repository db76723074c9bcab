import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from veisim.geom2d import (
    OrientedRect,
    Sector,
    closest_point_on_rect,
    norm,
    point_in_rect,
    rect_corners,
    sector_contains_rect,
    vec2,
    wrap_angle,
)

coord = st.floats(-50, 50, allow_nan=False)
size = st.floats(0.2, 10)
angle = st.floats(-math.pi, math.pi)


def test_closest_point_examples():
    r = OrientedRect(vec2(0, 0), 0.0, 4.0, 2.0)
    assert np.array_equal(closest_point_on_rect(vec2(0, 0), r), [0.0, 0.0])
    assert np.allclose(closest_point_on_rect(vec2(10, 0), r), [2.0, 0.0])
    turned = OrientedRect(vec2(0, 0), math.pi / 2, 4.0, 2.0)
    assert np.allclose(closest_point_on_rect(vec2(0, 10), turned), [0.0, 2.0], atol=1e-12)


def test_interior_point_maps_to_itself_exactly():
    r = OrientedRect(vec2(1.3, -2.1), 0.7, 4.6, 1.8)
    p = vec2(1.5, -2.0)
    assert np.array_equal(closest_point_on_rect(p, r), p)


def _boundary_samples(r: OrientedRect, n: int, rng) -> np.ndarray:
    c = rect_corners(r)
    edge = rng.integers(0, 4, n)
    t = rng.random(n)[:, None]
    return c[edge] + t * (c[(edge + 1) % 4] - c[edge])


@pytest.mark.parametrize("seed", range(20))
def test_closest_point_beats_boundary_samples(seed):
    rng = np.random.default_rng(seed)
    r = OrientedRect(rng.uniform(-5, 5, 2), rng.uniform(-4, 4), rng.uniform(0.5, 6), rng.uniform(0.5, 6))
    p = rng.uniform(-15, 15, 2)
    q = closest_point_on_rect(p, r)
    assert point_in_rect(q, r, inflate=1e-9)
    d = norm(p - q)
    samples = _boundary_samples(r, 1000, rng)
    assert np.all(d <= norm(p - samples) + 1e-12)


def _half_plane_inside(p, r: OrientedRect) -> bool:
    c = rect_corners(r)
    for i in range(4):
        a, b = c[i], c[(i + 1) % 4]
        cross = (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0])
        if cross < 0:
            return False
    return True


def test_point_in_rect_examples():
    r = OrientedRect(vec2(0, 0), 0.0, 4.6, 1.8)
    assert point_in_rect(vec2(0, 0), r)
    assert point_in_rect(vec2(2.7, 0), r, inflate=0.4)
    assert not point_in_rect(vec2(2.71, 0), r, inflate=0.4)
    with pytest.raises(ValueError):
        point_in_rect(vec2(0, 0), r, inflate=-1.0)


def test_point_in_rect_matches_half_plane_oracle():
    rng = np.random.default_rng(7)
    checked = 0
    for _ in range(3000):
        r = OrientedRect(rng.uniform(-5, 5, 2), rng.uniform(-4, 4), rng.uniform(0.5, 6), rng.uniform(0.5, 6))
        p = rng.uniform(-8, 8, 2)
        # Points within rounding distance of an edge are ambiguous.
        if _near_edge(p, r):
            continue
        assert point_in_rect(p, r) == _half_plane_inside(p, r)
        checked += 1
    assert checked > 2900


def _near_edge(p, r, eps=1e-9):
    hl, hw = r.half_extents
    d = p - r.center
    u = d[0] * math.cos(r.heading) + d[1] * math.sin(r.heading)
    w = -d[0] * math.sin(r.heading) + d[1] * math.cos(r.heading)
    return abs(abs(u) - hl) < eps or abs(abs(w) - hw) < eps


def test_sector_examples():
    s = Sector(vec2(0, 0), math.pi / 2, 10.0, math.radians(60))
    assert sector_contains_rect(s, OrientedRect(vec2(0, 5), 0.0, 4.6, 1.8))
    assert not sector_contains_rect(s, OrientedRect(vec2(0, 30), 0.0, 4.0, 2.0))
    assert not sector_contains_rect(s, OrientedRect(vec2(5, -5), 0.0, 4.0, 2.0))


def test_full_circle_sector_sees_behind():
    s = Sector(vec2(0, 0), 0.0, 10.0, math.pi)
    assert sector_contains_rect(s, OrientedRect(vec2(-5, 0), 0.0, 2.0, 1.0))


@settings(max_examples=300, deadline=None)
@given(coord, coord, angle, st.floats(1, 30), st.floats(0.1, math.pi),
       coord, coord, angle, size, size, angle, coord, coord)
def test_sector_rigid_transform_invariance(ax, ay, ah, rad, half, cx, cy, rh, ln, wd, rot, tx, ty):
    s = Sector(vec2(ax, ay), ah, rad, half)
    r = OrientedRect(vec2(cx, cy), rh, ln, wd)
    c, sn = math.cos(rot), math.sin(rot)

    def move(p):
        return vec2(c * p[0] - sn * p[1] + tx, sn * p[0] + c * p[1] + ty)

    s2 = Sector(move(s.apex), ah + rot, rad, half)
    r2 = OrientedRect(move(r.center), rh + rot, ln, wd)
    # Skip configurations where a sample point sits on the sector boundary or at the apex.
    pts = np.concatenate([rect_corners(r), r.center[None]])
    d = pts - s.apex
    dist = norm(d)
    ang = np.abs(np.array([wrap_angle(math.atan2(v[1], v[0]) - ah) for v in d]))
    if np.any(np.abs(dist - rad) < 1e-6) or np.any(np.abs(ang - half) < 1e-6) or np.any(dist < 1e-6):
        return
    assert sector_contains_rect(s, r) == sector_contains_rect(s2, r2)


def test_invalid_shapes_rejected():
    with pytest.raises(ValueError):
        OrientedRect(vec2(0, 0), 0.0, 0.0, 1.0)
    with pytest.raises(ValueError):
        Sector(vec2(0, 0), 0.0, 10.0, 4.0)
    with pytest.raises(ValueError):
        Sector(vec2(0, 0), 0.0, -1.0, 1.0)


def test_heading_is_normalized():
    r = OrientedRect(vec2(0, 0), 3 * math.pi, 2.0, 1.0)
    assert -math.pi < r.heading <= math.pi
    assert wrap_angle(-math.pi) == pytest.approx(math.pi)


def test_batched_calls_match_single_calls():
    rng = np.random.default_rng(3)
    centers = rng.uniform(-5, 5, (6, 2))
    heads = rng.uniform(-3, 3, 6)
    batch = OrientedRect(centers, heads, 4.6, 1.8)
    p = rng.uniform(-8, 8, (6, 2))
    got = closest_point_on_rect(p, batch)
    for i in range(6):
        one = closest_point_on_rect(p[i], OrientedRect(centers[i], heads[i], 4.6, 1.8))
        assert np.array_equal(got[i], one)
