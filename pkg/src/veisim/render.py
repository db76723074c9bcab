"""Bird's-eye SVG figures: world frames, frame strips and sweep outcome bars.

Figures are drawn with matplotlib's object API (no pyplot state) and saved
with a fixed hash salt and no date stamp, so the same input always yields
the same bytes. World frames use a fixed scale of ``px_per_m`` with North up.
Each drawn agent carries an SVG id (``vehicle-<name>``, ``escooter``, ``fov``,
``destination``); strips prefix ids with ``f<index>-``.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass
from typing import Sequence

import matplotlib
import numpy as np
from matplotlib.backends.backend_svg import FigureCanvasSVG
from matplotlib.figure import Figure
from matplotlib.patches import Circle, Polygon, Rectangle, Wedge

from .escooter import EscooterParams, EscooterState, current_target, fov_direction
from .geom2d import rect_corners
from .simulation import EpisodeResult, MapKind, Outcome, Scenario
from .vehicle import VehicleSpec, VehicleState, footprint

_SVG_RC = {"svg.hashsalt": "veisim", "svg.fonttype": "path", "font.size": 10.0}


@dataclass(frozen=True)
class RenderStyle:
    px_per_m: float = 10.0
    margin_m: float = 4.0
    road_color: str = "#d9d9d9"
    background: str = "#f4f1e8"
    lane_color: str = "#ffffff"
    center_color: str = "#c9a400"
    vehicle_color: str = "#f2c94c"
    vehicle_edge: str = "#6b5200"
    perceived_edge: str = "#d62728"
    escooter_color: str = "#d62728"
    fov_alpha: float = 0.25
    destination_color: str = "#1f4fbf"
    collision_color: str = "#000000"
    label_size: float = 12.0


@dataclass(frozen=True)
class WorldSnapshot:
    t: float
    map_kind: MapKind
    lane_width: float = 4.0
    vehicles: tuple[tuple[VehicleState, VehicleSpec], ...] = ()
    escooter: EscooterState | None = None
    body_radius: float = 0.4
    destination: tuple[float, float] | None = None
    fov_heading: float | None = None
    fov_radius: float = 10.0
    fov_angle: float = 120.0
    perceived: tuple[int, ...] = ()
    collided: bool = False


def snapshot(sc: Scenario, frame, collided: bool = False) -> WorldSnapshot:
    """Snapshot of ``sc`` at a logged trajectory frame."""
    esc = frame.escooter
    target = current_target(esc.mode, np.array(sc.decision_point), np.array(sc.destination))
    u = fov_direction(esc.pos, esc.vel, target)
    p: EscooterParams = sc.escooter_params
    return WorldSnapshot(
        t=frame.t,
        map_kind=sc.map_kind,
        lane_width=sc.lane_width,
        vehicles=tuple((s, spec) for s, (_, spec) in zip(frame.vehicles, sc.vehicles)),
        escooter=esc,
        body_radius=p.body_radius,
        destination=sc.destination,
        fov_heading=float(math.atan2(u[1], u[0])),
        fov_radius=p.fov_radius,
        fov_angle=p.fov_angle,
        perceived=frame.perceived,
        collided=collided,
    )


def world_extent(snaps: Sequence[WorldSnapshot], style: RenderStyle = RenderStyle()):
    """Axis limits covering the road core and every drawn object."""
    half = 2 * max(s.lane_width for s in snaps) if snaps else 8.0
    xs, ys = [-half - 10.0, half + 10.0], [-half - 10.0, half + 10.0]
    for s in snaps:
        for state, spec in s.vehicles:
            c = rect_corners(footprint(state, spec))
            xs += [float(c[:, 0].min()), float(c[:, 0].max())]
            ys += [float(c[:, 1].min()), float(c[:, 1].max())]
        if s.escooter is not None:
            r = s.fov_radius if s.fov_heading is not None else s.body_radius
            xs += [float(s.escooter.pos[0]) - r, float(s.escooter.pos[0]) + r]
            ys += [float(s.escooter.pos[1]) - r, float(s.escooter.pos[1]) + r]
        if s.destination is not None:
            xs.append(s.destination[0])
            ys.append(s.destination[1])
    m = style.margin_m
    return (math.floor(min(xs) - m), math.ceil(max(xs) + m), math.floor(min(ys) - m), math.ceil(max(ys) + m))


def _draw_roads(ax, snap: WorldSnapshot, extent, style: RenderStyle, gid: str):
    x0, x1, y0, y1 = extent
    L = snap.lane_width
    half = 2 * L
    kw = dict(zorder=1)
    bands = [Rectangle((-half, y0), 2 * half, y1 - y0, facecolor=style.road_color, edgecolor="none", **kw)]
    if snap.map_kind is MapKind.INTERSECTION:
        bands.append(Rectangle((x0, -half), x1 - x0, 2 * half, facecolor=style.road_color, edgecolor="none", **kw))
    for b in bands:
        b.set_gid(f"{gid}road-{'ns' if b is bands[0] else 'ew'}")
        ax.add_patch(b)

    def lines(vertical: bool):
        lo, hi = (y0, y1) if vertical else (x0, x1)
        # Lane markings stop at the junction box.
        spans = [(lo, -half), (half, hi)] if snap.map_kind is MapKind.INTERSECTION else [(lo, hi)]
        for off, style_kw in ((-half, dict(color="#ffffff", lw=1.5, ls="-")),
                              (half, dict(color="#ffffff", lw=1.5, ls="-")),
                              (-L, dict(color=style.lane_color, lw=1.0, ls=(0, (6, 6)))),
                              (L, dict(color=style.lane_color, lw=1.0, ls=(0, (6, 6)))),
                              (0.0, dict(color=style.center_color, lw=1.5, ls="-"))):
            for a, b in spans:
                if vertical:
                    ax.plot([off, off], [a, b], zorder=2, **style_kw)
                else:
                    ax.plot([a, b], [off, off], zorder=2, **style_kw)

    lines(vertical=True)
    if snap.map_kind is MapKind.INTERSECTION:
        lines(vertical=False)


def _draw_world(ax, snap: WorldSnapshot, extent, style: RenderStyle, gid: str = ""):
    ax.set_facecolor(style.background)
    _draw_roads(ax, snap, extent, style, gid)
    for j, (state, spec) in enumerate(snap.vehicles):
        seen = j in snap.perceived
        poly = Polygon(rect_corners(footprint(state, spec)), closed=True, facecolor=style.vehicle_color,
                       edgecolor=style.perceived_edge if seen else style.vehicle_edge,
                       lw=1.5 if seen else 1.0, zorder=4)
        poly.set_gid(f"{gid}vehicle-{spec.name}")
        ax.add_patch(poly)
    if snap.destination is not None:
        (star,) = ax.plot([snap.destination[0]], [snap.destination[1]], marker="*", ms=16,
                          color=style.destination_color, ls="none", zorder=6)
        star.set_gid(f"{gid}destination")
    if snap.escooter is not None:
        x, y = float(snap.escooter.pos[0]), float(snap.escooter.pos[1])
        if snap.fov_heading is not None:
            h = math.degrees(snap.fov_heading)
            wedge = Wedge((x, y), snap.fov_radius, h - snap.fov_angle / 2, h + snap.fov_angle / 2,
                          facecolor=style.escooter_color, alpha=style.fov_alpha, edgecolor="none", zorder=3)
            wedge.set_gid(f"{gid}fov")
            ax.add_patch(wedge)
        dot = Circle((x, y), max(snap.body_radius, 0.6), facecolor=style.escooter_color,
                     edgecolor="none", zorder=7)
        dot.set_gid(f"{gid}escooter")
        ax.add_patch(dot)
        if snap.collided:
            (mark,) = ax.plot([x], [y], marker="X", ms=14, color=style.collision_color,
                              markeredgecolor="white", ls="none", zorder=8)
            mark.set_gid(f"{gid}collision")
    label = f"t={snap.t:.1f}s"
    if snap.escooter is not None:
        label += f"  {snap.escooter.mode.name.lower()}"
    txt = ax.text(0.02, 0.98, label, transform=ax.transAxes, va="top", ha="left",
                  fontsize=style.label_size, zorder=9)
    txt.set_gid(f"{gid}timestamp")
    x0, x1, y0, y1 = extent
    ax.set_xlim(x0, x1)
    ax.set_ylim(y0, y1)
    ax.set_aspect("equal")
    ax.set_xticks([])
    ax.set_yticks([])


def _to_svg(fig: Figure) -> str:
    buf = io.StringIO()
    FigureCanvasSVG(fig)
    fig.savefig(buf, format="svg", metadata={"Date": None, "Creator": None}, facecolor=fig.get_facecolor())
    return buf.getvalue()


def _world_figure(snaps: Sequence[WorldSnapshot], style: RenderStyle, extent=None) -> str:
    if extent is None:
        extent = world_extent(snaps, style)
    x0, x1, y0, y1 = extent
    n = len(snaps)
    w_in = (x1 - x0) * style.px_per_m / 72.0
    h_in = (y1 - y0) * style.px_per_m / 72.0
    with matplotlib.rc_context(_SVG_RC):
        fig = Figure(figsize=(w_in * n, h_in), dpi=72)
        for i, snap in enumerate(snaps):
            ax = fig.add_axes((i / n, 0.0, 1.0 / n, 1.0))
            ax.set_gid(f"frame-{i}")
            _draw_world(ax, snap, extent, style, gid=f"f{i}-" if n > 1 else "")
        return _to_svg(fig)


def render_frame(snap: WorldSnapshot, style: RenderStyle | None = None) -> str:
    """One world view as an SVG document."""
    return _world_figure([snap], style or RenderStyle())


def nearest_frame(result: EpisodeResult, t: float) -> int:
    traj = result.trajectory
    if not traj:
        raise ValueError("episode has no recorded trajectory")
    times = np.array([f.t for f in traj])
    step = times[1] - times[0] if len(times) > 1 else 0.0
    if t < times[0] - step / 2 - 1e-9 or t > times[-1] + step / 2 + 1e-9:
        raise ValueError(f"requested time {t} s is outside the logged range [{times[0]:g}, {times[-1]:g}] s")
    return int(np.argmin(np.abs(times - t)))


def episode_snapshot(sc: Scenario, result: EpisodeResult, index: int) -> WorldSnapshot:
    last = index == len(result.trajectory) - 1
    return snapshot(sc, result.trajectory[index], collided=last and result.outcome is Outcome.COLLISION)


def render_strip(sc: Scenario, result: EpisodeResult, times: Sequence[float],
                 style: RenderStyle | None = None) -> str:
    """Frames nearest to each requested time, side by side, sharing one extent."""
    if not times:
        raise ValueError("need at least one time")
    style = style or RenderStyle()
    snaps = [episode_snapshot(sc, result, nearest_frame(result, t)) for t in times]
    return _world_figure(snaps, style)


def render_outcome_histogram(sweep) -> str:
    """Grouped bars of outcome counts per use case and behavior type."""
    cases = sweep.by_case()
    labels = [f"{case}\n{behavior}" for case, behavior in cases]
    outcomes = [("collisions", "#d62728"), ("reached", "#2ca02c"), ("timeouts", "#7f7f7f")]
    x = np.arange(len(labels))
    width = 0.26
    with matplotlib.rc_context(_SVG_RC):
        fig = Figure(figsize=(max(6.0, 1.8 * len(labels)), 4.5), dpi=72)
        ax = fig.add_subplot(1, 1, 1)
        for k, (name, color) in enumerate(outcomes):
            counts = [getattr(a, name) for a in cases.values()]
            bars = ax.bar(x + (k - 1) * width, counts, width, label=name, color=color)
            for i, patch in enumerate(bars.patches):
                patch.set_gid(f"bars-{name}-{i}")
        for xi, a in zip(x, cases.values()):
            ax.annotate(f"{a.collision_rate:.2f}%", (xi - width, a.collisions), ha="center", va="bottom",
                        fontsize=8, xytext=(0, 2), textcoords="offset points")
        ax.set_xticks(x, labels, fontsize=8)
        ax.set_ylabel("episodes")
        ax.legend(frameon=False)
        for side in ("top", "right"):
            ax.spines[side].set_visible(False)
        fig.tight_layout()
        return _to_svg(fig)
