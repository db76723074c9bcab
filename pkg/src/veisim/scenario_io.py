"""Scenario documents (YAML) and parameter-grid expansion.

Scenario document layout (units fixed: m, m/s, s, deg)::

    use_case: one_vehicle_crossing      # optional label
    map: intersection                   # intersection | straight_road
    lane_width: 4.0
    dt: 0.1
    t_max: 30.0
    behavior: aggressive                # aggressive | normal
    thresholds: {aggressive: 15.0, normal: 200.0}   # optional
    escooter:
      init: [4.0, -30.0]
      destination: [-15.0, 15.0]
      decision_point: [4.0, -9.0]
      params: {fov_radius: 10.0, fov_angle: 120.0}  # optional overrides
    vehicles:
      - {name: veh0, role: parked, x: 6.0, y: -12.0, heading: 90.0}
      - {name: veh2, role: crossing, hazard: true, x: -75.0, y: -2.0, heading: 0.0, speed: 10.0}

Grid document::

    symbols:
      y_veh0: [-16.0, -11.0, 5.0]       # lower, upper, step (upper inclusive)
"""

from __future__ import annotations

import dataclasses
import itertools
import math
from dataclasses import dataclass, replace
from importlib import resources
from pathlib import Path
from typing import Any, Callable, Mapping

import yaml

from .escooter import BehaviorType, EscooterParams
from .simulation import ConfigError, CrossingThresholds, MapKind, Scenario
from .vehicle import Role, VehicleSpec, VehicleState


class ScenarioParseError(ValueError):
    pass


_TOP_KEYS = {"use_case", "map", "lane_width", "dt", "t_max", "behavior", "thresholds", "escooter", "vehicles"}
_ESC_KEYS = {"init", "destination", "decision_point", "params"}
_PARAM_KEYS = {f.name for f in dataclasses.fields(EscooterParams)} - {"crossing_threshold"}
_VEH_KEYS = {"name", "role", "hazard", "x", "y", "heading", "speed", "length", "width", "lf", "lr"}
_VEH_REQUIRED = {"name", "role", "x", "y"}


def _check_keys(where: str, d: Any, allowed: set[str], required: set[str] = frozenset()) -> Mapping:
    if not isinstance(d, Mapping):
        raise ConfigError(f"{where}: expected a mapping, got {type(d).__name__}")
    unknown = sorted(set(d) - allowed)
    if unknown:
        raise ConfigError(f"{where}: unknown key(s) {unknown}")
    missing = sorted(required - set(d))
    if missing:
        raise ConfigError(f"{where}: missing key(s) {missing}")
    return d


def _number(where: str, value) -> float:
    # PyYAML reads exponents without a dot (1e-05) as strings.
    if isinstance(value, str):
        try:
            return float(value)
        except ValueError:
            pass
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{where}: expected a number, got {value!r}")
    return float(value)


def _point(where: str, value) -> tuple[float, float]:
    if not isinstance(value, (list, tuple)) or len(value) != 2:
        raise ConfigError(f"{where}: expected [x, y], got {value!r}")
    return _number(f"{where}[0]", value[0]), _number(f"{where}[1]", value[1])


def _enum(where: str, cls, value):
    try:
        return cls(value)
    except ValueError:
        choices = ", ".join(m.value for m in cls)
        raise ConfigError(f"{where}: {value!r} is not one of {choices}") from None


def parse_document(text: str, source: str = "<string>") -> Any:
    try:
        return yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"{source}:{mark.line + 1}:{mark.column + 1}" if mark else source
        problem = getattr(exc, "problem", None) or str(exc)
        raise ScenarioParseError(f"{where}: {problem}") from exc


def scenario_from_dict(doc: Mapping) -> Scenario:
    doc = _check_keys("scenario", doc, _TOP_KEYS, {"map", "escooter"})
    esc = _check_keys("escooter", doc["escooter"], _ESC_KEYS, {"init", "destination", "decision_point"})
    params = _check_keys("escooter.params", esc.get("params") or {}, _PARAM_KEYS)
    thresholds = _check_keys("thresholds", doc.get("thresholds") or {}, {"aggressive", "normal"})
    vehicles_doc = doc.get("vehicles") or []
    if not isinstance(vehicles_doc, list):
        raise ConfigError("vehicles: expected a list")
    if not vehicles_doc:
        raise ConfigError("vehicles: scenario needs at least one vehicle")

    vehicles = []
    for i, v in enumerate(vehicles_doc):
        where = f"vehicles[{i}]"
        v = _check_keys(where, v, _VEH_KEYS, _VEH_REQUIRED)
        dims = {k: _number(f"{where}.{k}", v[k]) for k in ("length", "width", "lf", "lr") if k in v}
        hazard = v.get("hazard", False)
        if not isinstance(hazard, bool):
            raise ConfigError(f"{where}.hazard: expected true/false, got {hazard!r}")
        try:
            spec = VehicleSpec(name=str(v["name"]), role=_enum(f"{where}.role", Role, v["role"]),
                               hazard=hazard, **dims)
            state = VehicleState(
                x=_number(f"{where}.x", v["x"]),
                y=_number(f"{where}.y", v["y"]),
                psi=math.radians(_number(f"{where}.heading", v.get("heading", 0.0))),
                v=_number(f"{where}.speed", v.get("speed", 0.0)),
            )
        except ValueError as exc:
            raise ConfigError(f"{where}: {exc}") from None
        vehicles.append((state, spec))

    try:
        esc_params = EscooterParams(**{k: _number(f"escooter.params.{k}", val) for k, val in params.items()})
    except ValueError as exc:
        raise ConfigError(f"escooter.params: {exc}") from None

    kwargs = {}
    for key in ("lane_width", "dt", "t_max"):
        if key in doc:
            kwargs[key] = _number(key, doc[key])
    return Scenario(
        map_kind=_enum("map", MapKind, doc["map"]),
        vehicles=tuple(vehicles),
        escooter_init=_point("escooter.init", esc["init"]),
        destination=_point("escooter.destination", esc["destination"]),
        decision_point=_point("escooter.decision_point", esc["decision_point"]),
        escooter_params=esc_params,
        behavior=_enum("behavior", BehaviorType, doc.get("behavior", "aggressive")),
        thresholds=CrossingThresholds(**{k: _number(f"thresholds.{k}", t) for k, t in thresholds.items()}),
        use_case=str(doc.get("use_case", "")),
        **kwargs,
    )


def load_scenario(document: str | Path) -> Scenario:
    """Load a scenario from a path, a builtin name (e.g. ``intersection``) or
    multi-line YAML text."""
    text, source = _read(document, "scenarios")
    return scenario_from_dict(parse_document(text, source))


def _degrees(psi: float) -> float:
    """Degree value that converts back to exactly ``psi`` where one exists."""
    deg = math.degrees(psi)
    for cand in (round(deg, 12), round(deg, 9)):
        if math.radians(cand) == psi:
            return cand
    # radians() is monotone, so walk a few ulps toward the preimage.
    cand = deg
    for _ in range(16):
        r = math.radians(cand)
        if r == psi:
            return cand
        cand = math.nextafter(cand, math.inf if r < psi else -math.inf)
    return deg


def scenario_to_dict(sc: Scenario) -> dict:
    base = EscooterParams()
    params = {f.name: getattr(sc.escooter_params, f.name) for f in dataclasses.fields(EscooterParams)
              if f.name != "crossing_threshold" and getattr(sc.escooter_params, f.name) != getattr(base, f.name)}
    esc = {
        "init": list(sc.escooter_init),
        "destination": list(sc.destination),
        "decision_point": list(sc.decision_point),
    }
    if params:
        esc["params"] = params
    vehicles = []
    default_spec = VehicleSpec()
    for state, spec in sc.vehicles:
        v = {"name": spec.name, "role": spec.role.value}
        if spec.hazard:
            v["hazard"] = True
        v.update(x=float(state.x), y=float(state.y), heading=_degrees(float(state.psi)), speed=float(state.v))
        for k in ("length", "width", "lf", "lr"):
            if getattr(spec, k) != getattr(default_spec, k):
                v[k] = getattr(spec, k)
        vehicles.append(v)
    return {
        "use_case": sc.use_case,
        "map": sc.map_kind.value,
        "lane_width": sc.lane_width,
        "dt": sc.dt,
        "t_max": sc.t_max,
        "behavior": sc.behavior.value,
        "thresholds": {"aggressive": sc.thresholds.aggressive, "normal": sc.thresholds.normal},
        "escooter": esc,
        "vehicles": vehicles,
    }


def dump_scenario(sc: Scenario) -> str:
    return yaml.safe_dump(scenario_to_dict(sc), sort_keys=False, default_flow_style=None)


def _read(document: str | Path, builtin_dir: str) -> tuple[str, str]:
    if isinstance(document, Path):
        return document.read_text(), str(document)
    if "\n" not in document:
        path = Path(document)
        if path.is_file():
            return path.read_text(), str(path)
        name = document if document.endswith(".yaml") else f"{document}.yaml"
        res = resources.files("veisim") / "data" / builtin_dir / name
        if res.is_file():
            return res.read_text(), f"builtin:{builtin_dir}/{name}"
        raise FileNotFoundError(f"no such file or builtin {builtin_dir[:-1]}: {document}")
    return document, "<string>"


def builtin_names(kind: str = "scenarios") -> list[str]:
    root = resources.files("veisim") / "data" / kind
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".yaml"))


# ---------------------------------------------------------------------------
# Parameter grids


@dataclass(frozen=True)
class _Symbol:
    maps: frozenset
    get: Callable[[Scenario], float]
    set: Callable[[Scenario, float], Scenario]
    vehicle: str | None = None


def _vehicle_field(name: str, attr: str):
    def get(sc: Scenario) -> float:
        return float(getattr(sc.vehicle(name)[0], attr))

    def set_(sc: Scenario, value: float) -> Scenario:
        vehicles = tuple(
            (replace(s, **{attr: value}) if sp.name == name else s, sp) for s, sp in sc.vehicles
        )
        return replace(sc, vehicles=vehicles)

    return get, set_


def _point_field(field_name: str, axis: int):
    def get(sc: Scenario) -> float:
        return getattr(sc, field_name)[axis]

    def set_(sc: Scenario, value: float) -> Scenario:
        pt = list(getattr(sc, field_name))
        pt[axis] = value
        return replace(sc, **{field_name: tuple(pt)})

    return get, set_


def _param_field(attr: str):
    def get(sc: Scenario) -> float:
        return getattr(sc.escooter_params, attr)

    def set_(sc: Scenario, value: float) -> Scenario:
        return replace(sc, escooter_params=replace(sc.escooter_params, **{attr: value}))

    return get, set_


_X = frozenset({MapKind.INTERSECTION})
_S = frozenset({MapKind.STRAIGHT_ROAD})
_B = _X | _S

# Sweepable symbols, in expansion (and CSV column) order.
SYMBOLS: dict[str, _Symbol] = {
    "y_veh0": _Symbol(_X, *_vehicle_field("veh0", "y"), vehicle="veh0"),
    "y_veh1": _Symbol(_X, *_vehicle_field("veh1", "y"), vehicle="veh1"),
    "x_veh2_init": _Symbol(_X, *_vehicle_field("veh2", "x"), vehicle="veh2"),
    "y_veh2_init": _Symbol(_S, *_vehicle_field("veh2", "y"), vehicle="veh2"),
    "x_veh3_init": _Symbol(_X, *_vehicle_field("veh3", "x"), vehicle="veh3"),
    "v_veh2": _Symbol(_B, *_vehicle_field("veh2", "v"), vehicle="veh2"),
    "v_veh3": _Symbol(_X, *_vehicle_field("veh3", "v"), vehicle="veh3"),
    "y_esc_init": _Symbol(_B, *_point_field("escooter_init", 1)),
    "x_des": _Symbol(_B, *_point_field("destination", 0)),
    "y_des": _Symbol(_B, *_point_field("destination", 1)),
    "r_fov": _Symbol(_B, *_param_field("fov_radius")),
    "alpha_fov": _Symbol(_B, *_param_field("fov_angle")),
}


def symbol_applicable(sc: Scenario, symbol: str) -> bool:
    sym = SYMBOLS[symbol]
    if sc.map_kind not in sym.maps:
        return False
    return sym.vehicle is None or any(spec.name == sym.vehicle for _, spec in sc.vehicles)


def symbol_value(sc: Scenario, symbol: str) -> float | None:
    """Current value of a sweepable symbol, or None where it does not apply."""
    return SYMBOLS[symbol].get(sc) if symbol_applicable(sc, symbol) else None


@dataclass(frozen=True)
class GridAxis:
    lower: float
    upper: float
    step: float

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.lower, self.upper, self.step)):
            raise ConfigError(f"grid bounds must be finite, got {self}")
        if not self.step > 0:
            raise ConfigError(f"grid step must be > 0, got {self.step}")
        if self.lower > self.upper:
            raise ConfigError(f"grid lower bound {self.lower} exceeds upper bound {self.upper}")

    def values(self) -> list[float]:
        # Tolerance absorbs decimal steps that do not divide the span exactly in binary.
        count = int(math.floor((self.upper - self.lower) / self.step + 1e-9)) + 1
        return [self.lower + i * self.step for i in range(count)]


@dataclass(frozen=True)
class ParameterGrid:
    axes: tuple[tuple[str, GridAxis], ...]

    def __post_init__(self):
        axes = tuple(self.axes.items()) if isinstance(self.axes, Mapping) else tuple(self.axes)
        for name, _ in axes:
            if name not in SYMBOLS:
                raise ConfigError(f"grid: unknown symbol {name!r}; sweepable symbols are {list(SYMBOLS)}")
        order = list(SYMBOLS)
        object.__setattr__(self, "axes", tuple(sorted(axes, key=lambda kv: order.index(kv[0]))))

    @property
    def symbols(self) -> list[str]:
        return [name for name, _ in self.axes]

    @property
    def cardinality(self) -> int:
        return math.prod(len(axis.values()) for _, axis in self.axes)


def grid_from_dict(doc: Mapping) -> ParameterGrid:
    doc = _check_keys("grid", doc, {"symbols"}, {"symbols"})
    symbols = doc["symbols"]
    if not isinstance(symbols, Mapping) or not symbols:
        raise ConfigError("grid.symbols: expected a non-empty mapping")
    axes = {}
    for name, spec in symbols.items():
        where = f"grid.symbols.{name}"
        if isinstance(spec, Mapping):
            spec = _check_keys(where, spec, {"lower", "upper", "step"}, {"lower", "upper", "step"})
            spec = [spec["lower"], spec["upper"], spec["step"]]
        if not isinstance(spec, (list, tuple)) or len(spec) != 3:
            raise ConfigError(f"{where}: expected [lower, upper, step], got {spec!r}")
        axes[name] = GridAxis(*(_number(where, v) for v in spec))
    return ParameterGrid(axes)


def load_grid(document: str | Path) -> ParameterGrid:
    text, source = _read(document, "grids")
    return grid_from_dict(parse_document(text, source))


def expand_grid(base: Scenario, grid: ParameterGrid) -> list[Scenario]:
    """Cartesian product of the grid axes applied to ``base``.

    Symbols vary in ``SYMBOLS`` order with the last symbol varying fastest;
    values ascend along each axis.
    """
    for name in grid.symbols:
        if not symbol_applicable(base, name):
            raise ConfigError(
                f"grid symbol {name!r} does not apply to a {base.map_kind.value} scenario "
                f"with vehicles {[spec.name for _, spec in base.vehicles]}"
            )
    names = grid.symbols
    out = []
    for combo in itertools.product(*(axis.values() for _, axis in grid.axes)):
        sc = base
        for name, value in zip(names, combo):
            sc = SYMBOLS[name].set(sc, value)
        out.append(sc)
    return out
