import math
from dataclasses import replace

import numpy as np
import pytest

from veisim import simulate
from veisim.escooter import EscooterState, FsmMode
from veisim.geom2d import OrientedRect, vec2
from veisim.scenario_io import expand_grid, load_grid, load_scenario
from veisim.simulation import (
    ConfigError,
    Outcome,
    Scenario,
    detect_collision,
    gap_distance,
    run_episode,
)
from veisim.vehicle import Role, VehicleSpec, VehicleState, footprint


def test_start_at_destination_reaches_immediately():
    sc = load_scenario("intersection")
    sc = replace(sc, destination=sc.escooter_init, decision_point=sc.escooter_init)
    res = run_episode(sc)
    assert res.outcome is Outcome.REACHED
    assert res.t_event == 0.0
    assert len(res.trajectory) == 1


def test_gap_distance_examples():
    crossing = (VehicleState(-75.0, -2.0, 0.0, 10.0), VehicleSpec("c", Role.CROSSING, hazard=True))
    parked = (VehicleState(6.0, -12.0, math.pi / 2, 0.0), VehicleSpec("p"))
    assert gap_distance(vec2(4, -2), [crossing]) == pytest.approx(76.7)
    assert gap_distance(vec2(4, -2), [parked]) == math.inf
    other = (VehicleState(20.0, -2.0, math.pi, 10.0), VehicleSpec("d", Role.CROSSING, hazard=True))
    assert gap_distance(vec2(4, -2), [crossing, parked, other]) == pytest.approx(16.0 - 2.3)


def test_detect_collision_examples():
    car = OrientedRect(vec2(0, 0), 0.0, 4.6, 1.8)
    # 0.3 m beyond the side of the car, within the 0.4 m body radius.
    assert detect_collision(EscooterState(vec2(0, 1.2)), 0.4, [car])
    assert not detect_collision(EscooterState(vec2(0, 1.31)), 0.4, [car])
    assert not detect_collision(EscooterState(vec2(0, 0)), 0.4, [])


@pytest.mark.parametrize("name", ["intersection", "intersection_two_vehicles", "straight_road"])
def test_aggressive_rider_collides_with_hazard(name):
    res = run_episode(load_scenario(name).with_behavior("aggressive"))
    assert res.outcome is Outcome.COLLISION
    sc = load_scenario(name)
    assert sc.vehicle(res.collided_with)[1].hazard
    assert res.final_mode is FsmMode.MOVE


@pytest.mark.parametrize("name", ["intersection", "intersection_two_vehicles", "straight_road"])
def test_normal_rider_waits(name):
    res = run_episode(load_scenario(name).with_behavior("normal"))
    assert res.outcome is Outcome.TIMEOUT
    assert res.final_mode is FsmMode.WAIT
    assert res.t_event == pytest.approx(30.0)


def test_episode_is_deterministic():
    sc = load_scenario("intersection")
    a, b = run_episode(sc), run_episode(sc)
    assert (a.outcome, a.t_event, a.min_separation) == (b.outcome, b.t_event, b.min_separation)
    for fa, fb in zip(a.trajectory, b.trajectory):
        assert np.array_equal(fa.escooter.pos, fb.escooter.pos)


def test_batch_composition_does_not_change_results():
    base = load_scenario("intersection")
    scs = expand_grid(base, load_grid("one_vehicle_crossing"))[::97]
    together = simulate(scs)
    for sc, res in zip(scs, together):
        alone = run_episode(sc, record=False)
        assert (alone.outcome, alone.t_event, alone.min_separation) == (res.outcome, res.t_event, res.min_separation)
    mixed = simulate([load_scenario("intersection_two_vehicles"), *scs[:3], load_scenario("straight_road")])
    assert [r.t_event for r in mixed[1:4]] == [r.t_event for r in together[:3]]


def test_trajectory_never_depends_on_later_events():
    # A longer horizon must reproduce the shorter run step for step.
    sc = load_scenario("intersection").with_behavior("normal")
    short = run_episode(replace(sc, t_max=10.0))
    long = run_episode(sc)
    for fs, fl in zip(short.trajectory, long.trajectory):
        assert np.array_equal(fs.escooter.pos, fl.escooter.pos)
        assert fs.vehicles == fl.vehicles


def test_recorded_times_step_by_dt():
    res = run_episode(load_scenario("straight_road"))
    times = [f.t for f in res.trajectory]
    assert times[0] == 0.0
    assert np.allclose(np.diff(times), 0.1)
    assert times[-1] == pytest.approx(res.t_event)


def test_min_separation_not_above_decision_gap():
    for name in ("intersection", "intersection_two_vehicles", "straight_road"):
        res = run_episode(load_scenario(name))
        assert res.min_separation <= res.decision_gap


def test_decision_gap_latches_once():
    res = run_episode(load_scenario("intersection").with_behavior("normal"))
    gaps = [f.escooter.decision_gap for f in res.trajectory]
    first = next(i for i, g in enumerate(gaps) if not math.isnan(g))
    assert all(math.isnan(g) for g in gaps[:first])
    assert len(set(gaps[first:])) == 1


def test_parked_and_following_vehicles_never_hit(sweep):
    for use_case in ("one_vehicle_crossing", "two_vehicle_crossing", "one_vehicle_passing"):
        result, _ = sweep(use_case, "aggressive")
        hits = {r.collided_with for r in result.rows if r.outcome is Outcome.COLLISION}
        assert hits <= {"veh2", "veh3"}


def _tiny():
    return dict(
        map_kind="intersection",
        vehicles=((VehicleState(0.0, 0.0, 0.0, 0.0), VehicleSpec("a")),),
        escooter_init=(0.0, -10.0), destination=(0.0, 10.0), decision_point=(0.0, 0.0),
    )


@pytest.mark.parametrize("change", [
    dict(dt=0.0),
    dict(t_max=0.01),
    dict(lane_width=-1.0),
    dict(vehicles=()),
    dict(decision_point=(0.0, 20.0)),
    dict(escooter_init=(math.nan, 0.0)),
    dict(vehicles=((VehicleState(0.0, 0.0, 0.0, 0.0), VehicleSpec("a")),
                   (VehicleState(9.0, 0.0, 0.0, 0.0), VehicleSpec("a")))),
])
def test_invalid_scenarios_rejected(change):
    with pytest.raises(ConfigError):
        Scenario(**{**_tiny(), **change})


def test_behavior_sets_threshold():
    sc = Scenario(**_tiny())
    assert sc.escooter_params.crossing_threshold == 15.0
    assert sc.with_behavior("normal").escooter_params.crossing_threshold == 200.0


@pytest.mark.parametrize("name", ["intersection", "intersection_two_vehicles", "straight_road"])
def test_collision_first_detected_at_event_time(name):
    sc = load_scenario(name)
    res = run_episode(sc)
    body = sc.escooter_params.body_radius
    hits = [detect_collision(f.escooter, body, [footprint(v, spec) for v, (_, spec) in zip(f.vehicles, sc.vehicles)])
            for f in res.trajectory]
    assert hits[-1] and not any(hits[:-1])
    assert res.trajectory[-1].t == pytest.approx(res.t_event)
