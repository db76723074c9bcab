import time

import pytest

from veisim.experiment import run_sweep
from veisim.scenario_io import expand_grid, load_grid, load_scenario

# Builtin base scenario for each use case grid.
USE_CASES = {
    "one_vehicle_crossing": "intersection",
    "two_vehicle_crossing": "intersection_two_vehicles",
    "one_vehicle_passing": "straight_road",
}

_sweeps: dict = {}


def full_sweep(use_case: str, behavior: str):
    """Full grid sweep for one use case and behavior, computed once per session."""
    key = (use_case, behavior)
    if key not in _sweeps:
        base = load_scenario(USE_CASES[use_case]).with_behavior(behavior)
        scenarios = expand_grid(base, load_grid(use_case))
        t0 = time.perf_counter()
        result = run_sweep(scenarios)
        _sweeps[key] = (result, time.perf_counter() - t0)
    return _sweeps[key]


@pytest.fixture(scope="session")
def sweep():
    return full_sweep


_criteria: dict[int, list[str]] = {}


def pytest_runtest_logreport(report):
    marker = "test_acceptance.py::test_criterion_"
    if marker not in report.nodeid:
        return
    number = int(report.nodeid.split(marker, 1)[1].split("_", 1)[0])
    if report.when == "call" or report.outcome != "passed":
        _criteria.setdefault(number, []).append(report.outcome)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        ok = all(o == "passed" for o in _criteria[number])
        terminalreporter.write_line(f"criterion {number}: {'PASS' if ok else 'FAIL'}")
