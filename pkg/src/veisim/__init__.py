"""Deterministic 2D simulator for vehicle / e-scooter interaction scenarios."""

from .escooter import BehaviorType, EscooterParams, EscooterState, FsmMode
from .simulation import ConfigError, EpisodeResult, MapKind, Outcome, Scenario, run_episode, simulate
from .scenario_io import expand_grid, load_grid, load_scenario

__all__ = [
    "BehaviorType",
    "ConfigError",
    "EpisodeResult",
    "EscooterParams",
    "EscooterState",
    "FsmMode",
    "MapKind",
    "Outcome",
    "Scenario",
    "expand_grid",
    "load_grid",
    "load_scenario",
    "run_episode",
    "simulate",
]

__version__ = "0.1.0"
