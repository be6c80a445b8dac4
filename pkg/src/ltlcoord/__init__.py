"""Distributed multi-robot motion coordination under LTL surveillance tasks.

The package is organised bottom-up:

* ``ltl``: formulas, Büchi automata and lasso semantics.
* ``geometry``: workspace, obstacles, labelled regions and the cell grid.
* ``dynamics``: unicycle and double-integrator models with braking laws.
* ``primitives`` and ``product``: the motion lattice, its transition system,
  the product automaton and the potential function.
* ``coordination``: reservation schedules, conflicts, priorities and modes.
* ``planner``: local tree growth and global plan completion.
* ``sim``, ``scenario``, ``plot`` and ``cli``: the round-based simulator and
  its file-level tooling.
"""
from .coordination import (BUSY, EMERG, FREE, PriorityState, ReservationSchedule, assign_priorities,
                           build_schedule, detect_conflicts, mode_transition)
from .dynamics import BrakingProfile, RobotModel, braking_bounds, braking_profile
from .geometry import Grid, Polygon, Workspace
from .ltl import LassoWord, Nba, accepts_lasso, eval_lasso_semantics, parse, to_nba
from .product import build_bundle, build_cts, build_pba, potentials
from .scenario import LoadedScenario, ScenarioError, load_scenario
from .sim import RobotConfig, SafetyViolationError, SimConfig, SimReport, Simulator, run

__all__ = [
    "BUSY", "EMERG", "FREE", "PriorityState", "ReservationSchedule", "assign_priorities", "build_schedule",
    "detect_conflicts", "mode_transition",
    "BrakingProfile", "RobotModel", "braking_bounds", "braking_profile",
    "Grid", "Polygon", "Workspace",
    "LassoWord", "Nba", "accepts_lasso", "eval_lasso_semantics", "parse", "to_nba",
    "build_bundle", "build_cts", "build_pba", "potentials",
    "LoadedScenario", "ScenarioError", "load_scenario",
    "RobotConfig", "SafetyViolationError", "SimConfig", "SimReport", "Simulator", "run",
]

__version__ = "0.1.0"
