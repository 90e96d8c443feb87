"""Persistent, human-sculptable swarm shape formation on a box lattice."""

from .lattice import GridSpec, Shape, ShapeError, box_of, validate_shape
from .paths import Path, PathClass, PathKind, classify_path
from .planner import exhaustive_cycle, reference_path, spanning_tree
from .agent import MemoryState, RobotState, next_edge, traverse
from .engine import ChangeRejected, SimConfig, World
from .scenario import Scenario, load_scenario, run_scenario

__all__ = [
    "GridSpec", "Shape", "ShapeError", "box_of", "validate_shape",
    "Path", "PathClass", "PathKind", "classify_path",
    "exhaustive_cycle", "reference_path", "spanning_tree",
    "MemoryState", "RobotState", "next_edge", "traverse",
    "ChangeRejected", "SimConfig", "World",
    "Scenario", "load_scenario", "run_scenario",
]

__version__ = "0.1.0"
