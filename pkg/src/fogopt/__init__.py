"""Exact and heuristic solvers for joint task offloading and resource allocation
in a mobile/fog/cloud network."""
from .model import Solution, SystemInstance, load_instance, save_instance, validate_solution
from .scenarios import ScenarioSpec, generate, scenario1, scenario2

__version__ = "0.1.0"

__all__ = ["ScenarioSpec", "Solution", "SystemInstance", "generate", "load_instance", "save_instance",
           "scenario1", "scenario2", "validate_solution"]
