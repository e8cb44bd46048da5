"""Boundedly-rational agent simulation and online Bayesian goal inference."""

__version__ = "0.1.0"

from . import agent, baselines, bench, domains, heuristics, observation
from . import pddl, planner, sips

__all__ = [
    "agent", "baselines", "bench", "domains", "heuristics", "observation",
    "pddl", "planner", "sips", "__version__",
]
