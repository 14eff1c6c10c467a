"""Receding-horizon boundary inflow control."""

from .controller import MpcController, StepStats
from .prediction import HorizonPrediction, build_prediction
from .problem import MpcProblem, build_constraints, build_cost, build_problem

__all__ = [
    "MpcController", "StepStats",
    "HorizonPrediction", "build_prediction",
    "MpcProblem", "build_constraints", "build_cost", "build_problem",
]
