"""Dense convex quadratic programming."""

from .factory import SolverFactory, create_solver
from .qp import KktResiduals, QpInstance, QpSolution, QpSolver, QpStatus, kkt_residuals
from .splitting import SplittingSolver

__all__ = [
    "SolverFactory", "create_solver",
    "KktResiduals", "QpInstance", "QpSolution", "QpSolver", "QpStatus", "kkt_residuals",
    "SplittingSolver",
]
