"""Factory for creating QP solver instances based on the configured method."""

import logging
from typing import Optional, Union

from .qp import QpSolver
from .splitting import SplittingSolver
from ..core.config import SolverConfig
from ..utils.exceptions import ConfigurationError

logger = logging.getLogger(__name__)

Solver = Union[QpSolver, SplittingSolver]


class SolverFactory:
    """Factory for creating QP solvers."""

    @staticmethod
    def create_solver(config: Optional[SolverConfig] = None,
                      method: Optional[str] = None) -> Solver:
        """Create a solver instance.

        Args:
            config: Solver configuration
            method: Overrides ``config.method`` ('active_set' or 'splitting')

        Returns:
            A fresh solver; instances hold workspace and must not be shared
        """
        config = config or SolverConfig()
        method = method or config.method
        logger.debug(f"Creating {method} QP solver")
        if method == "active_set":
            return QpSolver(config)
        elif method == "splitting":
            return SplittingSolver(config)
        else:
            raise ConfigurationError(f"Unsupported solver method: {method}")


def create_solver(config: Optional[SolverConfig] = None, method: Optional[str] = None) -> Solver:
    return SolverFactory.create_solver(config, method)
