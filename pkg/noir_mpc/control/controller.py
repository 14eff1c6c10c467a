"""Receding-horizon boundary inflow controller."""

import logging
import time
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from .prediction import HorizonPrediction, build_prediction
from .problem import (
    ConstraintTemplate,
    MpcProblem,
    build_problem,
    constraint_template,
    hessian,
)
from ..core.config import SolverConfig
from ..core.network import PhaseSchedule, RoadNetwork
from ..dynamics.fundamental_diagram import FdParams, FdProfile
from ..dynamics.matrices import InputMatrix, PhaseMatrices, TrafficState
from ..solver.factory import Solver, create_solver
from ..solver.qp import KktResiduals, QpStatus
from ..utils.exceptions import NoInletError, QpInfeasibleError, QpMaxIterationsError

logger = logging.getLogger(__name__)


@dataclass
class StepStats:
    """Solver statistics of one control step."""
    k: int
    iterations: int
    kkt: KktResiduals
    wall_time: float
    method: str
    warm_started: bool = False

    def to_dict(self) -> Dict[str, object]:
        return {"k": self.k, "iterations": self.iterations, "wall_time": self.wall_time,
                "method": self.method, "warm_started": self.warm_started, **self.kkt.to_dict()}


@dataclass
class _PhaseCache:
    prediction: HorizonPrediction
    template: ConstraintTemplate
    W1: np.ndarray = field(repr=False)


class MpcController:
    """Solves the horizon QP at every step and returns the first inflow block.

    Prediction matrices and constraint templates are cached per NOIR phase
    index; the cache is filled lazily and never changes afterwards.
    """

    def __init__(self, network: RoadNetwork, schedule: PhaseSchedule,
                 mats_per_phase: Sequence[PhaseMatrices], B: InputMatrix,
                 fd: Union[FdParams, FdProfile], u0: float, beta: float = 1.0,
                 solver: Optional[Solver] = None,
                 solver_config: Optional[SolverConfig] = None):
        if B.n_inputs == 0:
            raise NoInletError("Network has no inlet roads; boundary inflow cannot be controlled")
        if u0 < 0:
            raise ValueError(f"u0 must be non-negative, got {u0}")
        if beta < 0:
            raise ValueError(f"beta must be non-negative, got {beta}")
        self.network = network
        self.schedule = schedule
        self.mats_per_phase = list(mats_per_phase)
        self.B = B
        self.fd = fd if isinstance(fd, FdProfile) else FdProfile.uniform(network.size, fd)
        self.u0 = float(u0)
        self.beta = float(beta)
        self.solver_config = solver_config or SolverConfig()
        self.solver = solver or create_solver(self.solver_config)
        self._cache: Dict[int, _PhaseCache] = {}
        self._previous: Optional[Tuple[int, np.ndarray, Tuple[int, ...]]] = None

    @property
    def horizon(self) -> int:
        return self.schedule.cycle_length

    def phase_cache(self, k: int) -> _PhaseCache:
        zeta = k % self.horizon
        entry = self._cache.get(zeta)
        if entry is None:
            prediction = build_prediction(self.schedule, self.mats_per_phase, self.B, zeta)
            entry = _PhaseCache(prediction=prediction,
                                template=constraint_template(prediction, self.fd),
                                W1=hessian(prediction, self.beta))
            self._cache[zeta] = entry
            logger.debug(f"Cached prediction matrices for NOIR phase {zeta}")
        return entry

    def build_problem(self, x: Union[TrafficState, np.ndarray], k: int) -> MpcProblem:
        entry = self.phase_cache(k)
        return build_problem(entry.prediction, x, self.fd, self.u0, self.beta,
                             road_ids=self.network.roads, template=entry.template, W1=entry.W1)

    def _shifted_warm_start(self, k: int) -> Optional[np.ndarray]:
        """Previous U shifted one block ahead, its first block reused as the last."""
        if self._previous is None or self._previous[0] != k - 1:
            return None
        U = self._previous[1]
        n_in = self.B.n_inputs
        return np.concatenate([U[n_in:], U[:n_in]])

    def _shifted_active_set(self, problem: MpcProblem, k: int) -> Optional[List[int]]:
        """Previous working set moved one step ahead."""
        if self._previous is None or self._previous[0] != k - 1:
            return None
        return problem.shifted_rows(self._previous[2])

    def solve_step(self, x: Union[TrafficState, np.ndarray], k: int) -> Tuple[np.ndarray, StepStats]:
        """Optimal first-step inflow u*[k].

        Args:
            x: Measured densities at time k
            k: Discrete time

        Returns:
            (u*, StepStats) with u* >= 0 summing to u0
        """
        started = time.perf_counter()
        problem = self.build_problem(x, k)
        warm = self._shifted_warm_start(k)
        solution = self.solver.solve(problem.to_qp(), warm_start=warm,
                                     initial_active=self._shifted_active_set(problem, k))
        elapsed = time.perf_counter() - started

        if solution.status is QpStatus.INFEASIBLE:
            message = solution.message or "horizon problem is infeasible"
            violated = problem.violated_rows(warm if warm is not None else solution.v)
            if violated:
                logger.warning(f"k={k}: {len(violated)} constraint rows violated, first {violated[0]}")
                message += f" ({len(violated)} rows violated, first {violated[0]})"
            raise QpInfeasibleError(message, step=k)
        if solution.status is QpStatus.MAX_ITERATIONS:
            raise QpMaxIterationsError(solution.iterations, step=k)

        U = solution.v
        self._previous = (k, U.copy(), solution.active_set)
        u = problem.first_input(U)
        # bound rows hold to solver tolerance; clear round-off below zero
        u[(u < 0) & (u >= -self.solver_config.primal_tol)] = 0.0

        stats = StepStats(k=k, iterations=solution.iterations, kkt=solution.kkt,
                          wall_time=elapsed, method=solution.method,
                          warm_started=warm is not None)
        logger.debug(f"k={k}: {solution.iterations} QP iterations ({solution.method}), "
                     f"J'={problem.reduced_objective(U):.6g}, {elapsed * 1000:.1f} ms")
        return u, stats

    def reset(self) -> None:
        """Forget the warm start; cached matrices are kept."""
        self._previous = None
