"""Quadratic cost and feasibility constraints of one receding-horizon problem."""

import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from .prediction import HorizonPrediction
from ..dynamics.fundamental_diagram import FdParams, FdProfile
from ..dynamics.matrices import TrafficState
from ..solver.qp import QpInstance
from ..utils.exceptions import InfeasibleAtCurrentStateError

logger = logging.getLogger(__name__)

CONSTRAINT_FAMILIES = (
    "density_lower",
    "density_upper",
    "fd_free_flow",
    "fd_capacity",
    "fd_congested",
)

CURRENT_STATE_TOL = 1e-9


def _state_vector(x: Union[TrafficState, np.ndarray]) -> np.ndarray:
    return np.asarray(x.x if isinstance(x, TrafficState) else x, dtype=float)


def _profile(fd: Union[FdParams, FdProfile], size: int) -> FdProfile:
    return fd if isinstance(fd, FdProfile) else FdProfile.uniform(size, fd)


def hessian(pred: HorizonPrediction, beta: float) -> np.ndarray:
    """W1 = I + beta G2'G2; depends on the NOIR phase only."""
    return np.eye(pred.G2.shape[1]) + beta * (pred.G2.T @ pred.G2)


def build_cost(pred: HorizonPrediction, x: Union[TrafficState, np.ndarray],
               beta: float, W1: Optional[np.ndarray] = None) -> Tuple[np.ndarray, np.ndarray, float]:
    """W1 = I + beta G2'G2, W2 = beta G2'G1 x, W3 = beta/2 x'G1'G1 x.

    A precomputed W1 for the same prediction and beta may be passed in.
    """
    if beta < 0:
        raise ValueError(f"beta must be non-negative, got {beta}")
    x = _state_vector(x)
    G1x = pred.G1 @ x
    if W1 is None:
        W1 = hessian(pred, beta)
    W2 = beta * (pred.G2.T @ G1x)
    W3 = 0.5 * beta * float(G1x @ G1x)
    return W1, W2, W3


@dataclass(frozen=True)
class ConstraintTemplate:
    """State-independent part of the constraints: rows read K (G1 x + G2 U) <= offset.

    K stacks -I, I, W4 - c I, W4 and W4 + d I over the predicted states.
    """
    K: np.ndarray
    offset: np.ndarray
    labels: Tuple[Tuple[str, int, int], ...]
    KG1: np.ndarray
    KG2: np.ndarray

    @property
    def n_rows(self) -> int:
        return self.K.shape[0]


def constraint_template(pred: HorizonPrediction, fd: Union[FdParams, FdProfile]) -> ConstraintTemplate:
    """Density range and fundamental-diagram rows for every predicted step."""
    profile = _profile(fd, pred.size)
    n_c = pred.horizon
    tile = lambda values: np.tile(values, n_c)
    eye = np.eye(pred.size * n_c)
    c = np.diag(tile(profile.left_slope))
    d = np.diag(tile(profile.right_slope))

    K = np.vstack([-eye, eye, pred.W4 - c, pred.W4, pred.W4 + d])
    offset = np.concatenate([
        np.zeros(pred.size * n_c),
        tile(profile.rho_max),
        np.zeros(pred.size * n_c),
        tile(profile.z_max),
        tile(profile.right_intercept),
    ])
    labels = tuple(
        (family, step, road)
        for family in CONSTRAINT_FAMILIES
        for step in range(1, n_c + 1)
        for road in range(pred.size)
    )
    return ConstraintTemplate(K=K, offset=offset, labels=labels,
                              KG1=K @ pred.G1, KG2=K @ pred.G2)


@dataclass
class ConstraintSystem:
    """A_in U <= b_in, A_eq U = b_eq, U >= lower."""
    A_in: np.ndarray
    b_in: np.ndarray
    A_eq: np.ndarray
    b_eq: np.ndarray
    lower: np.ndarray
    labels: Tuple[Tuple[str, int, int], ...] = ()


def check_current_state(x: np.ndarray, rho_max: np.ndarray,
                        road_ids: Optional[Sequence[int]] = None,
                        tol: float = CURRENT_STATE_TOL) -> None:
    """Raise if the measured densities already leave [0, rho_max]."""
    bad = np.flatnonzero((x > rho_max + tol) | (x < -tol))
    if bad.size:
        i = int(bad[0])
        road = road_ids[i] if road_ids is not None else i
        raise InfeasibleAtCurrentStateError(road, float(x[i]), float(rho_max[i]))


def sum_constraint(pred: HorizonPrediction, u0: float) -> Tuple[np.ndarray, np.ndarray]:
    """(I_nc kron 1') U = u0 1: the inflows of every step add up to u0."""
    A_eq = np.kron(np.eye(pred.horizon), np.ones((1, pred.n_inputs)))
    return A_eq, np.full(pred.horizon, float(u0))


def build_constraints(pred: HorizonPrediction, x: Union[TrafficState, np.ndarray],
                      fd: Union[FdParams, FdProfile], u0: float,
                      P_blocks: Optional[np.ndarray] = None,
                      road_ids: Optional[Sequence[int]] = None,
                      template: Optional[ConstraintTemplate] = None) -> ConstraintSystem:
    """Assemble the horizon constraint system at state x.

    Args:
        pred: Horizon prediction
        x: Current densities
        fd: Fundamental diagram (global or per road)
        u0: Net inflow each step, non-negative
        P_blocks: Outflow probability blocks W4; defaults to ``pred.W4``
        road_ids: Road ids for error messages
        template: Cached constraint template for pred

    Returns:
        ConstraintSystem over U
    """
    if u0 < 0:
        raise ValueError(f"u0 must be non-negative, got {u0}")
    x = _state_vector(x)
    profile = _profile(fd, pred.size)
    check_current_state(x, profile.rho_max, road_ids)

    if P_blocks is not None and P_blocks is not pred.W4:
        pred = HorizonPrediction(G1=pred.G1, G2=pred.G2, H_list=pred.H_list, W4=P_blocks,
                                 zeta=pred.zeta, horizon=pred.horizon, size=pred.size,
                                 n_inputs=pred.n_inputs)
        template = None
    template = template or constraint_template(pred, profile)

    A_in = template.KG2.copy()
    b_in = template.offset - template.KG1 @ x
    A_eq, b_eq = sum_constraint(pred, u0)
    return ConstraintSystem(
        A_in=A_in, b_in=b_in, A_eq=A_eq, b_eq=b_eq,
        lower=np.zeros(pred.n_inputs * pred.horizon), labels=template.labels,
    )


@dataclass
class MpcProblem:
    """Cost and constraints of one horizon; minimised over U."""
    W1: np.ndarray
    W2: np.ndarray
    W3: float
    constraints: ConstraintSystem
    beta: float
    n_inputs: int

    def objective(self, U: np.ndarray) -> float:
        """J = 1/2 U'W1U + W2'U + W3."""
        return self.reduced_objective(U) + self.W3

    def reduced_objective(self, U: np.ndarray) -> float:
        """J without the constant W3; same minimiser."""
        U = np.asarray(U, dtype=float)
        return float(0.5 * U @ self.W1 @ U + self.W2 @ U)

    def first_input(self, U: np.ndarray) -> np.ndarray:
        """u[k] = [I 0] U."""
        return np.asarray(U)[:self.n_inputs].copy()

    def to_qp(self) -> QpInstance:
        c = self.constraints
        return QpInstance(hessian=self.W1, linear=self.W2, A_in=c.A_in, b_in=c.b_in,
                          A_eq=c.A_eq, b_eq=c.b_eq, lower=c.lower)

    def violated_rows(self, U: np.ndarray, tol: float = 1e-7) -> List[Tuple[str, int, int]]:
        """Labels (family, step, road position) of inequality rows U violates."""
        c = self.constraints
        slack = c.b_in - c.A_in @ np.asarray(U, dtype=float)
        return [c.labels[i] for i in np.flatnonzero(slack < -tol)]

    def shifted_rows(self, rows: Sequence[int]) -> List[int]:
        """Inequality-system rows of the next horizon matching ``rows`` of this one.

        A row of predicted step s becomes the same row of step s - 1 and the
        bound on input block b that of block b - 1; first-step rows are dropped.
        Rows are indexed as in ``QpInstance.inequality_system``.
        """
        c = self.constraints
        n_rows = c.A_in.shape[0]
        horizon = c.b_eq.shape[0]
        per_step = n_rows // (len(CONSTRAINT_FAMILIES) * horizon) if horizon else 0
        shifted = []
        for row in rows:
            if row < n_rows:
                if c.labels[row][1] > 1:
                    shifted.append(row - per_step)
            elif row - n_rows >= self.n_inputs:
                shifted.append(row - self.n_inputs)
        return shifted


def build_problem(pred: HorizonPrediction, x: Union[TrafficState, np.ndarray],
                  fd: Union[FdParams, FdProfile], u0: float, beta: float,
                  road_ids: Optional[Sequence[int]] = None,
                  template: Optional[ConstraintTemplate] = None,
                  W1: Optional[np.ndarray] = None) -> MpcProblem:
    W1, W2, W3 = build_cost(pred, x, beta, W1=W1)
    constraints = build_constraints(pred, x, fd, u0, road_ids=road_ids, template=template)
    return MpcProblem(W1=W1, W2=W2, W3=W3, constraints=constraints, beta=beta,
                      n_inputs=pred.n_inputs)
