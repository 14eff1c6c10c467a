"""Dense strictly convex QP: problem data, KKT residuals and a primal active-set solver.

Problems have the form

    minimise  1/2 v'Hv + f'v
    s.t.      A_in v <= b_in,  A_eq v = b_eq,  lower <= v <= upper
"""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import linalg
from scipy.optimize import linprog

from ..core.config import SolverConfig
from ..utils.exceptions import NotPositiveDefiniteError

logger = logging.getLogger(__name__)

SYMMETRY_TOL = 1e-10
MIN_EIGENVALUE = 1e-8
ACTIVE_TOL = 1e-8


class QpStatus(Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    MAX_ITERATIONS = "max_iterations"


@dataclass
class QpInstance:
    """Strictly convex QP with optional inequality, equality and bound constraints."""
    hessian: np.ndarray
    linear: np.ndarray
    A_in: Optional[np.ndarray] = None
    b_in: Optional[np.ndarray] = None
    A_eq: Optional[np.ndarray] = None
    b_eq: Optional[np.ndarray] = None
    lower: Optional[np.ndarray] = None
    upper: Optional[np.ndarray] = None

    def __post_init__(self):
        self.hessian = np.atleast_2d(np.asarray(self.hessian, dtype=float))
        self.linear = np.atleast_1d(np.asarray(self.linear, dtype=float))
        n = self.linear.shape[0]
        if self.hessian.shape != (n, n):
            raise ValueError(f"Hessian has shape {self.hessian.shape}, expected {(n, n)}")
        if not np.allclose(self.hessian, self.hessian.T, rtol=0.0, atol=SYMMETRY_TOL):
            raise ValueError("Hessian is not symmetric")
        self.A_in, self.b_in = self._rows(self.A_in, self.b_in, n, "inequality")
        self.A_eq, self.b_eq = self._rows(self.A_eq, self.b_eq, n, "equality")
        self.lower = self._bound(self.lower, n, -np.inf)
        self.upper = self._bound(self.upper, n, np.inf)

    @staticmethod
    def _rows(A, b, n: int, kind: str) -> Tuple[np.ndarray, np.ndarray]:
        if A is None:
            return np.zeros((0, n)), np.zeros(0)
        A = np.atleast_2d(np.asarray(A, dtype=float)).reshape(-1, n)
        b = np.atleast_1d(np.asarray(b, dtype=float))
        if b.shape != (A.shape[0],):
            raise ValueError(f"{kind} right-hand side has shape {b.shape}, expected ({A.shape[0]},)")
        return A, b

    @staticmethod
    def _bound(value, n: int, default: float) -> np.ndarray:
        if value is None:
            return np.full(n, default)
        value = np.broadcast_to(np.asarray(value, dtype=float), (n,)).copy()
        return value

    @property
    def n(self) -> int:
        return self.linear.shape[0]

    def inequality_system(self) -> Tuple[np.ndarray, np.ndarray]:
        """All inequalities, bounds included, as G v <= h.

        Rows are ordered: A_in, then finite lower bounds, then finite upper bounds.
        """
        eye = np.eye(self.n)
        lower_rows = np.flatnonzero(np.isfinite(self.lower))
        upper_rows = np.flatnonzero(np.isfinite(self.upper))
        G = np.vstack([self.A_in, -eye[lower_rows], eye[upper_rows]])
        h = np.concatenate([self.b_in, -self.lower[lower_rows], self.upper[upper_rows]])
        return G, h

    def objective(self, v: np.ndarray) -> float:
        return float(0.5 * v @ self.hessian @ v + self.linear @ v)

    def scaled(self, factor: float) -> 'QpInstance':
        """Same feasible set with (hessian, linear) multiplied by factor."""
        return QpInstance(self.hessian * factor, self.linear * factor, self.A_in, self.b_in,
                          self.A_eq, self.b_eq, self.lower, self.upper)


@dataclass(frozen=True)
class KktResiduals:
    """Infinity norms of the four KKT conditions."""
    stationarity: float
    primal: float
    dual: float
    complementarity: float

    def within(self, config: SolverConfig) -> bool:
        return (self.stationarity <= config.stationarity_tol
                and self.primal <= config.primal_tol
                and self.dual <= config.stationarity_tol
                and self.complementarity <= config.complementarity_tol)

    def to_dict(self) -> Dict[str, float]:
        return {"stationarity": self.stationarity, "primal": self.primal,
                "dual": self.dual, "complementarity": self.complementarity}


@dataclass
class QpSolution:
    v: np.ndarray
    objective: float
    status: QpStatus
    kkt: KktResiduals
    iterations: int
    method: str = "active_set"
    active_set: Tuple[int, ...] = ()
    multipliers_in: Optional[np.ndarray] = None
    multipliers_eq: Optional[np.ndarray] = None
    message: str = ""

    @property
    def optimal(self) -> bool:
        return self.status is QpStatus.OPTIMAL


def _inf_norm(values: np.ndarray) -> float:
    return float(np.max(np.abs(values))) if values.size else 0.0


def kkt_residuals(qp: QpInstance, v: np.ndarray,
                  multipliers_in: Optional[np.ndarray] = None,
                  multipliers_eq: Optional[np.ndarray] = None,
                  active_tol: float = ACTIVE_TOL) -> KktResiduals:
    """KKT residual norms of a candidate point.

    Args:
        qp: Problem
        v: Candidate point
        multipliers_in: Multipliers of ``qp.inequality_system()`` rows; when
            omitted, least-squares multipliers of the rows active at v are used
        multipliers_eq: Equality multipliers (estimated together with the above)
        active_tol: Slack below which an inequality counts as active

    Returns:
        KktResiduals
    """
    v = np.asarray(v, dtype=float)
    G, h = qp.inequality_system()
    slack = G @ v - h
    eq_violation = qp.A_eq @ v - qp.b_eq
    primal = max(float(np.max(slack, initial=0.0)), _inf_norm(eq_violation))
    gradient = qp.hessian @ v + qp.linear

    if multipliers_in is None or multipliers_eq is None:
        active = np.flatnonzero(slack >= -active_tol * np.maximum(1.0, np.abs(h)))
        basis = np.vstack([qp.A_eq, G[active]])
        if basis.shape[0]:
            estimate, *_ = np.linalg.lstsq(basis.T, -gradient, rcond=None)
        else:
            estimate = np.zeros(0)
        multipliers_eq = estimate[:qp.A_eq.shape[0]]
        multipliers_in = np.zeros(G.shape[0])
        multipliers_in[active] = estimate[qp.A_eq.shape[0]:]

    residual = gradient + qp.A_eq.T @ multipliers_eq + G.T @ multipliers_in
    return KktResiduals(
        stationarity=_inf_norm(residual),
        primal=primal,
        dual=float(np.max(-multipliers_in, initial=0.0)),
        complementarity=_inf_norm(multipliers_in * slack),
    )


@dataclass
class _Prepared:
    """Problem data after dropping empty rows and dependent equalities."""
    H: np.ndarray
    f: np.ndarray
    G: np.ndarray
    h: np.ndarray
    E: np.ndarray
    e: np.ndarray
    G_rows: np.ndarray  # original inequality row of every kept row
    E_rows: np.ndarray
    n_ineq: int
    n_eq: int
    chol: Any = None
    H_inv: Optional[np.ndarray] = None


class InfeasibleProblem(Exception):
    """Raised inside the solver when a certificate of infeasibility is found."""


def prepare(qp: QpInstance, tol: float) -> _Prepared:
    """Symmetrise, check definiteness, drop empty rows and reduce the equality system."""
    H = 0.5 * (qp.hessian + qp.hessian.T)
    min_eigenvalue = float(np.min(np.linalg.eigvalsh(H))) if qp.n else 1.0
    if min_eigenvalue < MIN_EIGENVALUE:
        raise NotPositiveDefiniteError(min_eigenvalue)

    G, h = qp.inequality_system()
    empty = ~np.any(G != 0.0, axis=1)
    if np.any(h[empty] < -tol):
        raise InfeasibleProblem("constraint with zero coefficients has a negative right-hand side")
    G_rows = np.flatnonzero(~empty)

    E, e = qp.A_eq, qp.b_eq
    E_rows = np.arange(E.shape[0])
    if E.shape[0]:
        _, R, pivots = linalg.qr(E.T, mode='economic', pivoting=True)
        diagonal = np.abs(np.diag(R))
        scale = diagonal[0] if diagonal.size else 0.0
        rank = int(np.sum(diagonal > max(scale, 1.0) * 1e-12 * max(E.shape)))
        solution, *_ = np.linalg.lstsq(E, e, rcond=None)
        if _inf_norm(E @ solution - e) > tol * max(1.0, _inf_norm(e)):
            raise InfeasibleProblem("equality system is inconsistent")
        E_rows = np.sort(pivots[:rank])

    chol = linalg.cho_factor(H)
    H_inv = linalg.cho_solve(chol, np.eye(qp.n))
    return _Prepared(
        H=H, f=qp.linear, G=G[G_rows], h=h[G_rows], E=E[E_rows], e=e[E_rows],
        G_rows=G_rows, E_rows=E_rows, n_ineq=G.shape[0], n_eq=E.shape[0],
        chol=chol, H_inv=H_inv,
    )


def _is_feasible(prep: _Prepared, v: np.ndarray, tol: float) -> bool:
    if prep.G.shape[0] and np.max(prep.G @ v - prep.h) > tol:
        return False
    return not (prep.E.shape[0] and _inf_norm(prep.E @ v - prep.e) > tol)


def _equality_minimiser(prep: _Prepared) -> np.ndarray:
    unconstrained = -linalg.cho_solve(prep.chol, prep.f)
    if not prep.E.shape[0]:
        return unconstrained
    HiEt = prep.H_inv @ prep.E.T
    S = prep.E @ HiEt
    mu = np.linalg.solve(S, prep.E @ unconstrained - prep.e)
    return unconstrained - HiEt @ mu


def _phase_one(prep: _Prepared) -> np.ndarray:
    n = prep.f.shape[0]
    result = linprog(
        np.zeros(n),
        A_ub=prep.G if prep.G.shape[0] else None,
        b_ub=prep.h if prep.G.shape[0] else None,
        A_eq=prep.E if prep.E.shape[0] else None,
        b_eq=prep.e if prep.E.shape[0] else None,
        bounds=[(None, None)] * n,
        method="highs",
    )
    if result.status == 2:
        raise InfeasibleProblem("no point satisfies the constraints")
    if not result.success:
        raise InfeasibleProblem(f"phase-one linear program failed: {result.message}")
    return np.asarray(result.x, dtype=float)


def _independent_rows(prep: _Prepared, candidates: Sequence[int]) -> List[int]:
    """Greedy, in index order, keep candidate rows independent of the equalities and each other."""
    n = prep.f.shape[0]
    basis = linalg.qr(prep.E.T, mode='economic')[0] if prep.E.shape[0] else np.zeros((n, 0))
    chosen: List[int] = []
    for row in candidates:
        if basis.shape[1] >= n:
            break
        g = prep.G[row]
        residual = g - basis @ (basis.T @ g)
        residual -= basis @ (basis.T @ residual)
        norm = np.linalg.norm(residual)
        if norm > 1e-10 * max(np.linalg.norm(g), 1.0):
            chosen.append(int(row))
            basis = np.column_stack([basis, residual / norm])
    return chosen


class QpSolver:
    """Primal active-set solver on a Cholesky-factored Hessian.

    Not shareable between threads; one instance per closed loop.
    Falls back to operator splitting, followed by an active-set polish,
    when the active-set iteration fails.
    """

    method = "active_set"

    def __init__(self, config: Optional[SolverConfig] = None):
        self.config = config or SolverConfig()

    def solve(self, qp: QpInstance, warm_start: Optional[np.ndarray] = None,
              initial_active: Optional[Sequence[int]] = None) -> QpSolution:
        """Solve qp.

        Args:
            qp: Problem instance
            warm_start: Candidate starting point, used when feasible
            initial_active: Original inequality rows to try first in the working set

        Returns:
            QpSolution; status INFEASIBLE or MAX_ITERATIONS instead of raising
        """
        cfg = self.config
        try:
            prep = prepare(qp, cfg.primal_tol)
            start, origin = self._starting_point(prep, warm_start)
        except InfeasibleProblem as e:
            return self._infeasible(qp, str(e))

        solution = self._active_set(qp, prep, start, initial_active)
        logger.debug(f"Active set from {origin} start: {solution.status.value} "
                     f"after {solution.iterations} iterations")
        if solution.optimal:
            return solution

        logger.warning(f"Active-set solve ended with {solution.status.value}; "
                       "falling back to operator splitting")
        from .splitting import SplittingSolver

        relaxed = SplittingSolver(cfg).solve(qp, warm_start=solution.v)
        if relaxed.status is QpStatus.INFEASIBLE:
            return relaxed
        polish_rows = np.flatnonzero(relaxed.multipliers_in > cfg.primal_tol) \
            if relaxed.multipliers_in is not None else []
        if _is_feasible(prep, relaxed.v, cfg.primal_tol):
            polished = self._active_set(qp, prep, relaxed.v, polish_rows)
            polished.iterations += relaxed.iterations + solution.iterations
            if polished.optimal:
                polished.method = "splitting+polish"
                return polished
        relaxed.iterations += solution.iterations
        return relaxed

    def _starting_point(self, prep: _Prepared, warm_start: Optional[np.ndarray]) -> Tuple[np.ndarray, str]:
        tol = self.config.primal_tol
        if warm_start is not None:
            warm_start = np.asarray(warm_start, dtype=float)
            if warm_start.shape == prep.f.shape and _is_feasible(prep, warm_start, tol):
                return warm_start.copy(), "warm"
            logger.debug("Warm start rejected: infeasible or wrong size")
        candidate = _equality_minimiser(prep)
        if _is_feasible(prep, candidate, tol):
            return candidate, "equality-constrained minimiser"
        return _phase_one(prep), "phase-one"

    def _infeasible(self, qp: QpInstance, message: str) -> QpSolution:
        v = np.zeros(qp.n)
        return QpSolution(
            v=v, objective=qp.objective(v), status=QpStatus.INFEASIBLE,
            kkt=kkt_residuals(qp, v), iterations=0, method=self.method, message=message,
        )

    def _active_set(self, qp: QpInstance, prep: _Prepared, start: np.ndarray,
                    initial_active: Optional[Sequence[int]] = None) -> QpSolution:
        cfg = self.config
        v = start.copy()
        slack = prep.h - prep.G @ v
        active_now = np.flatnonzero(slack <= cfg.primal_tol * np.maximum(1.0, np.abs(prep.h)))

        preferred: List[int] = []
        if initial_active is not None:
            kept = {int(r): k for k, r in enumerate(prep.G_rows)}
            active_lookup = set(active_now.tolist())
            preferred = [kept[r] for r in initial_active if r in kept and kept[r] in active_lookup]
        taken = set(preferred)
        ordered = preferred + [int(r) for r in active_now if int(r) not in taken]
        working = _independent_rows(prep, ordered)

        n_eq = prep.E.shape[0]
        lam = np.zeros(len(working))
        mu = np.zeros(n_eq)
        status = QpStatus.MAX_ITERATIONS
        iterations = 0
        step_tol = 1e-12

        for iterations in range(1, cfg.max_iter + 1):
            gradient = prep.H @ v + prep.f
            A_w = np.vstack([prep.E, prep.G[working]]) if working else prep.E
            if A_w.shape[0]:
                b_w = np.concatenate([prep.e, prep.h[working]])
                HiAt = prep.H_inv @ A_w.T
                S = A_w @ HiAt
                # the step also removes any residual on the working rows
                rhs = (A_w @ v - b_w) - A_w @ (prep.H_inv @ gradient)
                try:
                    multipliers = linalg.cho_solve(linalg.cho_factor(S), rhs)
                except linalg.LinAlgError:
                    multipliers, *_ = np.linalg.lstsq(S, rhs, rcond=None)
                p = -(prep.H_inv @ gradient + HiAt @ multipliers)
            else:
                multipliers = np.zeros(0)
                p = -(prep.H_inv @ gradient)
            mu = multipliers[:n_eq]
            lam = multipliers[n_eq:]

            if (_inf_norm(p) <= step_tol * max(1.0, _inf_norm(v))
                    or _inf_norm(prep.H @ p) <= 0.01 * cfg.stationarity_tol):
                if lam.size == 0 or np.min(lam) >= -cfg.stationarity_tol:
                    status = QpStatus.OPTIMAL
                    break
                # most negative multiplier; lowest index on ties
                drop = int(np.argmin(lam))
                working.pop(drop)
                lam = np.delete(lam, drop)
                continue

            Gp = prep.G @ p
            candidates = np.ones(prep.G.shape[0], dtype=bool)
            candidates[working] = False
            candidates &= Gp > step_tol * max(1.0, _inf_norm(p))
            alpha = 1.0
            blocking = -1
            if np.any(candidates):
                rows = np.flatnonzero(candidates)
                slack = np.maximum(prep.h[rows] - prep.G[rows] @ v, 0.0)
                ratios = slack / Gp[rows]
                best = int(np.argmin(ratios))
                if ratios[best] < 1.0:
                    alpha = float(ratios[best])
                    blocking = int(rows[best])
            v = v + alpha * p
            if blocking >= 0:
                working.append(blocking)

        multipliers_in = np.zeros(prep.n_ineq)
        for row, value in zip(working, lam):
            multipliers_in[prep.G_rows[row]] = value
        multipliers_eq = np.zeros(prep.n_eq)
        multipliers_eq[prep.E_rows] = mu

        kkt = kkt_residuals(qp, v, multipliers_in, multipliers_eq)
        message = ""
        if status is QpStatus.OPTIMAL and not kkt.within(cfg):
            status = QpStatus.MAX_ITERATIONS
            message = f"KKT check failed: {kkt.to_dict()}"
        elif status is QpStatus.MAX_ITERATIONS:
            message = f"iteration limit {cfg.max_iter} reached"

        return QpSolution(
            v=v, objective=qp.objective(v), status=status, kkt=kkt, iterations=iterations,
            method=self.method,
            active_set=tuple(sorted(int(prep.G_rows[w]) for w in working)),
            multipliers_in=multipliers_in, multipliers_eq=multipliers_eq, message=message,
        )
