"""Operator-splitting (ADMM) QP solver on dense matrices.

Solves the QP in the form l <= C v <= u with C = [A_in; A_eq; I]. The
iteration is the relaxed ADMM of the OSQP family with a per-row penalty,
larger on equality rows.
"""

import logging
from typing import Optional, Sequence

import numpy as np
from scipy import linalg

from .qp import QpInstance, QpSolution, QpStatus, kkt_residuals
from ..core.config import SolverConfig

logger = logging.getLogger(__name__)

EQUALITY_RHO_SCALE = 1e3
CERTIFICATE_TOL = 1e-9


class SplittingSolver:
    """ADMM iteration; reports INFEASIBLE on divergence or a dual certificate."""

    method = "splitting"

    def __init__(self, config: Optional[SolverConfig] = None):
        self.config = config or SolverConfig()

    def solve(self, qp: QpInstance, warm_start: Optional[np.ndarray] = None,
              initial_active: Optional[Sequence[int]] = None) -> QpSolution:
        """Solve qp from warm_start (or the origin); initial_active is ignored."""
        cfg = self.config
        n = qp.n
        m_in = qp.A_in.shape[0]
        m_eq = qp.A_eq.shape[0]
        C = np.vstack([qp.A_in, qp.A_eq, np.eye(n)])
        lower = np.concatenate([np.full(m_in, -np.inf), qp.b_eq, qp.lower])
        upper = np.concatenate([qp.b_in, qp.b_eq, qp.upper])

        rho = np.full(C.shape[0], cfg.rho)
        rho[(upper - lower) < 1e-4] *= EQUALITY_RHO_SCALE
        rho_inv = 1.0 / rho

        H = 0.5 * (qp.hessian + qp.hessian.T)
        factor = linalg.cho_factor(H + cfg.sigma * np.eye(n) + C.T @ (rho[:, None] * C))

        v = np.zeros(n) if warm_start is None else np.asarray(warm_start, dtype=float).copy()
        z = np.clip(C @ v, lower, upper)
        y = np.zeros(C.shape[0])

        status = QpStatus.MAX_ITERATIONS
        message = f"iteration limit {cfg.splitting_max_iter} reached"
        iterations = 0
        for iterations in range(1, cfg.splitting_max_iter + 1):
            rhs = cfg.sigma * v - qp.linear + C.T @ (rho * z - y)
            v_tilde = linalg.cho_solve(factor, rhs)
            z_tilde = C @ v_tilde

            v_next = cfg.alpha * v_tilde + (1.0 - cfg.alpha) * v
            relaxed = cfg.alpha * z_tilde + (1.0 - cfg.alpha) * z
            z_next = np.clip(relaxed + rho_inv * y, lower, upper)
            y_next = y + rho * (relaxed - z_next)

            delta_y = y_next - y
            v, z, y = v_next, z_next, y_next

            if max(np.max(np.abs(v)), np.max(np.abs(y), initial=0.0)) > cfg.divergence_threshold:
                status, message = QpStatus.INFEASIBLE, "splitting iterates diverged"
                break

            r_prim = np.max(np.abs(C @ v - z))
            r_dual = np.max(np.abs(H @ v + qp.linear + C.T @ y))
            if r_prim <= cfg.splitting_tol and r_dual <= cfg.splitting_tol:
                status, message = QpStatus.OPTIMAL, ""
                break

            if self._primal_infeasibility_certificate(C, lower, upper, delta_y):
                status, message = QpStatus.INFEASIBLE, "primal infeasibility certificate"
                break

        multipliers_in, multipliers_eq = self._multipliers(qp, y, m_in, m_eq)
        kkt = kkt_residuals(qp, v, multipliers_in, multipliers_eq)
        if status is QpStatus.OPTIMAL and not kkt.within(cfg):
            status = QpStatus.MAX_ITERATIONS
            message = f"KKT check failed: {kkt.to_dict()}"
        logger.debug(f"Splitting solver: {status.value} after {iterations} iterations")

        return QpSolution(
            v=v, objective=qp.objective(v), status=status, kkt=kkt, iterations=iterations,
            method=self.method, multipliers_in=multipliers_in, multipliers_eq=multipliers_eq,
            message=message,
        )

    @staticmethod
    def _primal_infeasibility_certificate(C: np.ndarray, lower: np.ndarray, upper: np.ndarray,
                                          delta_y: np.ndarray) -> bool:
        scale = np.max(np.abs(delta_y), initial=0.0)
        if scale <= CERTIFICATE_TOL:
            return False
        if np.max(np.abs(C.T @ delta_y)) > CERTIFICATE_TOL * scale:
            return False
        positive = np.maximum(delta_y, 0.0)
        negative = np.minimum(delta_y, 0.0)
        support = (np.where(positive > 0, upper, 0.0) @ positive
                   + np.where(negative < 0, lower, 0.0) @ negative)
        return bool(np.isfinite(support) and support < -CERTIFICATE_TOL * scale)

    @staticmethod
    def _multipliers(qp: QpInstance, y: np.ndarray, m_in: int, m_eq: int):
        """Map ADMM duals onto the rows of ``qp.inequality_system()`` and the equalities."""
        y_in = y[:m_in]
        y_eq = y[m_in:m_in + m_eq]
        y_box = y[m_in + m_eq:]
        lower_rows = np.flatnonzero(np.isfinite(qp.lower))
        upper_rows = np.flatnonzero(np.isfinite(qp.upper))
        multipliers_in = np.concatenate([
            y_in,
            np.maximum(-y_box[lower_rows], 0.0),
            np.maximum(y_box[upper_rows], 0.0),
        ])
        return multipliers_in, y_eq.copy()
