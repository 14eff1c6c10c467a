"""Spectral radius of the phase state matrices."""

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Sequence

import numpy as np

from .matrices import PhaseMatrices
from ..utils.exceptions import PowerIterationNoConvergenceError

logger = logging.getLogger(__name__)

RELATIVE_TOL = 1e-10
MAX_ITERATIONS = 10_000


def spectral_radius(A: np.ndarray, tol: float = RELATIVE_TOL,
                    max_iter: int = MAX_ITERATIONS) -> float:
    """Spectral radius by power iteration on repeated squares of A.

    The estimate after s squarings is ||A^(2^s)||^(1/2^s). The running
    power is renormalised after every squaring and its scale is kept in
    log form, so the iteration neither overflows nor stalls on defective
    (Jordan block) matrices.

    Args:
        A: Square matrix
        tol: Relative agreement of successive estimates
        max_iter: Squaring limit

    Returns:
        Spectral radius estimate; 0.0 for a nilpotent matrix
    """
    M = np.array(A, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"Expected a square matrix, got shape {M.shape}")
    if M.size == 0:
        return 0.0

    # log of the accumulated scale, divided by the current power 2^s
    scaled_log = 0.0
    previous = None
    for s in range(max_iter):
        norm = np.linalg.norm(M, 2)
        if norm == 0.0:
            return 0.0
        weight = math.ldexp(1.0, -s)
        scaled_log += math.log(norm) * weight
        estimate = math.exp(scaled_log)
        if previous is not None and abs(estimate - previous) <= tol * max(abs(estimate), 1e-300):
            logger.debug(f"Spectral radius {estimate:.12g} after {s} squarings")
            return estimate
        previous = estimate
        M = M / norm
        M = M @ M
    raise PowerIterationNoConvergenceError(max_iter)


@dataclass
class StabilityReport:
    """Per-phase spectral radii and the BIBO verdict."""
    radii: List[float]
    cycle_radius: float
    stable: bool
    tolerance: float = RELATIVE_TOL
    zetas: List[int] = field(default_factory=list)

    @property
    def max_radius(self) -> float:
        return max(self.radii) if self.radii else 0.0

    def to_dict(self) -> Dict[str, Any]:
        return {
            "radii": {str(z): r for z, r in zip(self.zetas, self.radii)},
            "max_radius": self.max_radius,
            "cycle_radius": self.cycle_radius,
            "stable": self.stable,
        }


def cycle_matrix(mats_per_phase: Sequence[PhaseMatrices]) -> np.ndarray:
    """Product A(n_c - 1) ... A(0): the state map over one full NOIR cycle."""
    size = mats_per_phase[0].A.shape[0]
    product = np.eye(size)
    for mats in mats_per_phase:
        product = mats.A @ product
    return product


def stability_report(mats_per_phase: Sequence[PhaseMatrices],
                     tol: float = RELATIVE_TOL,
                     max_iter: int = MAX_ITERATIONS) -> StabilityReport:
    """Spectral radius of every A(zeta); passes iff all are below 1.

    The radius of the one-cycle product is reported alongside.
    """
    if not mats_per_phase:
        raise ValueError("No phase matrices given")
    radii = [spectral_radius(m.A, tol=tol, max_iter=max_iter) for m in mats_per_phase]
    cycle_radius = spectral_radius(cycle_matrix(mats_per_phase), tol=tol, max_iter=max_iter)
    stable = all(r < 1.0 for r in radii)
    if not stable:
        logger.warning(f"Phase matrices not contractive: max spectral radius {max(radii):.6g}")
    return StabilityReport(
        radii=radii,
        cycle_radius=cycle_radius,
        stable=stable,
        tolerance=tol,
        zetas=[m.zeta for m in mats_per_phase],
    )
