"""Runtime check of the safety and liveness requirements over closed-loop traces.

Safety atoms are evaluated per record; liveness is the eventual balance
of total outlet outflow with the commanded net inflow, held for a finite
window through the end of the trace.
"""

import logging
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence, Union

import numpy as np

from ..core.network import PhaseSchedule
from ..dynamics.fundamental_diagram import FdParams, FdProfile
from ..dynamics.matrices import PhaseMatrices
from ..utils.exceptions import EmptyTraceError

logger = logging.getLogger(__name__)

ATOM_TOL = 1e-6

SAFETY_ATOMS = (
    "inflow_nonnegative",
    "inflow_bound",
    "inflow_sum",
    "density_lower",
    "density_upper",
    "outflow_nonnegative",
    "fd_free_flow",
    "fd_capacity",
    "fd_congested",
    "phase_transition",
)


@dataclass(frozen=True)
class TraceRecord:
    """One closed-loop step: state x[k], applied u[k], outflow z[k] and the phase pair."""
    k: int
    x: np.ndarray
    u: np.ndarray
    z: np.ndarray
    zeta: int
    gamma: int
    outlet_outflow_sum: float

    def to_dict(self) -> Dict[str, Any]:
        return {"k": self.k, "x": self.x.tolist(), "u": self.u.tolist(), "z": self.z.tolist(),
                "zeta": self.zeta, "gamma": self.gamma,
                "outlet_outflow_sum": self.outlet_outflow_sum}


@dataclass(frozen=True)
class Violation:
    """A failed atom: margin is the amount by which the inequality fails."""
    k: int
    formula: str
    road: Optional[int]
    margin: float

    def to_dict(self) -> Dict[str, Any]:
        return {"k": self.k, "formula": self.formula, "road": self.road, "margin": self.margin}


@dataclass(frozen=True)
class LivenessVerdict:
    satisfied: bool
    k_s: Optional[int] = None

    def describe(self) -> str:
        return f"SatisfiedAt {self.k_s}" if self.satisfied else "NotYetSatisfied"


@dataclass
class Verdict:
    safety_violations: List[Violation]
    liveness: LivenessVerdict
    epsilon: float
    hold_window: int
    certificate: Optional['EpsilonCertificate'] = None

    @property
    def safe(self) -> bool:
        return not self.safety_violations

    def to_dict(self) -> Dict[str, Any]:
        return {
            "safe": self.safe,
            "safety_violations": [v.to_dict() for v in self.safety_violations],
            "liveness": self.liveness.describe(),
            "k_s": self.liveness.k_s,
            "epsilon": self.epsilon,
            "hold_window": self.hold_window,
            "certificate": self.certificate.to_dict() if self.certificate else None,
        }

    def render(self) -> str:
        """Plain-text verdict, one fact per line."""
        lines = [
            f"safety: {'OK' if self.safe else 'VIOLATED'} ({len(self.safety_violations)} violations)",
            f"liveness: {self.liveness.describe()}",
            f"epsilon: {self.epsilon!r}",
            f"hold_window: {self.hold_window}",
        ]
        if self.certificate is not None:
            c = self.certificate
            lines.append(f"certificate: delta1={c.delta1!r} delta2={c.delta2!r} epsilon={c.epsilon!r}")
        for v in self.safety_violations:
            road = "-" if v.road is None else v.road
            lines.append(f"violation k={v.k} {v.formula} road={road} margin={v.margin!r}")
        return "\n".join(lines) + "\n"


def _profile(fd: Union[FdParams, FdProfile], size: int) -> FdProfile:
    return fd if isinstance(fd, FdProfile) else FdProfile.uniform(size, fd)


def check_safety(rec: TraceRecord, fd: Union[FdParams, FdProfile], u0: float,
                 schedule: Optional[PhaseSchedule] = None,
                 road_ids: Optional[Sequence[int]] = None,
                 inlet_ids: Optional[Sequence[int]] = None,
                 tol: float = ATOM_TOL) -> List[Violation]:
    """All failed safety atoms of one record.

    The fundamental-diagram caps are only evaluated on roads whose density
    lies in [0, rho_max]; out-of-range densities are reported once by the
    density atoms.

    Args:
        rec: Trace record
        fd: Fundamental diagram (global or per road)
        u0: Net inflow
        schedule: Enables the phase-transition atom when given
        road_ids: Road ids in matrix order, for naming roads
        inlet_ids: Inlet road ids in input order, for naming inflow entries
        tol: Absolute tolerance of every numeric atom

    Returns:
        Violations in atom order, then road order
    """
    x, u, z = (np.asarray(a, dtype=float) for a in (rec.x, rec.u, rec.z))
    profile = _profile(fd, x.shape[0])
    road_of = (lambda i: road_ids[i]) if road_ids is not None else (lambda i: i)
    inlet_of = (lambda j: inlet_ids[j]) if inlet_ids is not None else (lambda j: j)
    found: List[Violation] = []

    def emit(formula: str, road, margins: np.ndarray) -> None:
        for i in np.flatnonzero(margins > tol):
            found.append(Violation(rec.k, formula, road(int(i)), float(margins[i])))

    emit("inflow_nonnegative", inlet_of, -u)
    emit("inflow_bound", inlet_of, u - u0)
    total = float(np.sum(u))
    if abs(total - u0) > tol:
        found.append(Violation(rec.k, "inflow_sum", None, abs(total - u0)))

    emit("density_lower", road_of, -x)
    emit("density_upper", road_of, x - profile.rho_max)
    emit("outflow_nonnegative", road_of, -z)

    in_range = (x >= -tol) & (x <= profile.rho_max + tol)
    free_flow = np.where(in_range, z - profile.left_slope * x, 0.0)
    capacity = np.where(in_range, z - profile.z_max, 0.0)
    congested = np.where(in_range, z - (profile.right_intercept - profile.right_slope * x), 0.0)
    emit("fd_free_flow", road_of, free_flow)
    emit("fd_capacity", road_of, capacity)
    emit("fd_congested", road_of, congested)

    if schedule is not None and not schedule.is_valid_transition(rec.zeta, rec.gamma):
        found.append(Violation(rec.k, "phase_transition", None, 1.0))
    return found


def _outlet_errors(trace: Sequence[Union[TraceRecord, float]], u0: float) -> np.ndarray:
    sums = [r.outlet_outflow_sum if isinstance(r, TraceRecord) else float(r) for r in trace]
    return np.abs(np.asarray(sums, dtype=float) - u0)


def check_liveness(trace: Sequence[Union[TraceRecord, float]], u0: float, eps: float,
                   hold_window: int) -> LivenessVerdict:
    """First k_s after which |sum of outlet outflow - u0| < eps holds through the trace end.

    The tail from k_s must span at least hold_window steps. Plain floats
    are accepted in place of records and are indexed from 0.
    """
    if len(trace) == 0:
        raise EmptyTraceError("Liveness needs at least one trace record")
    if eps <= 0:
        raise ValueError(f"eps must be positive, got {eps}")
    if hold_window < 1:
        raise ValueError(f"hold_window must be at least 1, got {hold_window}")

    errors = _outlet_errors(trace, u0)
    failing = np.flatnonzero(errors >= eps)
    start = int(failing[-1]) + 1 if failing.size else 0
    if len(trace) - start < hold_window:
        return LivenessVerdict(satisfied=False)
    first = trace[start]
    k_s = first.k if isinstance(first, TraceRecord) else start
    return LivenessVerdict(satisfied=True, k_s=k_s)


@dataclass(frozen=True)
class EpsilonCertificate:
    """Measured error terms bounding the liveness gap after k_s.

    delta1 bounds the change of total density per step and delta2 the
    mismatch between routed and discharged outflow; epsilon = delta1 + delta2.
    """
    delta1: float
    delta2: float
    k_s: int

    @property
    def epsilon(self) -> float:
        return self.delta1 + self.delta2

    def to_dict(self) -> Dict[str, float]:
        return {"delta1": self.delta1, "delta2": self.delta2, "epsilon": self.epsilon, "k_s": self.k_s}


def epsilon_certificate(trace: Sequence[TraceRecord], k_s: int,
                        mats_per_phase: Sequence[PhaseMatrices],
                        outlet_positions: Sequence[int]) -> EpsilonCertificate:
    """delta1 = sup |sum x[k+1] - sum x[k]| and delta2 = sup |1'(Q - I) z[k] + sum_out z[k]| for k >= k_s."""
    if len(trace) == 0:
        raise EmptyTraceError("Certificate needs at least one trace record")
    tail = [r for r in trace if r.k >= k_s]
    delta1 = 0.0
    for current, following in zip(tail, tail[1:]):
        delta1 = max(delta1, abs(float(np.sum(following.x) - np.sum(current.x))))
    delta2 = 0.0
    outlets = list(outlet_positions)
    for rec in tail:
        Q = mats_per_phase[rec.zeta].Q
        routed = float(np.sum((Q - np.eye(Q.shape[0])) @ rec.z))
        delta2 = max(delta2, abs(routed + float(np.sum(rec.z[outlets]))))
    return EpsilonCertificate(delta1=delta1, delta2=delta2, k_s=k_s)
