"""Closed-loop trace: per-step records, solver statistics and the monitor verdict."""

from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np

from ..control.controller import StepStats
from ..monitor.spec_monitor import TraceRecord, Verdict


@dataclass
class Trace:
    """Records of one run; ``status`` is 'completed' or names the reason it stopped."""
    records: List[TraceRecord] = field(default_factory=list)
    stats: List[StepStats] = field(default_factory=list)
    verdict: Optional[Verdict] = None
    status: str = "completed"
    error: Optional[str] = None
    steps_requested: int = 0
    final_state: Optional[np.ndarray] = None

    def __len__(self) -> int:
        return len(self.records)

    @property
    def completed(self) -> bool:
        return self.status == "completed"

    def densities(self) -> np.ndarray:
        """(T, N) densities x[k]."""
        return np.array([r.x for r in self.records])

    def inflows(self) -> np.ndarray:
        return np.array([r.u for r in self.records])

    def outflows(self) -> np.ndarray:
        return np.array([r.z for r in self.records])

    def outlet_outflow_sums(self) -> np.ndarray:
        return np.array([r.outlet_outflow_sum for r in self.records])

    def total_density(self) -> np.ndarray:
        return self.densities().sum(axis=1) if self.records else np.zeros(0)

    def summary(self) -> Dict[str, Any]:
        iterations = [s.iterations for s in self.stats]
        wall = [s.wall_time for s in self.stats]
        return {
            "status": self.status,
            "error": self.error,
            "steps_requested": self.steps_requested,
            "steps_recorded": len(self.records),
            "qp_iterations_total": int(sum(iterations)),
            "qp_iterations_max": int(max(iterations, default=0)),
            "qp_wall_time_total": float(sum(wall)),
            "fallback_steps": sum(1 for s in self.stats if s.method != "active_set"),
        }
