"""Trapezoidal fundamental diagram limiting the admissible road outflow."""

from dataclasses import dataclass
from typing import Dict, Mapping, Optional

import numpy as np

from ..utils.exceptions import ConfigurationError, DensityOutOfRangeError


@dataclass(frozen=True)
class FdParams:
    """Fundamental diagram breakpoints of one road (vehicles, vehicles/step)."""
    z_max: float = 20.0
    rho_min: float = 20.0
    rho_mid: float = 40.0
    rho_max: float = 55.0

    def __post_init__(self):
        if not self.z_max > 0:
            raise ConfigurationError(f"z_max must be positive, got {self.z_max}")
        if not 0 < self.rho_min < self.rho_mid < self.rho_max:
            raise ConfigurationError(
                "Fundamental diagram needs 0 < rho_min < rho_mid < rho_max, got "
                f"({self.rho_min}, {self.rho_mid}, {self.rho_max})"
            )

    @property
    def left_slope(self) -> float:
        """Slope of the free-flow branch, z_max / rho_min."""
        return self.z_max / self.rho_min

    @property
    def right_slope(self) -> float:
        """Magnitude of the congested-branch slope, z_max / (rho_max - rho_mid)."""
        return self.z_max / (self.rho_max - self.rho_mid)

    def to_dict(self) -> Dict[str, float]:
        return {"z_max": self.z_max, "rho_min": self.rho_min,
                "rho_mid": self.rho_mid, "rho_max": self.rho_max}


def fd_outflow_cap(rho: float, fd: FdParams) -> float:
    """Largest outflow the fundamental diagram admits at density rho."""
    if rho < 0 or rho > fd.rho_max:
        raise DensityOutOfRangeError(None, rho, fd.rho_max)
    left = fd.left_slope * rho
    right = fd.z_max * (rho - fd.rho_max) / (fd.rho_mid - fd.rho_max)
    return max(0.0, min(left, fd.z_max, right))


class FdProfile:
    """Per-road fundamental diagram vectors in matrix order.

    Built from the global parameters with optional per-road overrides.
    """

    def __init__(self, size: int, default: FdParams,
                 overrides: Optional[Mapping[int, FdParams]] = None):
        self.size = size
        self.default = default
        self.overrides: Dict[int, FdParams] = dict(overrides or {})
        params = [self.overrides.get(i, default) for i in range(size)]
        self.z_max = np.array([p.z_max for p in params], dtype=float)
        self.rho_min = np.array([p.rho_min for p in params], dtype=float)
        self.rho_mid = np.array([p.rho_mid for p in params], dtype=float)
        self.rho_max = np.array([p.rho_max for p in params], dtype=float)

    @classmethod
    def uniform(cls, size: int, fd: FdParams) -> 'FdProfile':
        return cls(size, fd)

    @property
    def left_slope(self) -> np.ndarray:
        return self.z_max / self.rho_min

    @property
    def right_slope(self) -> np.ndarray:
        return self.z_max / (self.rho_max - self.rho_mid)

    @property
    def right_intercept(self) -> np.ndarray:
        """z_max * rho_max / (rho_max - rho_mid): the congested branch at zero density."""
        return self.z_max * self.rho_max / (self.rho_max - self.rho_mid)

    def params_at(self, position: int) -> FdParams:
        return self.overrides.get(position, self.default)

    def caps(self, x: np.ndarray) -> np.ndarray:
        """Vectorised fd_outflow_cap for densities already inside [0, rho_max]."""
        left = self.left_slope * x
        right = self.right_intercept - self.right_slope * x
        return np.maximum(0.0, np.minimum(np.minimum(left, self.z_max), right))
