"""Switching traffic dynamics: fundamental diagram, phase matrices, stability."""

from .fundamental_diagram import FdParams, FdProfile, fd_outflow_cap
from .matrices import (
    InputMatrix,
    PhaseMatrices,
    TrafficState,
    build_input_matrix,
    build_phase_matrices,
    build_phase_matrix_set,
    outflows,
    step,
)
from .stability import StabilityReport, spectral_radius, stability_report

__all__ = [
    "FdParams", "FdProfile", "fd_outflow_cap",
    "InputMatrix", "PhaseMatrices", "TrafficState",
    "build_input_matrix", "build_phase_matrices", "build_phase_matrix_set",
    "outflows", "step",
    "StabilityReport", "spectral_radius", "stability_report",
]
