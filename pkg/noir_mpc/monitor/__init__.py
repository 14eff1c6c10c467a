"""Runtime safety and liveness monitor."""

from .spec_monitor import (
    EpsilonCertificate,
    LivenessVerdict,
    TraceRecord,
    Verdict,
    Violation,
    check_liveness,
    check_safety,
    epsilon_certificate,
)

__all__ = [
    "EpsilonCertificate", "LivenessVerdict", "TraceRecord", "Verdict", "Violation",
    "check_liveness", "check_safety", "epsilon_certificate",
]
