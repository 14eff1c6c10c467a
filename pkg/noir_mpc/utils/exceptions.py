"""Custom exceptions for the NOIR boundary-inflow controller."""

from typing import Any, Optional


class NoirError(Exception):
    """Base exception for all NOIR modelling and control errors."""
    pass


class ConfigurationError(NoirError):
    """Exception raised for configuration errors."""
    pass


# --- network model -------------------------------------------------------

class NetworkError(NoirError):
    """Exception raised when a road network is malformed."""
    pass


class AntiparallelEdgeError(NetworkError):
    """Both (i, j) and (j, i) were given as edges."""

    def __init__(self, i: int, j: int):
        self.edge = (i, j)
        super().__init__(f"Edges ({i}, {j}) and ({j}, {i}) are both present")


class SelfLoopError(NetworkError):
    """An edge connects a road to itself."""

    def __init__(self, road: int):
        self.road = road
        super().__init__(f"Road {road} has a self-loop")


class UnknownRoadIdError(NetworkError):
    """A road id is not part of the network."""

    def __init__(self, road: Any):
        self.road = road
        super().__init__(f"Unknown road id: {road}")


class DuplicateRoadIdError(NetworkError):
    """A road id was declared more than once."""

    def __init__(self, road: Any):
        self.road = road
        super().__init__(f"Duplicate road id: {road}")


class IsolatedRoadError(NetworkError):
    """A road has neither in- nor out-neighbors."""

    def __init__(self, road: int):
        self.road = road
        super().__init__(f"Road {road} has no in-neighbors and no out-neighbors")


class ScheduleError(NoirError):
    """Exception raised when a phase schedule is malformed."""
    pass


class EmptyCycleError(ScheduleError):
    """A junction was given no movement phases."""

    def __init__(self, junction: int):
        self.junction = junction
        super().__init__(f"Junction {junction} has an empty phase cycle")


class PhaseEdgeNotAtJunctionError(ScheduleError):
    """A phase enables an edge that does not touch its junction."""

    def __init__(self, junction: int, edge: tuple):
        self.junction = junction
        self.edge = edge
        super().__init__(f"Edge {edge} is not incident to junction {junction}")


# --- switching dynamics --------------------------------------------------

class DynamicsError(NoirError):
    """Exception raised by the switching traffic dynamics."""
    pass


class PropertyViolationError(DynamicsError):
    """A phase matrix violates one of the structural properties 3-7."""

    property_number: int = 0

    def __init__(self, message: str, road: Optional[int] = None,
                 entry: Optional[tuple] = None):
        self.road = road
        self.entry = entry
        super().__init__(f"Property {self.property_number} violated: {message}")


class Property3ViolationError(PropertyViolationError):
    """Outflow probability outside (0, 1]."""
    property_number = 3


class Property4ViolationError(PropertyViolationError):
    """Tendency probability outside [0, 1]."""
    property_number = 4


class Property5ViolationError(PropertyViolationError):
    """Nonzero diagonal tendency probability."""
    property_number = 5


class Property6ViolationError(PropertyViolationError):
    """Both Q[j, i] and Q[i, j] are nonzero."""
    property_number = 6


class Property7ViolationError(PropertyViolationError):
    """A tendency column does not sum to 0 (outlet) or 1 (otherwise)."""
    property_number = 7


class SplitNotNormalizedError(DynamicsError):
    """Split fractions of a road are too far from summing to one."""

    def __init__(self, road: int, total: float):
        self.road = road
        self.total = total
        super().__init__(f"Split fractions of road {road} sum to {total!r}, expected 1")


class NegativeInflowError(DynamicsError):
    """A boundary inflow entry is negative."""

    def __init__(self, index: int, value: float):
        self.index = index
        self.value = value
        super().__init__(f"Boundary inflow u[{index}] = {value!r} is negative")


class DensityOutOfRangeError(DynamicsError):
    """A density left the admissible interval [0, rho_max]."""

    def __init__(self, road: Optional[int], value: float, upper: float):
        self.road = road
        self.value = value
        self.upper = upper
        subject = f"Density of road {road}" if road is not None else "Density"
        super().__init__(f"{subject} is {value!r}, outside [0, {upper!r}]")


class PowerIterationNoConvergenceError(DynamicsError):
    """The spectral radius estimate did not settle."""

    def __init__(self, iterations: int):
        self.iterations = iterations
        super().__init__(f"Spectral radius did not converge after {iterations} iterations")


# --- control -------------------------------------------------------------

class ControlError(NoirError):
    """Exception raised while assembling or solving the MPC problem."""
    pass


class InfeasibleAtCurrentStateError(ControlError):
    """The measured state already violates the density upper bound."""

    def __init__(self, road: int, value: float, upper: float):
        self.road = road
        self.value = value
        self.upper = upper
        super().__init__(f"Road {road} density {value!r} already exceeds rho_max {upper!r}")


class NoInletError(ControlError):
    """The network has no inlet roads, so nothing can be controlled."""
    pass


class SolverError(ControlError):
    """Exception raised by the quadratic programming solver."""
    pass


class NotPositiveDefiniteError(SolverError):
    """The QP Hessian is not positive definite."""

    def __init__(self, min_eigenvalue: float):
        self.min_eigenvalue = min_eigenvalue
        super().__init__(f"Hessian is not positive definite (min eigenvalue {min_eigenvalue:.3e})")


class QpInfeasibleError(SolverError):
    """The QP has no feasible point."""

    def __init__(self, message: str, step: Optional[int] = None):
        self.step = step
        prefix = f"Step {step}: " if step is not None else ""
        super().__init__(f"{prefix}{message}")


class QpMaxIterationsError(SolverError):
    """The QP solver hit its iteration limit."""

    def __init__(self, iterations: int, step: Optional[int] = None):
        self.iterations = iterations
        self.step = step
        prefix = f"Step {step}: " if step is not None else ""
        super().__init__(f"{prefix}QP solver stopped after {iterations} iterations")


# --- monitor -------------------------------------------------------------

class MonitorError(NoirError):
    """Exception raised by the safety and liveness monitor."""
    pass


class EmptyTraceError(MonitorError):
    """A liveness check was asked for an empty trace."""
    pass


# --- scenarios and output ------------------------------------------------

class ScenarioError(NoirError):
    """Exception raised for scenario ingestion errors."""
    pass


class ParseError(ScenarioError):
    """A scenario document could not be parsed."""

    def __init__(self, message: str, path: Optional[str] = None,
                 field: Optional[str] = None, line: Optional[int] = None):
        self.path = path
        self.field = field
        self.line = line
        where = []
        if path:
            where.append(str(path))
        if line is not None:
            where.append(f"line {line}")
        if field:
            where.append(f"field '{field}'")
        location = f" ({', '.join(where)})" if where else ""
        super().__init__(f"{message}{location}")


class ScenarioValidationError(ScenarioError):
    """A scenario parsed but failed a model invariant."""

    def __init__(self, path: Optional[str], error: Exception):
        self.path = path
        self.error = error
        super().__init__(f"{path or '<scenario>'}: {error}")


class IoError(NoirError):
    """Exception raised when results cannot be written."""
    pass
