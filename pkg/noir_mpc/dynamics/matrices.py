"""Per-phase probability matrices and the switching state-space update.

The traffic state evolves as x[k+1] = A(zeta[k]) x[k] + B u[k] with
A = I + (Q - I) P, where P holds per-road outflow probabilities and
Q[j, i] the fraction of road i's outflow routed to road j.
"""

import logging
from dataclasses import dataclass
from typing import List, Mapping, Optional, Sequence, Set, Union

import numpy as np

from ..core.network import NoirPhase, PhaseSchedule, RoadNetwork, active_phase
from ..utils.exceptions import (
    DensityOutOfRangeError,
    NegativeInflowError,
    Property3ViolationError,
    Property4ViolationError,
    Property5ViolationError,
    Property6ViolationError,
    Property7ViolationError,
    SplitNotNormalizedError,
)

logger = logging.getLogger(__name__)

TableValue = Union[float, Sequence[float]]
PTable = Mapping[int, TableValue]
QTable = Mapping[int, Mapping[int, TableValue]]

DEFAULT_P_ON = 0.8
DEFAULT_P_OFF = 0.05
SPLIT_TOL = 1e-9
STATE_TOL = 1e-9


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.array(array, dtype=float)
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class PhaseMatrices:
    """P, Q and A of one NOIR phase."""
    P: np.ndarray
    Q: np.ndarray
    A: np.ndarray
    zeta: int = 0

    @property
    def p(self) -> np.ndarray:
        """Diagonal of P."""
        return np.diag(self.P)


@dataclass(frozen=True)
class InputMatrix:
    """Inlet selector B: column j injects u_j into the j-th inlet road."""
    B: np.ndarray

    @property
    def n_inputs(self) -> int:
        return self.B.shape[1]


@dataclass(frozen=True)
class TrafficState:
    """Road densities at discrete time k."""
    x: np.ndarray
    k: int = 0

    @classmethod
    def zeros(cls, size: int, k: int = 0) -> 'TrafficState':
        return cls(x=np.zeros(size), k=k)

    @property
    def total(self) -> float:
        return float(np.sum(self.x))


def _validate_p(network: RoadNetwork, p: np.ndarray) -> None:
    for position, value in enumerate(p):
        if not (0.0 < value <= 1.0) or not np.isfinite(value):
            road = network.roads[position]
            raise Property3ViolationError(f"p of road {road} is {value!r}, not in (0, 1]", road=road)


def _validate_and_normalize_q(network: RoadNetwork, Q: np.ndarray, split_tol: float) -> np.ndarray:
    Q = np.array(Q, dtype=float)
    roads = network.roads
    n = network.size
    if Q.shape != (n, n):
        raise Property4ViolationError(f"Q has shape {Q.shape}, expected {(n, n)}")

    bad = np.argwhere((Q < 0) | (Q > 1) | ~np.isfinite(Q))
    if bad.size:
        j, i = bad[0]
        raise Property4ViolationError(
            f"Q[{roads[j]}, {roads[i]}] = {Q[j, i]!r} outside [0, 1]",
            road=roads[i], entry=(roads[j], roads[i]),
        )

    diagonal = np.flatnonzero(np.diag(Q))
    if diagonal.size:
        i = diagonal[0]
        raise Property5ViolationError(f"Q[{roads[i]}, {roads[i]}] = {Q[i, i]!r} is not 0",
                                      road=roads[i], entry=(roads[i], roads[i]))

    both = np.argwhere((Q != 0) & (Q.T != 0))
    if both.size:
        j, i = both[0]
        raise Property6ViolationError(
            f"Q[{roads[j]}, {roads[i]}] and Q[{roads[i]}, {roads[j]}] are both nonzero",
            road=roads[i], entry=(roads[j], roads[i]),
        )

    support = np.zeros((n, n), dtype=bool)
    for i, j in network.graph.edges():
        support[network.index[j], network.index[i]] = True
    off_edge = np.argwhere((Q != 0) & ~support)
    if off_edge.size:
        j, i = off_edge[0]
        raise Property7ViolationError(
            f"road {roads[i]} sends a fraction to road {roads[j]}, which is not an out-neighbor",
            road=roads[i], entry=(roads[j], roads[i]),
        )

    sums = Q.sum(axis=0)
    for i, road in enumerate(roads):
        if network.is_outlet(road):
            if sums[i] != 0:
                raise Property7ViolationError(f"outlet road {road} column sums to {sums[i]!r}",
                                              road=road)
            continue
        if abs(sums[i] - 1.0) > split_tol:
            raise SplitNotNormalizedError(road, float(sums[i]))
        Q[:, i] /= sums[i]
    return Q


def uniform_split(network: RoadNetwork) -> np.ndarray:
    """Tendency matrix splitting every road's outflow evenly over its out-neighbors."""
    n = network.size
    Q = np.zeros((n, n))
    for road in network.roads:
        successors = network.out_neighbors(road)
        if not successors:
            continue
        i = network.index[road]
        for successor in successors:
            Q[network.index[successor], i] = 1.0 / len(successors)
    return Q


def served_roads(network: RoadNetwork, phase: Optional[NoirPhase]) -> Set[int]:
    """Roads discharging at full rate: tails of enabled edges, plus every outlet."""
    served = set(network.outlet_ids)
    if phase is not None:
        served |= {i for i, _ in phase.enabled_edges}
    return served


def default_outflow_probabilities(network: RoadNetwork, phase: Optional[NoirPhase],
                                  p_on: float = DEFAULT_P_ON,
                                  p_off: float = DEFAULT_P_OFF,
                                  p_outlet: Optional[float] = None) -> np.ndarray:
    """p_on for served roads, p_off for roads held at a red light.

    Outlets use p_outlet when it is given, p_on otherwise.
    """
    served = served_roads(network, phase)
    outlets = set(network.outlet_ids) if p_outlet is not None else set()
    return np.array([p_outlet if road in outlets else p_on if road in served else p_off
                     for road in network.roads])


def build_phase_matrices(network: RoadNetwork, phase: Optional[NoirPhase] = None,
                         p: Optional[Sequence[float]] = None,
                         q: Optional[np.ndarray] = None,
                         p_on: float = DEFAULT_P_ON, p_off: float = DEFAULT_P_OFF,
                         p_outlet: Optional[float] = None,
                         split_tol: float = SPLIT_TOL) -> PhaseMatrices:
    """Build and validate P, Q and A = I + (Q - I) P for one phase.

    Args:
        network: Road network
        phase: Active NOIR phase; selects the default outflow probabilities
        p: Outflow probability per road in matrix order (defaults from phase)
        q: N x N tendency matrix, Q[j, i] = share of road i sent to road j
            (defaults to a uniform split)
        p_on: Default probability of a served road
        p_off: Default probability of a road held at red
        p_outlet: Default probability of an outlet (p_on when None)
        split_tol: Column-sum tolerance before renormalization

    Returns:
        Validated PhaseMatrices
    """
    if p is None:
        p_vec = default_outflow_probabilities(network, phase, p_on, p_off, p_outlet)
    else:
        p_vec = np.asarray(p, dtype=float)
        if p_vec.shape != (network.size,):
            raise Property3ViolationError(f"p has shape {p_vec.shape}, expected ({network.size},)")
    _validate_p(network, p_vec)

    Q = uniform_split(network) if q is None else q
    Q = _validate_and_normalize_q(network, Q, split_tol)

    P = np.diag(p_vec)
    identity = np.eye(network.size)
    A = identity + (Q - identity) @ P
    zeta = phase.zeta if phase is not None else 0
    return PhaseMatrices(P=_frozen(P), Q=_frozen(Q), A=_frozen(A), zeta=zeta)


def _table_entry(value: TableValue, zeta: int, cycle_length: int) -> float:
    if isinstance(value, (list, tuple, np.ndarray)):
        if len(value) != cycle_length:
            raise ValueError(f"Per-phase table entry has {len(value)} values, expected {cycle_length}")
        return float(value[zeta])
    return float(value)


def build_phase_matrix_set(network: RoadNetwork, schedule: PhaseSchedule,
                           p_table: Optional[PTable] = None,
                           q_table: Optional[QTable] = None,
                           p_on: float = DEFAULT_P_ON, p_off: float = DEFAULT_P_OFF,
                           p_outlet: Optional[float] = None,
                           split_tol: float = SPLIT_TOL) -> List[PhaseMatrices]:
    """PhaseMatrices for every NOIR phase index 0..n_c-1.

    Table entries override the defaults; a value may be a scalar (all
    phases) or a list with one value per NOIR phase.
    """
    p_table = p_table or {}
    q_table = q_table or {}
    n_c = schedule.cycle_length
    base_q = uniform_split(network)
    matrices = []
    for zeta in range(n_c):
        phase = active_phase(schedule, zeta)
        p = default_outflow_probabilities(network, phase, p_on, p_off, p_outlet)
        for road, value in p_table.items():
            p[network.position(road)] = _table_entry(value, zeta, n_c)

        Q = base_q.copy()
        for road, splits in q_table.items():
            i = network.position(road)
            Q[:, i] = 0.0
            for successor, value in splits.items():
                Q[network.position(successor), i] = _table_entry(value, zeta, n_c)

        matrices.append(build_phase_matrices(network, phase, p=p, q=Q, split_tol=split_tol))
    logger.debug(f"Built phase matrices for {n_c} NOIR phases")
    return matrices


def build_input_matrix(network: RoadNetwork) -> InputMatrix:
    """B[i, j] = 1 iff road i is the j-th inlet."""
    B = np.zeros((network.size, network.n_inlets))
    for j, road in enumerate(network.inlet_ids):
        B[network.index[road], j] = 1.0
    return InputMatrix(B=_frozen(B))


def outflows(state: TrafficState, mats: PhaseMatrices) -> np.ndarray:
    """z = P x."""
    return mats.P @ state.x


def network_inflows(state: TrafficState, mats: PhaseMatrices) -> np.ndarray:
    """y = Q z: inflow each road receives from its in-neighbors."""
    return mats.Q @ outflows(state, mats)


def step(state: TrafficState, mats: PhaseMatrices, B: InputMatrix, u: Sequence[float],
         rho_max: Optional[Union[float, np.ndarray]] = None,
         tol: float = STATE_TOL,
         roads: Optional[Sequence[int]] = None) -> TrafficState:
    """Advance one step: x' = A x + B u.

    Args:
        state: Current densities
        mats: Matrices of the phase active at state.k
        B: Input matrix
        u: Boundary inflow per inlet, non-negative
        rho_max: Jam density (scalar or per road); checked when given
        tol: Absolute tolerance of the density range check
        roads: Road ids in matrix order, used to name an offending road

    Returns:
        TrafficState at k + 1
    """
    u = np.asarray(u, dtype=float)
    if u.shape != (B.n_inputs,):
        raise ValueError(f"Inflow vector has shape {u.shape}, expected ({B.n_inputs},)")
    negative = np.flatnonzero(u < 0)
    if negative.size:
        raise NegativeInflowError(int(negative[0]), float(u[negative[0]]))

    x_next = mats.A @ state.x + B.B @ u

    upper = np.inf if rho_max is None else np.broadcast_to(np.asarray(rho_max, dtype=float), x_next.shape)
    bad = np.flatnonzero((x_next < -tol) | (x_next > upper + tol))
    if bad.size:
        i = int(bad[0])
        limit = float(upper if np.isscalar(upper) else upper[i])
        road = roads[i] if roads is not None else i
        raise DensityOutOfRangeError(road, float(x_next[i]), limit)
    return TrafficState(x=x_next, k=state.k + 1)
