"""Road network graph, junction movement phases and the cyclic phase schedule."""

import logging
from dataclasses import dataclass
from math import lcm
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Set, Tuple

import networkx as nx

from ..utils.exceptions import (
    AntiparallelEdgeError,
    DuplicateRoadIdError,
    EmptyCycleError,
    IsolatedRoadError,
    PhaseEdgeNotAtJunctionError,
    SelfLoopError,
    UnknownRoadIdError,
)

logger = logging.getLogger(__name__)

Edge = Tuple[int, int]


class RoadNetwork:
    """Directed graph whose nodes are unidirectional roads.

    Wraps a networkx DiGraph. Road ids are the user-facing integers; the
    position of a road in ``roads`` is its row/column in every matrix.
    """

    def __init__(self, graph: nx.DiGraph, roads: Sequence[int],
                 names: Optional[Mapping[int, str]] = None,
                 directions: Optional[Mapping[int, str]] = None):
        self.graph = graph
        self.roads: Tuple[int, ...] = tuple(roads)
        self.index: Dict[int, int] = {road: i for i, road in enumerate(self.roads)}
        self.inlet_ids: Tuple[int, ...] = tuple(r for r in self.roads if graph.in_degree(r) == 0)
        self.outlet_ids: Tuple[int, ...] = tuple(r for r in self.roads if graph.out_degree(r) == 0)
        boundary = set(self.inlet_ids) | set(self.outlet_ids)
        self.interior_ids: Tuple[int, ...] = tuple(r for r in self.roads if r not in boundary)
        self.names: Dict[int, str] = dict(names or {})
        self.directions: Dict[int, str] = dict(directions or {})

    @property
    def size(self) -> int:
        """Number of roads N."""
        return len(self.roads)

    @property
    def n_inlets(self) -> int:
        return len(self.inlet_ids)

    @property
    def edges(self) -> FrozenSet[Edge]:
        return frozenset(self.graph.edges())

    def sorted_edges(self) -> List[Edge]:
        """Edges in matrix order (tail index, then head index)."""
        return sorted(self.graph.edges(), key=lambda e: (self.index[e[0]], self.index[e[1]]))

    def has_edge(self, i: int, j: int) -> bool:
        return self.graph.has_edge(i, j)

    def position(self, road: int) -> int:
        """0-based matrix index of a road id."""
        try:
            return self.index[road]
        except KeyError:
            raise UnknownRoadIdError(road) from None

    def out_neighbors(self, road: int) -> List[int]:
        self.position(road)
        return sorted(self.graph.successors(road), key=self.index.__getitem__)

    def in_neighbors(self, road: int) -> List[int]:
        self.position(road)
        return sorted(self.graph.predecessors(road), key=self.index.__getitem__)

    def is_outlet(self, road: int) -> bool:
        return self.graph.out_degree(road) == 0

    def __repr__(self) -> str:
        return (f"RoadNetwork(N={self.size}, |E|={self.graph.number_of_edges()}, "
                f"inlets={len(self.inlet_ids)}, outlets={len(self.outlet_ids)})")


def build_network(roads: Iterable[int], edges: Iterable[Sequence[int]],
                  names: Optional[Mapping[int, str]] = None,
                  directions: Optional[Mapping[int, str]] = None) -> RoadNetwork:
    """Build and validate a NOIR graph.

    Args:
        roads: Road ids, unique; their order fixes the matrix layout
        edges: Ordered pairs (i, j), traffic flowing from road i to road j
        names: Optional street names keyed by road id
        directions: Optional travel directions keyed by road id

    Returns:
        Validated RoadNetwork with inlet/outlet/interior partition
    """
    road_list = list(roads)
    graph = nx.DiGraph()
    for road in road_list:
        if road in graph:
            raise DuplicateRoadIdError(road)
        graph.add_node(road)

    for edge in edges:
        i, j = edge
        if i not in graph:
            raise UnknownRoadIdError(i)
        if j not in graph:
            raise UnknownRoadIdError(j)
        if i == j:
            raise SelfLoopError(i)
        if graph.has_edge(j, i):
            raise AntiparallelEdgeError(j, i)
        graph.add_edge(i, j)

    for road in road_list:
        if graph.in_degree(road) == 0 and graph.out_degree(road) == 0:
            raise IsolatedRoadError(road)

    network = RoadNetwork(graph, road_list, names=names, directions=directions)
    logger.debug(f"Built {network!r}")
    return network


def neighbors(network: RoadNetwork, i: int) -> Tuple[Set[int], Set[int]]:
    """Return (in-neighbors, out-neighbors) of road i."""
    return set(network.in_neighbors(i)), set(network.out_neighbors(i))


@dataclass(frozen=True)
class MovementPhase:
    """Edges given right-of-way at one junction while the phase is active."""
    junction_id: int
    edge_subset: FrozenSet[Edge]

    def incoming_roads(self) -> List[int]:
        return sorted({i for i, _ in self.edge_subset})


@dataclass(frozen=True)
class NoirPhase:
    """Active NOIR phase at a discrete time."""
    zeta: int
    gamma: int
    junction_phases: Dict[int, MovementPhase]

    @property
    def enabled_edges(self) -> FrozenSet[Edge]:
        edges: Set[Edge] = set()
        for phase in self.junction_phases.values():
            edges |= phase.edge_subset
        return frozenset(edges)


@dataclass(frozen=True)
class PhaseSchedule:
    """Per-junction phase cycles rotated concurrently; period is their lcm."""
    junction_cycles: Dict[int, Tuple[MovementPhase, ...]]
    cycle_length: int

    @property
    def junction_ids(self) -> List[int]:
        return sorted(self.junction_cycles)

    @property
    def r_vector(self) -> Tuple[int, ...]:
        return tuple(len(self.junction_cycles[j]) for j in self.junction_ids)

    def local_phase(self, junction: int, k: int) -> MovementPhase:
        cycle = self.junction_cycles[junction]
        return cycle[k % len(cycle)]

    def enabled_edges(self, zeta: int) -> FrozenSet[Edge]:
        return active_phase(self, zeta).enabled_edges

    def served_roads(self, zeta: int) -> Set[int]:
        """Roads whose outgoing movement is enabled at NOIR phase zeta."""
        return {i for i, _ in self.enabled_edges(zeta)}

    def signature(self, zeta: int) -> Tuple[int, ...]:
        """Position of every junction's local phase at NOIR phase zeta, in junction id order."""
        return tuple(zeta % len(self.junction_cycles[j]) for j in self.junction_ids)

    def transitions(self) -> Set[Tuple[int, int]]:
        """Visited cycle-graph transitions (zeta, gamma) of one NOIR cycle."""
        return {(z, (z + 1) % self.cycle_length) for z in range(self.cycle_length)}

    def is_valid_transition(self, zeta: int, gamma: int) -> bool:
        if not (0 <= zeta < self.cycle_length and 0 <= gamma < self.cycle_length):
            return False
        return (zeta, gamma) in self.transitions()


def build_phase_schedule(cycles: Mapping[int, Sequence[MovementPhase]],
                         network: Optional[RoadNetwork] = None,
                         junction_roads: Optional[Mapping[int, Iterable[int]]] = None) -> PhaseSchedule:
    """Validate per-junction phase lists and compute the NOIR cycle length.

    Args:
        cycles: Ordered phase list per junction id; repetition encodes duration
        network: When given, every phase edge must be a network edge
        junction_roads: When given, every phase edge must have its tail or
            head among the roads declared at the owning junction

    Returns:
        PhaseSchedule whose cycle_length is the lcm of the list lengths
    """
    junction_cycles: Dict[int, Tuple[MovementPhase, ...]] = {}
    for junction, phases in cycles.items():
        phases = tuple(phases)
        if not phases:
            raise EmptyCycleError(junction)
        declared = set(junction_roads[junction]) if junction_roads and junction in junction_roads else None
        for phase in phases:
            if phase.junction_id != junction:
                raise PhaseEdgeNotAtJunctionError(junction, next(iter(phase.edge_subset), ()))
            for edge in sorted(phase.edge_subset):
                if network is not None:
                    i, j = edge
                    network.position(i)
                    network.position(j)
                    if not network.has_edge(i, j):
                        raise PhaseEdgeNotAtJunctionError(junction, edge)
                if declared is not None and edge[0] not in declared and edge[1] not in declared:
                    raise PhaseEdgeNotAtJunctionError(junction, edge)
        junction_cycles[junction] = phases

    cycle_length = lcm(*(len(p) for p in junction_cycles.values())) if junction_cycles else 1
    logger.debug(f"Phase schedule with {len(junction_cycles)} junctions, n_c = {cycle_length}")
    return PhaseSchedule(junction_cycles=junction_cycles, cycle_length=cycle_length)


def active_phase(schedule: PhaseSchedule, k: int) -> NoirPhase:
    """NOIR phase index zeta[k] = k mod n_c, its successor and the local phases."""
    if k < 0:
        raise ValueError(f"Discrete time must be non-negative, got {k}")
    n_c = schedule.cycle_length
    zeta = k % n_c
    gamma = (k + 1) % n_c
    junction_phases = {j: schedule.junction_cycles[j][position]
                       for j, position in zip(schedule.junction_ids, schedule.signature(zeta))}
    return NoirPhase(zeta=zeta, gamma=gamma, junction_phases=junction_phases)
