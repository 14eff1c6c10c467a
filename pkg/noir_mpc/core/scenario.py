"""Scenario documents: network, phase plan, traffic parameters and run settings."""

import json
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from .config import DynamicsConfig, MonitorConfig, NoirConfig
from .network import (
    MovementPhase,
    PhaseSchedule,
    RoadNetwork,
    build_network,
    build_phase_schedule,
)
from ..dynamics.fundamental_diagram import FdParams, FdProfile
from ..dynamics.matrices import (
    InputMatrix,
    PhaseMatrices,
    PTable,
    QTable,
    build_input_matrix,
    build_phase_matrix_set,
)
from ..utils.exceptions import (
    ConfigurationError,
    DensityOutOfRangeError,
    NoirError,
    ParseError,
    ScenarioValidationError,
)

logger = logging.getLogger(__name__)

RANDOM_X0_FRACTION = 0.25
DYNAMICS_KEYS = ("p_on", "p_off", "p_outlet")


def _check_run_settings(u0: float, beta: float, T: int) -> None:
    if u0 < 0:
        raise ConfigurationError(f"u0 must be non-negative, got {u0}")
    if beta < 0:
        raise ConfigurationError(f"beta must be non-negative, got {beta}")
    if T < 1:
        raise ConfigurationError(f"T must be at least 1, got {T}")


def _check_monitor_settings(eps: float, hold_window: int) -> None:
    if eps <= 0 or hold_window < 1:
        raise ConfigurationError("eps must be positive and hold_window at least 1")


@dataclass(frozen=True)
class Junction:
    """Roads entering and leaving one signalised junction."""
    id: int
    incoming: Tuple[int, ...]
    outgoing: Tuple[int, ...]

    @property
    def roads(self) -> Tuple[int, ...]:
        return self.incoming + self.outgoing


@dataclass
class Scenario:
    """A fully validated closed-loop experiment."""
    network: RoadNetwork
    schedule: PhaseSchedule
    fd: FdParams
    u0: float
    beta: float
    x0: np.ndarray
    T: int
    eps: float
    hold_window: int
    seed: int = 0
    name: str = "scenario"
    junctions: List[Junction] = field(default_factory=list)
    fd_overrides: Dict[int, FdParams] = field(default_factory=dict)
    p_table: Dict[int, Any] = field(default_factory=dict)
    q_table: Dict[int, Dict[int, Any]] = field(default_factory=dict)
    dynamics: Dict[str, float] = field(default_factory=dict)

    @property
    def cycle_length(self) -> int:
        return self.schedule.cycle_length

    def fd_profile(self) -> FdProfile:
        overrides = {self.network.position(road): fd for road, fd in self.fd_overrides.items()}
        return FdProfile(self.network.size, self.fd, overrides)

    def phase_matrices(self, dynamics: Optional[DynamicsConfig] = None) -> List[PhaseMatrices]:
        """Matrices of every NOIR phase; the scenario's own dynamics entries win over ``dynamics``."""
        dynamics = replace(dynamics or DynamicsConfig(), **self.dynamics)
        return build_phase_matrix_set(
            self.network, self.schedule, self.p_table, self.q_table,
            p_on=dynamics.p_on, p_off=dynamics.p_off, p_outlet=dynamics.p_outlet,
            split_tol=dynamics.split_tol,
        )

    def input_matrix(self) -> InputMatrix:
        return build_input_matrix(self.network)

    def with_overrides(self, **changes: Any) -> 'Scenario':
        """Copy with run settings replaced; None values are ignored.

        Raises:
            ScenarioValidationError: If a new value is out of range
        """
        changes = {key: value for key, value in changes.items() if value is not None}
        unknown = set(changes) - {"u0", "beta", "eps", "T", "seed", "hold_window"}
        if unknown:
            raise ConfigurationError(f"Cannot override scenario fields: {sorted(unknown)}")
        try:
            _check_run_settings(changes.get("u0", self.u0), changes.get("beta", self.beta),
                                changes.get("T", self.T))
            _check_monitor_settings(changes.get("eps", self.eps),
                                    changes.get("hold_window", self.hold_window))
        except ConfigurationError as e:
            raise ScenarioValidationError(None, e) from e
        return replace(self, **changes)

    @classmethod
    def from_dict(cls, data: Mapping[str, Any], config: Optional[NoirConfig] = None,
                  path: Optional[str] = None) -> 'Scenario':
        return _ScenarioParser(data, config or NoirConfig(), path).parse()

    def to_dict(self) -> Dict[str, Any]:
        """JSON-ready document accepted by ``from_dict``; phases are written as explicit edges."""
        network = self.network
        if network.names or network.directions:
            roads: List[Any] = [
                {key: value for key, value in (("id", road),
                                               ("name", network.names.get(road)),
                                               ("direction", network.directions.get(road)))
                 if value is not None}
                for road in network.roads
            ]
        else:
            roads = list(network.roads)

        phases = {
            str(junction): [{"edges": [list(e) for e in sorted(p.edge_subset)]} for p in cycle]
            for junction, cycle in sorted(self.schedule.junction_cycles.items())
        }
        fd = self.fd.to_dict()
        if self.fd_overrides:
            fd["overrides"] = {str(road): params.to_dict()
                               for road, params in sorted(self.fd_overrides.items())}

        return {
            "name": self.name,
            "roads": roads,
            "edges": [list(e) for e in network.sorted_edges()],
            "junctions": [
                {"id": j.id, "incoming": list(j.incoming), "outgoing": list(j.outgoing),
                 "r": len(self.schedule.junction_cycles.get(j.id, ()))}
                for j in self.junctions
            ],
            "phases": phases,
            "fd": fd,
            "dynamics": dict(self.dynamics),
            "p_table": {str(road): value for road, value in sorted(self.p_table.items())},
            "q_table": {str(road): {str(j): value for j, value in sorted(splits.items())}
                        for road, splits in sorted(self.q_table.items())},
            "u0": self.u0,
            "beta": self.beta,
            "x0": [float(v) for v in self.x0],
            "T": self.T,
            "eps": self.eps,
            "hold_window": self.hold_window,
            "seed": self.seed,
        }


class _ScenarioParser:
    """Turns a scenario document into a Scenario, naming the offending field on error."""

    def __init__(self, data: Mapping[str, Any], config: NoirConfig, path: Optional[str]):
        if not isinstance(data, Mapping):
            raise ParseError("Scenario document must be a JSON object", path=path)
        self.data = data
        self.config = config
        self.path = path

    def _error(self, message: str, field_name: str) -> ParseError:
        return ParseError(message, path=self.path, field=field_name)

    def _require(self, key: str) -> Any:
        if key not in self.data:
            raise self._error("Missing required field", key)
        return self.data[key]

    def _int(self, value: Any, field_name: str) -> int:
        if isinstance(value, bool) or not isinstance(value, (int, str)):
            raise self._error(f"Expected an integer id, got {value!r}", field_name)
        try:
            return int(value)
        except ValueError:
            raise self._error(f"Expected an integer id, got {value!r}", field_name) from None

    def _number(self, key: str, default: Any = None) -> Any:
        value = self.data.get(key, default)
        if value is None:
            return None
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise self._error(f"Expected a number, got {value!r}", key)
        return value

    def parse(self) -> Scenario:
        roads, names, directions = self._roads()
        edges = self._edges()
        junctions = self._junctions()
        try:
            network = build_network(roads, edges, names=names, directions=directions)
        except NoirError as e:
            raise ScenarioValidationError(self.path, e) from e

        cycles = self._phases(network, junctions)
        junction_roads = {j.id: j.roads for j in junctions} if junctions else None
        try:
            schedule = build_phase_schedule(cycles, network=network, junction_roads=junction_roads)
        except NoirError as e:
            raise ScenarioValidationError(self.path, e) from e

        fd, fd_overrides = self._fd()
        p_table, q_table = self._tables(schedule.cycle_length)
        scenario = self._settings(network, schedule, fd, fd_overrides, p_table, q_table, junctions)

        # Build every phase matrix once so property violations surface at load time
        try:
            scenario.phase_matrices(self.config.dynamics)
            scenario.fd_profile()
        except NoirError as e:
            raise ScenarioValidationError(self.path, e) from e
        except ValueError as e:
            raise self._error(str(e), "p_table/q_table") from e
        return scenario

    def _roads(self) -> Tuple[List[int], Dict[int, str], Dict[int, str]]:
        entries = self._require("roads")
        if not isinstance(entries, list):
            raise self._error("Expected a list of road ids", "roads")
        roads: List[int] = []
        names: Dict[int, str] = {}
        directions: Dict[int, str] = {}
        for position, entry in enumerate(entries):
            field_name = f"roads[{position}]"
            if isinstance(entry, Mapping):
                if "id" not in entry:
                    raise self._error("Road object needs an 'id'", field_name)
                road = self._int(entry["id"], field_name)
                if entry.get("name") is not None:
                    names[road] = str(entry["name"])
                if entry.get("direction") is not None:
                    directions[road] = str(entry["direction"])
            else:
                road = self._int(entry, field_name)
            roads.append(road)
        return roads, names, directions

    def _pair(self, value: Any, field_name: str) -> Tuple[int, int]:
        if not isinstance(value, (list, tuple)) or len(value) != 2:
            raise self._error(f"Expected a pair [i, j], got {value!r}", field_name)
        return self._int(value[0], field_name), self._int(value[1], field_name)

    def _edges(self) -> List[Tuple[int, int]]:
        entries = self._require("edges")
        if not isinstance(entries, list):
            raise self._error("Expected a list of [i, j] pairs", "edges")
        return [self._pair(entry, f"edges[{n}]") for n, entry in enumerate(entries)]

    def _junctions(self) -> List[Junction]:
        entries = self.data.get("junctions") or []
        if not isinstance(entries, list):
            raise self._error("Expected a list of junction objects", "junctions")
        junctions = []
        phases = self.data.get("phases") or {}
        for n, entry in enumerate(entries):
            field_name = f"junctions[{n}]"
            if not isinstance(entry, Mapping) or "id" not in entry:
                raise self._error("Junction object needs an 'id'", field_name)
            junction_id = self._int(entry["id"], f"{field_name}.id")
            incoming = tuple(self._int(r, f"{field_name}.incoming") for r in entry.get("incoming", []))
            outgoing = tuple(self._int(r, f"{field_name}.outgoing") for r in entry.get("outgoing", []))
            if entry.get("r") is not None:
                listed = phases.get(str(junction_id), phases.get(junction_id, []))
                if self._int(entry["r"], f"{field_name}.r") != len(listed):
                    raise self._error(
                        f"r = {entry['r']} but {len(listed)} phases are listed for junction {junction_id}",
                        f"{field_name}.r",
                    )
            junctions.append(Junction(junction_id, incoming, outgoing))
        return junctions

    def _phases(self, network: RoadNetwork,
                junctions: Sequence[Junction]) -> Dict[int, List[MovementPhase]]:
        entries = self.data.get("phases") or {}
        if not isinstance(entries, Mapping):
            raise self._error("Expected a mapping from junction id to phase list", "phases")
        declared = {j.id: j for j in junctions}
        cycles: Dict[int, List[MovementPhase]] = {}
        for key, phase_list in entries.items():
            field_name = f"phases.{key}"
            junction_id = self._int(key, field_name)
            if declared and junction_id not in declared:
                raise self._error(f"Junction {junction_id} is not declared", field_name)
            if not isinstance(phase_list, list):
                raise self._error("Expected a list of phases", field_name)
            junction = declared.get(junction_id)
            cycle = []
            for n, phase in enumerate(phase_list):
                cycle.append(MovementPhase(junction_id, frozenset(
                    self._phase_edges(network, junction, phase, f"{field_name}[{n}]"))))
            cycles[junction_id] = cycle
        return cycles

    def _phase_edges(self, network: RoadNetwork, junction: Optional[Junction], phase: Any,
                     field_name: str) -> List[Tuple[int, int]]:
        if not isinstance(phase, Mapping) or not ({"edges", "active"} & set(phase)):
            raise self._error("Phase must be {'edges': [...]} or {'active': [...]}", field_name)
        if "edges" in phase:
            return [self._pair(e, f"{field_name}.edges") for e in phase["edges"]]
        edges = []
        for value in phase["active"]:
            road = self._int(value, f"{field_name}.active")
            if road not in network.index:
                raise self._error(f"Unknown road id {road}", f"{field_name}.active")
            for successor in network.out_neighbors(road):
                if junction is None or not junction.outgoing or successor in junction.outgoing:
                    edges.append((road, successor))
        return edges

    def _fd(self) -> Tuple[FdParams, Dict[int, FdParams]]:
        data = dict(self.data.get("fd") or {})
        overrides_data = data.pop("overrides", None) or {}
        try:
            fd = FdParams(**data)
            overrides = {}
            for road, values in overrides_data.items():
                overrides[self._int(road, "fd.overrides")] = FdParams(**{**fd.to_dict(), **values})
        except TypeError as e:
            raise self._error(f"Invalid fundamental diagram parameter: {e}", "fd") from e
        except ConfigurationError as e:
            raise ScenarioValidationError(self.path, e) from e
        return fd, overrides

    def _table_value(self, value: Any, n_c: int, field_name: str) -> Any:
        if isinstance(value, list):
            if len(value) != n_c:
                raise self._error(f"Per-phase list has {len(value)} entries, expected {n_c}", field_name)
            return [float(v) for v in value]
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise self._error(f"Expected a number or a list of numbers, got {value!r}", field_name)
        return float(value)

    def _tables(self, n_c: int) -> Tuple[PTable, QTable]:
        p_data = self.data.get("p_table") or {}
        q_data = self.data.get("q_table") or {}
        p_table = {self._int(road, "p_table"): self._table_value(value, n_c, f"p_table.{road}")
                   for road, value in p_data.items()}
        q_table: Dict[int, Dict[int, Any]] = {}
        for road, splits in q_data.items():
            if not isinstance(splits, Mapping):
                raise self._error("Expected a mapping from out-neighbor to fraction", f"q_table.{road}")
            q_table[self._int(road, "q_table")] = {
                self._int(j, f"q_table.{road}"): self._table_value(value, n_c, f"q_table.{road}.{j}")
                for j, value in splits.items()
            }
        return p_table, q_table

    def _settings(self, network: RoadNetwork, schedule: PhaseSchedule, fd: FdParams,
                  fd_overrides: Dict[int, FdParams], p_table: PTable, q_table: QTable,
                  junctions: List[Junction]) -> Scenario:
        monitor: MonitorConfig = self.config.monitor
        u0 = self._number("u0")
        if u0 is None:
            raise self._error("Missing required field", "u0")
        beta = self._number("beta", self.config.controller.beta)
        T = self._number("T", 60)
        seed = self._number("seed", 0)
        if isinstance(T, float) and not T.is_integer():
            raise self._error(f"Expected an integer, got {T!r}", "T")
        if isinstance(seed, float) and not seed.is_integer():
            raise self._error(f"Expected an integer, got {seed!r}", "seed")
        T, seed = int(T), int(seed)

        try:
            _check_run_settings(u0, beta, T)
        except ConfigurationError as e:
            raise ScenarioValidationError(self.path, e) from e

        eps = self._number("eps")
        if eps is None:
            eps = monitor.eps_fraction * u0 if u0 > 0 else monitor.atom_tol
        hold_window = self._number("hold_window", monitor.hold_window)
        if hold_window is None:
            hold_window = schedule.cycle_length
        try:
            _check_monitor_settings(eps, hold_window)
        except ConfigurationError as e:
            raise ScenarioValidationError(self.path, e) from e

        x0 = self._x0(network, fd, fd_overrides, seed)
        return Scenario(
            network=network, schedule=schedule, fd=fd, u0=float(u0), beta=float(beta), x0=x0,
            T=T, eps=float(eps), hold_window=int(hold_window), seed=seed,
            name=str(self.data.get("name") or (Path(self.path).stem if self.path else "scenario")),
            junctions=junctions, fd_overrides=fd_overrides,
            p_table=dict(p_table), q_table={road: dict(s) for road, s in q_table.items()},
            dynamics=self._dynamics(),
        )

    def _dynamics(self) -> Dict[str, float]:
        entries = self.data.get("dynamics") or {}
        if not isinstance(entries, Mapping):
            raise self._error("Expected a mapping of outflow probabilities", "dynamics")
        dynamics = {}
        for key, value in entries.items():
            field_name = f"dynamics.{key}"
            if key not in DYNAMICS_KEYS:
                raise self._error(f"Unknown entry, expected one of {list(DYNAMICS_KEYS)}", field_name)
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise self._error(f"Expected a number, got {value!r}", field_name)
            if not 0.0 < value <= 1.0:
                raise ScenarioValidationError(
                    self.path, ConfigurationError(f"{key} must lie in (0, 1], got {value}"))
            dynamics[key] = float(value)
        return dynamics

    def _x0(self, network: RoadNetwork, fd: FdParams, fd_overrides: Dict[int, FdParams],
            seed: int) -> np.ndarray:
        rho_max = np.array([fd_overrides.get(road, fd).rho_max for road in network.roads])
        value = self.data.get("x0")
        if value is None:
            return np.zeros(network.size)
        if value == "random":
            rng = np.random.default_rng(seed)
            return rng.uniform(0.0, RANDOM_X0_FRACTION * rho_max)
        if not isinstance(value, list) or len(value) != network.size:
            raise self._error(f"Expected {network.size} initial densities or 'random'", "x0")
        try:
            x0 = np.array([float(v) for v in value])
        except (TypeError, ValueError):
            raise self._error("Initial densities must be numbers", "x0") from None
        bad = np.flatnonzero((x0 < 0) | (x0 > rho_max))
        if bad.size:
            i = int(bad[0])
            raise ScenarioValidationError(
                self.path, DensityOutOfRangeError(network.roads[i], float(x0[i]), float(rho_max[i])))
        return x0


def load_scenario(path: Union[str, Path], config: Optional[NoirConfig] = None) -> Scenario:
    """Read and validate a scenario file.

    Args:
        path: JSON scenario document
        config: Supplies defaults for beta, eps, hold_window and the phase-matrix defaults

    Returns:
        Validated Scenario with defaults filled in
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ParseError(f"Cannot read scenario: {e.strerror}", path=str(path)) from e
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(f"Invalid JSON: {e.msg}", path=str(path), line=e.lineno) from e
    scenario = Scenario.from_dict(data, config=config, path=str(path))
    logger.info(f"Loaded scenario '{scenario.name}': N={scenario.network.size}, "
                f"inlets={scenario.network.n_inlets}, n_c={scenario.cycle_length}")
    return scenario


def save_scenario(scenario: Scenario, path: Union[str, Path]) -> Path:
    """Write the scenario document read by ``load_scenario``."""
    path = Path(path)
    path.parent.mkdir(exist_ok=True, parents=True)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(scenario.to_dict(), f, indent=2)
        f.write("\n")
    logger.info(f"Scenario saved to {path}")
    return path
