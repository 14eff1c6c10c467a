"""Closed-loop simulation: plant, receding-horizon controller and runtime monitor."""

import logging
from typing import List, Optional

import colorama
from colorama import Fore, Style
from tqdm import tqdm

from .control.controller import MpcController
from .core.config import NoirConfig
from .core.network import active_phase
from .core.scenario import Scenario
from .core.trace import Trace
from .dynamics.matrices import TrafficState, outflows, step
from .monitor.spec_monitor import (
    TraceRecord,
    Verdict,
    Violation,
    check_liveness,
    check_safety,
    epsilon_certificate,
)
from .solver.factory import create_solver
from .utils.exceptions import QpInfeasibleError, QpMaxIterationsError

logger = logging.getLogger(__name__)

# Initialize colorama
colorama.init(autoreset=True)


class ClosedLoopSimulation:
    """Runs one scenario for T steps and checks the resulting trace."""

    COLORS = {
        'Step': Fore.CYAN,
        'Violation': Fore.RED,
        'System': Fore.YELLOW,
    }

    def __init__(self, scenario: Scenario, config: Optional[NoirConfig] = None):
        self.scenario = scenario
        self.config = config or NoirConfig()
        self.verbose = self.config.logging.verbose

        self.mats_per_phase = scenario.phase_matrices(self.config.dynamics)
        self.B = scenario.input_matrix()
        self.fd = scenario.fd_profile()
        self.outlet_positions = [scenario.network.position(r) for r in scenario.network.outlet_ids]
        self.controller = MpcController(
            scenario.network, scenario.schedule, self.mats_per_phase, self.B, self.fd,
            u0=scenario.u0, beta=scenario.beta,
            solver=create_solver(self.config.solver), solver_config=self.config.solver,
        )

    def _print_step(self, rec: TraceRecord, violations: List[Violation]) -> None:
        if not self.verbose:
            return
        color = self.COLORS['Violation'] if violations else self.COLORS['Step']
        print(f"{color}k={rec.k:4d} zeta={rec.zeta:3d} total={rec.x.sum():12.6f} "
              f"outlet={rec.outlet_outflow_sum:10.6f} violations={len(violations)}{Style.RESET_ALL}")

    def _print_system(self, message: str) -> None:
        if self.verbose:
            print(f"{self.COLORS['System']}{message}{Style.RESET_ALL}")

    def run(self, steps: Optional[int] = None) -> Trace:
        """Apply u*[k] for k = 0..T-1 and monitor the trace.

        Stops early, keeping the partial trace, when the horizon problem is
        infeasible or the solver gives up; the trace status names the cause.
        """
        scenario = self.scenario
        T = steps if steps is not None else scenario.T
        if T < 1:
            raise ValueError(f"T must be at least 1, got {T}")
        self.controller.reset()
        trace = Trace(steps_requested=T)
        state = TrafficState(scenario.x0.astype(float).copy(), 0)
        self._print_system(f"=== {scenario.name}: N={scenario.network.size}, "
                           f"n_c={scenario.cycle_length}, T={T} ===")

        for k in tqdm(range(T), desc=f"Simulating {scenario.name}", disable=self.verbose):
            phase = active_phase(scenario.schedule, k)
            mats = self.mats_per_phase[phase.zeta]
            try:
                u, stats = self.controller.solve_step(state, k)
            except QpInfeasibleError as e:
                trace.status, trace.error = "infeasible", str(e)
                logger.error(f"Run '{scenario.name}' stopped at k={k}: {e}")
                break
            except QpMaxIterationsError as e:
                trace.status, trace.error = "max_iterations", str(e)
                logger.error(f"Run '{scenario.name}' stopped at k={k}: {e}")
                break

            z = outflows(state, mats)
            rec = TraceRecord(k=k, x=state.x.copy(), u=u, z=z, zeta=phase.zeta, gamma=phase.gamma,
                              outlet_outflow_sum=float(z[self.outlet_positions].sum()))
            trace.records.append(rec)
            trace.stats.append(stats)
            if stats.method != "active_set":
                logger.warning(f"k={k}: solved by {stats.method}")
            if self.verbose:
                self._print_step(rec, self._safety(rec))

            state = step(state, mats, self.B, u, rho_max=self.fd.rho_max,
                         roads=self.scenario.network.roads)

        trace.final_state = state.x
        if trace.records:
            trace.verdict = self.evaluate(trace)
        logger.info(f"Run '{scenario.name}' {trace.status}: {len(trace)} of {T} steps recorded")
        return trace

    def _safety(self, rec: TraceRecord) -> List[Violation]:
        network = self.scenario.network
        return check_safety(rec, self.fd, self.scenario.u0, schedule=self.scenario.schedule,
                            road_ids=network.roads, inlet_ids=network.inlet_ids,
                            tol=self.config.monitor.atom_tol)

    def evaluate(self, trace: Trace) -> Verdict:
        """Safety over every record, liveness over the whole trace."""
        scenario = self.scenario
        violations = [v for rec in trace.records for v in self._safety(rec)]
        liveness = check_liveness(trace.records, scenario.u0, scenario.eps, scenario.hold_window)
        certificate = None
        if liveness.satisfied:
            certificate = epsilon_certificate(trace.records, liveness.k_s, self.mats_per_phase,
                                              self.outlet_positions)
        if violations:
            logger.warning(f"{len(violations)} safety violations in run '{scenario.name}'")
        logger.info(f"Liveness: {liveness.describe()} (eps={scenario.eps:g}, "
                    f"hold_window={scenario.hold_window})")
        return Verdict(safety_violations=violations, liveness=liveness, epsilon=scenario.eps,
                       hold_window=scenario.hold_window, certificate=certificate)
