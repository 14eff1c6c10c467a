"""Main closed-loop pipeline: load, stability check, simulation, export."""

import time
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Optional, Union

from .config import NoirConfig
from .scenario import Scenario, load_scenario
from .trace import Trace
from ..assembler.report_assembler import ReportAssembler
from ..dynamics.stability import StabilityReport, stability_report
from ..simulation import ClosedLoopSimulation
from ..utils.exceptions import NoirError

logger = logging.getLogger(__name__)


@dataclass
class PipelineResult:
    scenario: Scenario
    trace: Trace
    stability: Optional[StabilityReport] = None
    files: Dict[str, Path] = field(default_factory=dict)
    timing_metrics: Dict[str, float] = field(default_factory=dict)


class NoirPipeline:
    """Runs one scenario end to end."""

    def __init__(self, config: Optional[NoirConfig] = None):
        self.config = config or NoirConfig()
        self.assembler = ReportAssembler(self.config)
        self.timing_metrics: Dict[str, float] = {}

    def _timed(self, stage: str, start: float) -> None:
        elapsed = time.time() - start
        self.timing_metrics[stage] = elapsed
        logger.info(f"{stage.replace('_', ' ').title()} completed in {elapsed:.2f} seconds")

    def run(self, source: Union[Scenario, str, Path], out_dir: Optional[Path] = None,
            overrides: Optional[Dict[str, object]] = None,
            skip_stages: Optional[Dict[str, bool]] = None) -> PipelineResult:
        """Run the complete pipeline.

        Args:
            source: Scenario, or path of a scenario file
            out_dir: Result directory; defaults to ``output.out_dir``
            overrides: Scenario run settings to replace (u0, beta, eps, T, seed)
            skip_stages: Optional dictionary to skip specific stages.
                Keys: 'stability', 'export'

        Returns:
            PipelineResult with the trace, written files and stage timings
        """
        skip = skip_stages or {}
        self.timing_metrics = {}
        total_start = time.time()

        try:
            start = time.time()
            logger.info("Loading scenario")
            scenario = source if isinstance(source, Scenario) else load_scenario(source, self.config)
            if overrides:
                scenario = scenario.with_overrides(**overrides)
            self._timed("load", start)

            stability = None
            if not skip.get("stability", False):
                start = time.time()
                logger.info("Checking phase matrix stability")
                stability = stability_report(scenario.phase_matrices(self.config.dynamics))
                self._timed("stability", start)

            start = time.time()
            logger.info(f"Starting closed-loop simulation of '{scenario.name}'")
            trace = ClosedLoopSimulation(scenario, self.config).run()
            self._timed("simulate", start)

            files: Dict[str, Path] = {}
            if not skip.get("export", False) and trace.records:
                start = time.time()
                logger.info("Exporting results")
                files = self.assembler.export_csv(trace, out_dir, scenario=scenario, stability=stability)
                self._timed("export", start)

            self.timing_metrics["total"] = time.time() - total_start
            self._log_timing_summary()
            return PipelineResult(scenario=scenario, trace=trace, stability=stability,
                                  files=files, timing_metrics=dict(self.timing_metrics))

        except NoirError as e:
            logger.error(f"Pipeline execution failed: {e}")
            raise

    def _log_timing_summary(self) -> None:
        logger.info("-" * 40)
        logger.info("Timing Summary:")
        for stage, duration in self.timing_metrics.items():
            logger.info(f"  {stage.replace('_', ' ').title()}: {duration:.2f} seconds")
        logger.info("-" * 40)
