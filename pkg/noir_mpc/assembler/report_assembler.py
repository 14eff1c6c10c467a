"""Writes closed-loop traces to CSV files, the verdict and a JSON run report."""

import csv
import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from ..core.config import NoirConfig
from ..core.scenario import Scenario
from ..core.trace import Trace
from ..dynamics.stability import StabilityReport
from ..utils.exceptions import EmptyTraceError, IoError

logger = logging.getLogger(__name__)


class ReportAssembler:
    """Assembles the output files of one run."""

    def __init__(self, config: Optional[NoirConfig] = None):
        self.config = config or NoirConfig()
        self.digits = self.config.output.significant_digits
        self.snapshot_steps = list(self.config.output.snapshot_steps)

    def _fmt(self, value: float) -> str:
        text = f"{float(value):.{self.digits}g}"
        return "0" if text == "-0" else text

    def _write_rows(self, path: Path, header: Sequence[str], rows: List[List[Any]]) -> Path:
        with open(path, "w", encoding="utf-8", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(header)
            writer.writerows(rows)
        return path

    def _series(self, path: Path, prefix: str, ids: Sequence[int], ks: Sequence[int],
                values: np.ndarray, total: bool = False) -> Path:
        header = ["k"] + [f"{prefix}_{i}" for i in ids] + (["total"] if total else [])
        rows = []
        for k, row in zip(ks, values):
            cells = [str(k)] + [self._fmt(v) for v in row]
            if total:
                cells.append(self._fmt(np.sum(row)))
            rows.append(cells)
        return self._write_rows(path, header, rows)

    def _snapshots(self, path: Path, trace: Trace, road_ids: Sequence[int]) -> Path:
        by_k = {rec.k: rec for rec in trace.records}
        steps = [k for k in self.snapshot_steps if k in by_k]
        skipped = [k for k in self.snapshot_steps if k not in by_k]
        if skipped:
            logger.debug(f"Snapshot steps beyond the trace skipped: {skipped}")
        header = ["road"] + [f"z_k{k}" for k in steps]
        rows = [[str(road)] + [self._fmt(by_k[k].z[i]) for k in steps]
                for i, road in enumerate(road_ids)]
        return self._write_rows(path, header, rows)

    def export_csv(self, trace: Trace, out_dir: Optional[Path] = None,
                   scenario: Optional[Scenario] = None,
                   stability: Optional[StabilityReport] = None) -> Dict[str, Path]:
        """Write inflows.csv, outflows.csv, density.csv, outflow_snapshots.csv, verdict.txt and report.json.

        Args:
            trace: Non-empty closed-loop trace
            out_dir: Target directory, created if missing; defaults to ``output.out_dir``
            scenario: Supplies road and inlet ids and is echoed into report.json
            stability: Echoed into report.json when given

        Returns:
            Mapping from file name to written path
        """
        if not trace.records:
            raise EmptyTraceError("Nothing to export: the trace has no records")
        out_dir = Path(out_dir or self.config.output.out_dir)
        size = trace.records[0].x.shape[0]
        n_in = trace.records[0].u.shape[0]
        road_ids = scenario.network.roads if scenario else list(range(1, size + 1))
        inlet_ids = scenario.network.inlet_ids if scenario else list(range(1, n_in + 1))
        ks = [rec.k for rec in trace.records]

        try:
            out_dir.mkdir(exist_ok=True, parents=True)
            files = {
                "inflows.csv": self._series(out_dir / "inflows.csv", "u", inlet_ids, ks, trace.inflows()),
                "outflows.csv": self._series(out_dir / "outflows.csv", "z", road_ids, ks, trace.outflows()),
                "density.csv": self._series(out_dir / "density.csv", "rho", road_ids, ks,
                                            trace.densities(), total=True),
                "outflow_snapshots.csv": self._snapshots(out_dir / "outflow_snapshots.csv", trace, road_ids),
            }

            verdict_path = out_dir / "verdict.txt"
            with open(verdict_path, "w", encoding="utf-8", newline="\n") as f:
                f.write(f"status: {trace.status}\n")
                if trace.error:
                    f.write(f"error: {trace.error}\n")
                if trace.verdict is not None:
                    f.write(trace.verdict.render())
            files["verdict.txt"] = verdict_path

            report_path = out_dir / "report.json"
            with open(report_path, "w", encoding="utf-8") as f:
                json.dump(self.report(trace, scenario, stability), f, indent=2)
                f.write("\n")
            files["report.json"] = report_path
        except OSError as e:
            raise IoError(f"Cannot write results to {out_dir}: {e}") from e

        logger.info(f"Exported {len(files)} result files to {out_dir}")
        return files

    def report(self, trace: Trace, scenario: Optional[Scenario] = None,
               stability: Optional[StabilityReport] = None) -> Dict[str, Any]:
        return {
            "scenario": scenario.to_dict() if scenario else None,
            "config": self.config.to_dict(),
            "run": trace.summary(),
            "stability": stability.to_dict() if stability else None,
            "verdict": trace.verdict.to_dict() if trace.verdict else None,
            "steps": [s.to_dict() for s in trace.stats],
        }
