import csv
import json

import numpy as np
import pytest

from noir_mpc.assembler.report_assembler import ReportAssembler
from noir_mpc.core.trace import Trace
from noir_mpc.dynamics.stability import stability_report
from noir_mpc.simulation import ClosedLoopSimulation
from noir_mpc.utils.exceptions import EmptyTraceError


def _rows(path):
    with open(path, newline="") as f:
        return list(csv.reader(f))


@pytest.fixture
def fork_trace(fork_scenario, config):
    return ClosedLoopSimulation(fork_scenario, config).run(steps=20)


def test_single_step_export(chain_scenario, config, tmp_path):
    trace = ClosedLoopSimulation(chain_scenario, config).run(steps=1)
    files = ReportAssembler(config).export_csv(trace, tmp_path, scenario=chain_scenario)
    assert sorted(files) == ["density.csv", "inflows.csv", "outflow_snapshots.csv",
                             "outflows.csv", "report.json", "verdict.txt"]
    inflows = _rows(files["inflows.csv"])
    assert inflows == [["k", "u_1"], ["0", "4"]]
    density = _rows(files["density.csv"])
    assert density[0] == ["k", "rho_1", "rho_2", "total"]
    assert len(density) == 2
    # no snapshot step lies inside a one-step trace
    assert _rows(files["outflow_snapshots.csv"]) == [["road"], ["1"], ["2"]]


def test_density_total_column(fork_scenario, fork_trace, config, tmp_path):
    files = ReportAssembler(config).export_csv(fork_trace, tmp_path, scenario=fork_scenario)
    rows = _rows(files["density.csv"])
    assert rows[0] == ["k", "rho_1", "rho_2", "rho_3", "rho_4", "rho_5", "total"]
    assert len(rows) == 21
    for row in rows[1:]:
        values = [float(v) for v in row[1:-1]]
        assert float(row[-1]) == pytest.approx(sum(values), rel=1e-8, abs=1e-8)


def test_snapshots_and_outflows(fork_scenario, fork_trace, config, tmp_path):
    files = ReportAssembler(config).export_csv(fork_trace, tmp_path, scenario=fork_scenario)
    snapshots = _rows(files["outflow_snapshots.csv"])
    assert snapshots[0] == ["road", "z_k15"]
    assert [row[0] for row in snapshots[1:]] == ["1", "2", "3", "4", "5"]
    expected = fork_trace.records[15].z
    assert np.allclose([float(row[1]) for row in snapshots[1:]], expected, rtol=1e-8)
    assert _rows(files["outflows.csv"])[0] == ["k", "z_1", "z_2", "z_3", "z_4", "z_5"]


def test_export_is_deterministic(fork_scenario, config, tmp_path):
    first = ClosedLoopSimulation(fork_scenario, config).run(steps=10)
    second = ClosedLoopSimulation(fork_scenario, config).run(steps=10)
    assembler = ReportAssembler(config)
    a = assembler.export_csv(first, tmp_path / "a", scenario=fork_scenario)
    b = assembler.export_csv(second, tmp_path / "b", scenario=fork_scenario)
    for name in ("inflows.csv", "outflows.csv", "density.csv", "verdict.txt"):
        assert a[name].read_bytes() == b[name].read_bytes()


def test_verdict_and_report(fork_scenario, fork_trace, config, tmp_path):
    stability = stability_report(fork_scenario.phase_matrices())
    files = ReportAssembler(config).export_csv(fork_trace, tmp_path, scenario=fork_scenario,
                                               stability=stability)
    verdict = files["verdict.txt"].read_text().splitlines()
    assert verdict[0] == "status: completed"
    assert verdict[1].startswith("safety: OK")
    report = json.loads(files["report.json"].read_text())
    assert report["run"]["steps_recorded"] == 20
    assert report["stability"]["stable"] is True
    assert report["scenario"]["name"] == "symmetric_fork"
    assert len(report["steps"]) == 20


def test_empty_trace_rejected(config, tmp_path):
    with pytest.raises(EmptyTraceError):
        ReportAssembler(config).export_csv(Trace(), tmp_path)


def test_number_format(config):
    assembler = ReportAssembler(config)
    assert assembler._fmt(-0.0) == "0"
    assert assembler._fmt(1.0 / 3.0) == "0.333333333"
    assert assembler._fmt(50.0) == "50"
