import pytest

from noir_mpc.core.pipeline import NoirPipeline
from noir_mpc.utils.exceptions import ParseError

from conftest import EXAMPLE_DIR


def test_runs_every_stage(config, tmp_path):
    result = NoirPipeline(config).run(EXAMPLE_DIR / "two_road_chain.json", out_dir=tmp_path,
                                      overrides={"T": 8})
    assert result.trace.completed
    assert len(result.trace) == 8
    assert result.stability.stable
    assert set(result.timing_metrics) == {"load", "stability", "simulate", "export", "total"}
    assert result.files["report.json"].parent == tmp_path


def test_skipped_stages(fork_scenario, config, tmp_path):
    result = NoirPipeline(config).run(fork_scenario, out_dir=tmp_path,
                                      skip_stages={"stability": True, "export": True})
    assert result.stability is None
    assert result.files == {}
    assert not any(tmp_path.iterdir())


def test_errors_propagate(config, tmp_path):
    with pytest.raises(ParseError):
        NoirPipeline(config).run(tmp_path / "missing.json")
