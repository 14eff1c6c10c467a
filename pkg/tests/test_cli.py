import pytest

from noir_mpc.cli import load_config, main, override_config, parse_args, scenario_overrides

from conftest import EXAMPLE_DIR

CHAIN = str(EXAMPLE_DIR / "two_road_chain.json")
FORK = str(EXAMPLE_DIR / "symmetric_fork.json")


@pytest.fixture
def no_config(tmp_path):
    return ["--config", str(tmp_path / "absent.yaml")]


def test_validate(capsys, no_config):
    assert main(["validate", "--scenario", FORK, *no_config]) == 0
    out = capsys.readouterr().out
    assert "N=5, inlets=2, outlets=2, junctions=2, n_c=2" in out
    assert out.rstrip().endswith("valid")


def test_stability(capsys, no_config):
    assert main(["stability", "--scenario", CHAIN, *no_config]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0].startswith("zeta=0 spectral_radius=")
    assert float(lines[0].split("=")[-1]) == pytest.approx(0.5, abs=1e-8)
    assert lines[-1] == "stable=True"


def test_simulate_writes_results(tmp_path, capsys, no_config):
    out = tmp_path / "run"
    code = main(["simulate", "--scenario", CHAIN, "--out", str(out), "--steps", "5", *no_config])
    assert code == 0
    assert (out / "density.csv").exists()
    assert (out / "verdict.txt").read_text().startswith("status: completed")
    assert "completed" in capsys.readouterr().out


def test_simulate_batch(tmp_path, no_config):
    out = tmp_path / "batch"
    code = main(["simulate", "-s", CHAIN, "-s", FORK, "--out", str(out), "-T", "4", *no_config])
    assert code == 0
    assert (out / "two_road_chain" / "inflows.csv").exists()
    assert (out / "symmetric_fork" / "inflows.csv").exists()


def test_bad_scenario_fails(tmp_path, capsys, no_config):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["validate", "--scenario", str(bad), *no_config]) == 1
    assert main(["simulate", "--scenario", str(bad), "--out", str(tmp_path), *no_config]) == 1
    assert "error" in capsys.readouterr().out


def test_invalid_config_section(tmp_path):
    config = tmp_path / "config.yaml"
    config.write_text("plotting:\n  dpi: 300\n")
    assert main(["validate", "--scenario", CHAIN, "--config", str(config)]) == 1


@pytest.mark.slow
def test_phoenix_command(tmp_path, no_config):
    saved = tmp_path / "phoenix.json"
    code = main(["phoenix", "--out", str(tmp_path / "out"), "--steps", "2",
                 "--save-scenario", str(saved), *no_config])
    assert code == 0
    assert saved.exists()
    assert (tmp_path / "out" / "outflows.csv").exists()


def test_parse_args():
    args = parse_args(["simulate", "-s", "a.json", "-s", "b.json", "--jobs", "3", "--u0", "12"])
    assert args.scenario == ["a.json", "b.json"]
    assert args.jobs == 3
    assert scenario_overrides(args) == {"T": None, "beta": None, "u0": 12.0, "eps": None, "seed": None}
    with pytest.raises(SystemExit):
        parse_args(["simulate"])
    with pytest.raises(SystemExit):
        parse_args(["simulate", "-s", "a.json", "--jobs", "0"])


def test_override_config():
    args = parse_args(["simulate", "-s", "a.json", "--out", "results", "--solver", "splitting",
                       "--beta", "0.5", "--log-level", "DEBUG", "--verbose"])
    updated = override_config({"solver": {"max_iter": 10}}, args)
    assert updated["solver"] == {"max_iter": 10, "method": "splitting"}
    assert updated["output"]["out_dir"] == "results"
    assert updated["controller"]["beta"] == 0.5
    assert updated["logging"] == {"level": "DEBUG", "verbose": True}


def test_load_config(tmp_path):
    assert load_config(str(tmp_path / "missing.yaml")) == {}
    path = tmp_path / "config.yaml"
    path.write_text("controller:\n  beta: 2.0\n")
    assert load_config(str(path)) == {"controller": {"beta": 2.0}}


def test_out_of_range_override_fails(tmp_path, no_config):
    code = main(["simulate", "--scenario", CHAIN, "--out", str(tmp_path), "--u0", "-5", *no_config])
    assert code == 1
    assert not (tmp_path / "density.csv").exists()
