import json

import numpy as np
import pytest

from noir_mpc.core.phoenix import phoenix_document, phoenix_scenario
from noir_mpc.core.scenario import Scenario, load_scenario, save_scenario
from noir_mpc.utils.exceptions import (
    AntiparallelEdgeError,
    ConfigurationError,
    DensityOutOfRangeError,
    ParseError,
    ScenarioValidationError,
)

from conftest import EXAMPLE_DIR


def _chain_document(**changes):
    data = json.loads((EXAMPLE_DIR / "two_road_chain.json").read_text())
    data.update(changes)
    return data


def test_load_chain(chain_scenario):
    assert chain_scenario.network.size == 2
    assert chain_scenario.network.n_inlets == 1
    assert chain_scenario.cycle_length == 1
    assert chain_scenario.u0 == 4.0
    assert chain_scenario.x0.tolist() == [0.0, 0.0]
    assert chain_scenario.name == "two_road_chain"


def test_load_fork_defaults(fork_scenario):
    assert fork_scenario.cycle_length == 2
    assert fork_scenario.eps == pytest.approx(0.5)
    assert fork_scenario.hold_window == 2
    assert fork_scenario.network.names[3] == "trunk"
    mats = fork_scenario.phase_matrices()
    # junction 1 serves road 1 then road 2
    assert mats[0].p[:2].tolist() == [0.8, 0.05]
    assert mats[1].p[:2].tolist() == [0.05, 0.8]


def test_phoenix_file_matches_builder(config):
    loaded = load_scenario(EXAMPLE_DIR / "phoenix.json", config)
    built = phoenix_scenario(config)
    assert loaded.network.size == 60
    assert len(loaded.junctions) == 14
    assert loaded.cycle_length == 12
    assert loaded.network.sorted_edges() == built.network.sorted_edges()
    assert loaded.schedule.junction_cycles == built.schedule.junction_cycles
    assert loaded.fd == built.fd
    assert (loaded.u0, loaded.T, loaded.hold_window) == (50.0, 60, 12)
    assert loaded.eps == pytest.approx(2.5)
    assert loaded.dynamics == built.dynamics == {"p_off": 0.3, "p_outlet": 0.25}


def test_zero_demand_uses_atom_tolerance(config):
    scenario = Scenario.from_dict(_chain_document(u0=0.0), config)
    assert scenario.eps == config.monitor.atom_tol


def test_r_mismatch_rejected():
    data = _chain_document()
    data["junctions"][0]["r"] = 4
    with pytest.raises(ParseError) as info:
        Scenario.from_dict(data)
    assert info.value.field == "junctions[0].r"


def test_missing_net_inflow():
    data = _chain_document()
    del data["u0"]
    with pytest.raises(ParseError) as info:
        Scenario.from_dict(data)
    assert info.value.field == "u0"


def test_invalid_json_reports_line(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text('{\n  "roads": [1, 2],\n  "edges": [[1, 2]\n}\n')
    with pytest.raises(ParseError) as info:
        load_scenario(path)
    assert info.value.line is not None
    assert info.value.line >= 3


def test_unreadable_file(tmp_path):
    with pytest.raises(ParseError):
        load_scenario(tmp_path / "missing.json")


def test_antiparallel_edge_rejected():
    data = _chain_document(edges=[[1, 2], [2, 1]], junctions=[], phases={"1": [{"edges": [[1, 2]]}]})
    with pytest.raises(ScenarioValidationError) as info:
        Scenario.from_dict(data)
    assert isinstance(info.value.error, AntiparallelEdgeError)


def test_phase_table_length_checked():
    data = _chain_document(p_table={"1": [0.5, 0.6], "2": 0.5})
    with pytest.raises(ParseError):
        Scenario.from_dict(data)


def test_initial_density_out_of_range():
    with pytest.raises(ScenarioValidationError) as info:
        Scenario.from_dict(_chain_document(x0=[60.0, 0.0]))
    assert isinstance(info.value.error, DensityOutOfRangeError)
    with pytest.raises(ParseError):
        Scenario.from_dict(_chain_document(x0=["a", 0.0]))


def test_random_initial_density_is_seeded():
    first = Scenario.from_dict(_chain_document(x0="random", seed=7))
    again = Scenario.from_dict(_chain_document(x0="random", seed=7))
    other = Scenario.from_dict(_chain_document(x0="random", seed=8))
    assert np.array_equal(first.x0, again.x0)
    assert not np.array_equal(first.x0, other.x0)
    assert np.all((first.x0 >= 0.0) & (first.x0 <= 0.25 * 55.0))


def test_with_overrides(chain_scenario):
    changed = chain_scenario.with_overrides(u0=6.0, T=5, eps=None)
    assert (changed.u0, changed.T, changed.eps) == (6.0, 5, chain_scenario.eps)
    assert chain_scenario.u0 == 4.0
    with pytest.raises(ConfigurationError):
        chain_scenario.with_overrides(network=None, x0=np.zeros(2))


@pytest.mark.parametrize("changes", [
    {"u0": -5.0}, {"beta": -1.0}, {"T": 0}, {"eps": 0.0}, {"hold_window": 0},
])
def test_with_overrides_validates(chain_scenario, changes):
    with pytest.raises(ScenarioValidationError) as info:
        chain_scenario.with_overrides(**changes)
    assert isinstance(info.value.error, ConfigurationError)


def test_dynamics_section():
    scenario = Scenario.from_dict(_chain_document(p_table={}, dynamics={"p_outlet": 0.25}))
    assert scenario.dynamics == {"p_outlet": 0.25}
    mats = scenario.phase_matrices()
    # road 1 is served, road 2 is the outlet
    assert mats[0].p.tolist() == [0.8, 0.25]
    assert scenario.to_dict()["dynamics"] == {"p_outlet": 0.25}


def test_dynamics_section_rejects_bad_entries():
    with pytest.raises(ParseError) as info:
        Scenario.from_dict(_chain_document(dynamics={"p_red": 0.1}))
    assert info.value.field == "dynamics.p_red"
    with pytest.raises(ScenarioValidationError):
        Scenario.from_dict(_chain_document(dynamics={"p_off": 1.5}))


def test_save_and_reload(tmp_path, fork_scenario):
    path = save_scenario(fork_scenario, tmp_path / "nested" / "fork.json")
    reloaded = load_scenario(path)
    assert reloaded.to_dict() == fork_scenario.to_dict()


def test_phoenix_document_round_trip(tmp_path):
    scenario = Scenario.from_dict(phoenix_document(steps=12, u0=20.0))
    reloaded = load_scenario(save_scenario(scenario, tmp_path / "phoenix.json"))
    assert reloaded.to_dict() == scenario.to_dict()
    assert reloaded.T == 12
    assert reloaded.network.directions == scenario.network.directions
