from pathlib import Path

import numpy as np
import pytest

from noir_mpc.core.config import NoirConfig
from noir_mpc.core.network import MovementPhase, build_network, build_phase_schedule
from noir_mpc.core.phoenix import phoenix_scenario
from noir_mpc.core.scenario import load_scenario
from noir_mpc.dynamics.fundamental_diagram import FdParams
from noir_mpc.dynamics.matrices import build_phase_matrices

EXAMPLE_DIR = Path(__file__).resolve().parent.parent / "example"

PHOENIX_FD = FdParams(z_max=20.0, rho_min=20.0, rho_mid=40.0, rho_max=55.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


@pytest.fixture
def fd():
    return PHOENIX_FD


@pytest.fixture
def config():
    return NoirConfig()


@pytest.fixture
def chain():
    """1 -> 2."""
    return build_network([1, 2], [(1, 2)])


@pytest.fixture
def chain_mats(chain):
    return build_phase_matrices(chain, p=[0.5, 0.5])


@pytest.fixture
def fork():
    """1 -> {2, 3}."""
    return build_network([1, 2, 3], [(1, 2), (1, 3)])


@pytest.fixture
def alternating_chain(chain):
    """Chain whose single junction alternates between green and red for road 1."""
    schedule = build_phase_schedule({
        1: [MovementPhase(1, frozenset({(1, 2)})), MovementPhase(1, frozenset())],
    }, network=chain)
    return chain, schedule


@pytest.fixture
def chain_scenario(config):
    return load_scenario(EXAMPLE_DIR / "two_road_chain.json", config)


@pytest.fixture
def fork_scenario(config):
    return load_scenario(EXAMPLE_DIR / "symmetric_fork.json", config)


@pytest.fixture(scope="session")
def phoenix():
    return phoenix_scenario()


def random_network(rng, size, extra_edges=None):
    """Every road but the last feeds a higher-numbered road; a few extra edges close loops."""
    edges = set()
    for i in range(1, size):
        j = int(rng.integers(i + 1, size + 1))
        edges.add((i, j))
    for _ in range(extra_edges if extra_edges is not None else size // 2):
        i, j = (int(v) for v in rng.integers(1, size, size=2))
        if i != j and (j, i) not in edges:
            edges.add((i, j))
    return build_network(range(1, size + 1), sorted(edges))


def random_split(rng, network):
    """Random valid tendency matrix: positive fractions over each road's out-neighbors."""
    Q = np.zeros((network.size, network.size))
    for road in network.roads:
        successors = network.out_neighbors(road)
        if not successors:
            continue
        weights = rng.uniform(0.1, 1.0, size=len(successors))
        weights /= weights.sum()
        for successor, w in zip(successors, weights):
            Q[network.position(successor), network.position(road)] = w
    return Q
