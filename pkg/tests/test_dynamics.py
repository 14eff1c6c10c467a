import numpy as np
import pytest

from noir_mpc.core.network import active_phase, build_network
from noir_mpc.dynamics.fundamental_diagram import FdParams, FdProfile, fd_outflow_cap
from noir_mpc.dynamics.matrices import (
    TrafficState,
    build_input_matrix,
    build_phase_matrices,
    build_phase_matrix_set,
    network_inflows,
    outflows,
    step,
)
from noir_mpc.utils.exceptions import (
    ConfigurationError,
    DensityOutOfRangeError,
    NegativeInflowError,
    Property3ViolationError,
    Property4ViolationError,
    Property5ViolationError,
    Property6ViolationError,
    Property7ViolationError,
    SplitNotNormalizedError,
)

from conftest import random_network, random_split


@pytest.mark.parametrize("rho, cap", [
    (0.0, 0.0),
    (10.0, 10.0),
    (20.0, 20.0),
    (30.0, 20.0),
    (40.0, 20.0),
    (50.0, 20.0 / 3.0),
    (55.0, 0.0),
])
def test_fd_outflow_cap(fd, rho, cap):
    assert fd_outflow_cap(rho, fd) == pytest.approx(cap, abs=1e-12)


@pytest.mark.parametrize("rho", [-1.0, 56.0])
def test_fd_outflow_cap_rejects_out_of_range(fd, rho):
    with pytest.raises(DensityOutOfRangeError):
        fd_outflow_cap(rho, fd)


def test_fd_breakpoints_must_increase():
    with pytest.raises(ConfigurationError):
        FdParams(z_max=20.0, rho_min=40.0, rho_mid=20.0, rho_max=55.0)
    with pytest.raises(ConfigurationError):
        FdParams(z_max=0.0)


def test_fd_profile_matches_scalar_cap(fd, rng):
    override = FdParams(z_max=10.0, rho_min=10.0, rho_mid=30.0, rho_max=50.0)
    profile = FdProfile(3, fd, {1: override})
    x = np.array([12.0, 45.0, 50.0])
    expected = [fd_outflow_cap(12.0, fd), fd_outflow_cap(45.0, override), fd_outflow_cap(50.0, fd)]
    assert np.allclose(profile.caps(x), expected)
    assert profile.rho_max.tolist() == [55.0, 50.0, 55.0]


def test_chain_state_matrix(chain_mats):
    assert np.allclose(chain_mats.A, [[0.5, 0.0], [0.5, 0.5]])
    assert np.allclose(chain_mats.Q, [[0.0, 0.0], [1.0, 0.0]])


def test_identity_outflow_matrix(fork):
    mats = build_phase_matrices(fork, p=[1.0, 1.0, 1.0])
    assert np.allclose(mats.Q[:, 0], [0.0, 0.5, 0.5])
    assert mats.Q[:, 0].sum() == pytest.approx(1.0)
    assert mats.A[0, 0] == 0.0
    assert np.allclose(mats.A, np.eye(3) + mats.Q - np.eye(3))


@pytest.mark.parametrize("p", [[0.0, 0.5], [1.2, 0.5], [np.nan, 0.5]])
def test_outflow_probability_range(chain, p):
    with pytest.raises(Property3ViolationError):
        build_phase_matrices(chain, p=p)


def test_split_outside_unit_interval(fork):
    Q = np.zeros((3, 3))
    Q[1, 0], Q[2, 0] = 1.5, -0.5
    with pytest.raises(Property4ViolationError):
        build_phase_matrices(fork, p=[0.5] * 3, q=Q)


def test_split_to_itself(fork):
    Q = np.zeros((3, 3))
    Q[0, 0], Q[1, 0] = 0.5, 0.5
    with pytest.raises(Property5ViolationError):
        build_phase_matrices(fork, p=[0.5] * 3, q=Q)


def test_split_in_both_directions():
    network = build_network([1, 2, 3], [(1, 2), (2, 3)])
    Q = np.zeros((3, 3))
    Q[1, 0] = 1.0
    Q[0, 1] = 0.5
    Q[2, 1] = 0.5
    with pytest.raises(Property6ViolationError):
        build_phase_matrices(network, p=[0.5] * 3, q=Q)


def test_split_off_the_graph():
    network = build_network([1, 2, 3], [(1, 2), (2, 3)])
    Q = np.zeros((3, 3))
    Q[2, 0] = 1.0
    Q[2, 1] = 1.0
    with pytest.raises(Property7ViolationError):
        build_phase_matrices(network, p=[0.5] * 3, q=Q)


def test_split_must_sum_to_one(fork):
    Q = np.zeros((3, 3))
    Q[1, 0], Q[2, 0] = 0.5, 0.4
    with pytest.raises(SplitNotNormalizedError):
        build_phase_matrices(fork, p=[0.5] * 3, q=Q)


def test_default_probabilities_follow_the_phase(alternating_chain):
    network, schedule = alternating_chain
    green = build_phase_matrices(network, active_phase(schedule, 0))
    red = build_phase_matrices(network, active_phase(schedule, 1))
    assert green.p.tolist() == [0.8, 0.8]
    assert red.p.tolist() == [0.05, 0.8]


def test_phase_matrix_set_tables(alternating_chain):
    network, schedule = alternating_chain
    mats = build_phase_matrix_set(network, schedule, p_table={1: [0.3, 0.6], 2: 0.9})
    assert [m.p.tolist() for m in mats] == [[0.3, 0.9], [0.6, 0.9]]
    assert [m.zeta for m in mats] == [0, 1]
    with pytest.raises(ValueError):
        build_phase_matrix_set(network, schedule, p_table={1: [0.3, 0.6, 0.9]})


def test_input_matrix(chain, phoenix):
    assert build_input_matrix(chain).B.tolist() == [[1.0], [0.0]]
    B = build_input_matrix(phoenix.network).B
    assert B.shape == (60, 11)
    assert np.array_equal(B[:11], np.eye(11))
    assert not B[11:].any()


def test_chain_step_by_hand(chain, chain_mats):
    B = build_input_matrix(chain)
    state = TrafficState(np.array([10.0, 10.0]), k=3)
    assert np.allclose(outflows(state, chain_mats), [5.0, 5.0])
    assert np.allclose(network_inflows(state, chain_mats), [0.0, 5.0])
    nxt = step(state, chain_mats, B, [4.0])
    assert np.allclose(nxt.x, [9.0, 10.0])
    assert nxt.k == 4


def test_zero_fixed_point(chain, chain_mats):
    nxt = step(TrafficState.zeros(2), chain_mats, build_input_matrix(chain), [0.0])
    assert np.array_equal(nxt.x, [0.0, 0.0])


def test_frozen_traffic(chain):
    mats = build_phase_matrices(chain, p=[1e-6, 1e-6])
    x = np.array([12.0, 30.0])
    nxt = step(TrafficState(x), mats, build_input_matrix(chain), [0.0])
    assert np.allclose(nxt.x, x, atol=1e-4)


def test_outflow_at_jam_density(chain):
    mats = build_phase_matrices(chain, p=[1.0, 0.5])
    assert outflows(TrafficState(np.array([55.0, 0.0])), mats)[0] == 55.0


def test_step_rejects_bad_inputs(chain, chain_mats):
    B = build_input_matrix(chain)
    with pytest.raises(NegativeInflowError):
        step(TrafficState.zeros(2), chain_mats, B, [-1.0])
    with pytest.raises(ValueError):
        step(TrafficState.zeros(2), chain_mats, B, [1.0, 2.0])
    with pytest.raises(DensityOutOfRangeError):
        step(TrafficState(np.array([54.0, 0.0])), chain_mats, B, [30.0], rho_max=55.0)


def test_mass_conservation(rng):
    for size in (5, 20, 60):
        network = random_network(rng, size)
        mats = build_phase_matrices(network, p=rng.uniform(0.05, 1.0, size), q=random_split(rng, network))
        B = build_input_matrix(network)
        outlets = [network.position(r) for r in network.outlet_ids]
        state = TrafficState(rng.uniform(0.0, 50.0, size))
        for _ in range(20):
            u = rng.uniform(0.0, 5.0, B.n_inputs)
            z = outflows(state, mats)
            nxt = step(state, mats, B, u)
            balance = nxt.total - state.total - u.sum() + z[outlets].sum()
            assert abs(balance) <= 1e-9
            state = nxt


def test_step_names_offending_road():
    network = build_network([7, 9], [(7, 9)])
    mats = build_phase_matrices(network, p=[0.5, 0.5])
    B = build_input_matrix(network)
    with pytest.raises(DensityOutOfRangeError) as info:
        step(TrafficState(np.array([54.0, 0.0])), mats, B, [30.0], rho_max=55.0,
             roads=network.roads)
    assert info.value.road == 7
    with pytest.raises(DensityOutOfRangeError) as info:
        step(TrafficState(np.array([54.0, 0.0])), mats, B, [30.0], rho_max=55.0)
    assert info.value.road == 0


def test_outlet_probability(alternating_chain):
    network, schedule = alternating_chain
    mats = build_phase_matrix_set(network, schedule, p_outlet=0.25)
    assert [m.p.tolist() for m in mats] == [[0.8, 0.25], [0.05, 0.25]]


@pytest.mark.parametrize("size", [2, 5, 17, 40, 60])
def test_step_matches_road_by_road_balance(rng, size):
    network = random_network(rng, size)
    mats = build_phase_matrices(network, p=rng.uniform(0.05, 1.0, size), q=random_split(rng, network))
    B = build_input_matrix(network)
    for _ in range(10):
        x = rng.uniform(0.0, 55.0, size)
        u = rng.uniform(0.0, 10.0, B.n_inputs)
        expected = x.copy()
        for road in network.roads:
            i = network.position(road)
            z = mats.p[i] * x[i]
            expected[i] -= z
            for successor in network.out_neighbors(road):
                j = network.position(successor)
                expected[j] += mats.Q[j, i] * z
        for n, inlet in enumerate(network.inlet_ids):
            expected[network.position(inlet)] += u[n]
        nxt = step(TrafficState(x), mats, B, u)
        assert np.max(np.abs(nxt.x - expected)) <= 1e-12


@pytest.mark.parametrize("size", [3, 20, 60])
def test_step_keeps_densities_nonnegative(rng, size):
    network = random_network(rng, size)
    mats = build_phase_matrices(network, p=rng.uniform(0.05, 1.0, size), q=random_split(rng, network))
    B = build_input_matrix(network)
    state = TrafficState(rng.uniform(0.0, 55.0, size) * (rng.random(size) < 0.5))
    for _ in range(50):
        state = step(state, mats, B, rng.uniform(0.0, 5.0, B.n_inputs) * (rng.random(B.n_inputs) < 0.5))
        assert np.all(state.x >= 0.0)
