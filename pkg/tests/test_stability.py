import numpy as np
import pytest

from noir_mpc.dynamics.matrices import build_phase_matrices
from noir_mpc.dynamics.stability import cycle_matrix, spectral_radius, stability_report
from noir_mpc.utils.exceptions import Property6ViolationError
from noir_mpc.core.network import build_network

from conftest import random_network, random_split


def test_diagonal_matrix():
    assert spectral_radius(np.diag([0.5, -0.3, 0.1])) == pytest.approx(0.5, rel=1e-9)


def test_defective_matrix(chain_mats):
    assert spectral_radius(chain_mats.A) == pytest.approx(0.5, abs=1e-8)


def test_nilpotent_matrix():
    assert spectral_radius(np.array([[0.0, 0.0], [1.0, 0.0]])) == 0.0


def test_rotation_keeps_unit_radius():
    theta = 0.3
    R = 0.9 * np.array([[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)]])
    assert spectral_radius(R) == pytest.approx(0.9, rel=1e-9)


def test_rejects_non_square():
    with pytest.raises(ValueError):
        spectral_radius(np.zeros((2, 3)))


def test_chain_report(chain_mats):
    report = stability_report([chain_mats])
    assert report.stable
    assert report.radii[0] == pytest.approx(0.5, abs=1e-8)
    assert report.to_dict()["stable"] is True


def test_identity_outflow_still_contracts(rng):
    network = random_network(rng, 12)
    mats = build_phase_matrices(network, p=np.ones(12), q=random_split(rng, network))
    assert spectral_radius(mats.A) < 1.0


def test_invalid_split_rejected_before_stability():
    network = build_network([1, 2, 3], [(1, 2), (2, 3)])
    Q = np.zeros((3, 3))
    Q[1, 0] = Q[0, 1] = 1.0
    with pytest.raises(Property6ViolationError):
        build_phase_matrices(network, p=[0.5] * 3, q=Q)


def test_cycle_matrix_order(alternating_chain):
    from noir_mpc.dynamics.matrices import build_phase_matrix_set

    network, schedule = alternating_chain
    mats = build_phase_matrix_set(network, schedule)
    assert np.allclose(cycle_matrix(mats), mats[1].A @ mats[0].A)
    report = stability_report(mats)
    assert report.stable
    assert report.cycle_radius < 1.0


@pytest.mark.slow
def test_random_valid_instances_are_contractive(rng):
    for size in (5, 20, 60):
        for _ in range(334):
            network = random_network(rng, size)
            p = rng.uniform(0.05, 1.0, size)
            mats = build_phase_matrices(network, p=p, q=random_split(rng, network))
            assert spectral_radius(mats.A) < 1.0 - 1e-9
