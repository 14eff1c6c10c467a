import numpy as np
import pytest

from noir_mpc.core.network import MovementPhase, build_phase_schedule
from noir_mpc.dynamics.matrices import build_phase_matrices, outflows, TrafficState
from noir_mpc.monitor import (
    LivenessVerdict,
    TraceRecord,
    Verdict,
    Violation,
    check_liveness,
    check_safety,
    epsilon_certificate,
)
from noir_mpc.utils.exceptions import EmptyTraceError


def _record(x, u, z=None, k=0, zeta=0, gamma=0, outlet_sum=0.0):
    x = np.asarray(x, dtype=float)
    z = np.zeros_like(x) if z is None else np.asarray(z, dtype=float)
    return TraceRecord(k=k, x=x, u=np.asarray(u, dtype=float), z=z, zeta=zeta, gamma=gamma,
                       outlet_outflow_sum=outlet_sum)


def test_valid_record_has_no_violations(fd):
    rec = _record([10.0, 30.0], [25.0, 25.0], z=[8.0, 15.0])
    assert check_safety(rec, fd, u0=50.0) == []


def test_density_above_jam(fd):
    rec = _record([56.0, 10.0], [50.0], z=[0.0, 5.0])
    violations = check_safety(rec, fd, u0=50.0, road_ids=[7, 8])
    assert len(violations) == 1
    assert violations[0].formula == "density_upper"
    assert violations[0].road == 7
    assert violations[0].margin == pytest.approx(1.0)


def test_inflow_sign_and_bound(fd):
    violations = check_safety(_record([0.0, 0.0], [-1.0, 51.0]), fd, u0=50.0, inlet_ids=[3, 4])
    assert [(v.formula, v.road) for v in violations] == [
        ("inflow_nonnegative", 3),
        ("inflow_bound", 4),
    ]
    assert all(v.margin == pytest.approx(1.0) for v in violations)


def test_inflow_sum_mismatch(fd):
    violations = check_safety(_record([0.0], [20.0, 20.0]), fd, u0=50.0)
    assert [v.formula for v in violations] == ["inflow_sum"]
    assert violations[0].margin == pytest.approx(10.0)


def test_outflow_above_diagram(fd):
    # free flow: z <= x at rho_min = z_max = 20
    violations = check_safety(_record([10.0], [0.0], z=[12.0]), fd, u0=0.0)
    assert [v.formula for v in violations] == ["fd_free_flow"]
    assert violations[0].margin == pytest.approx(2.0)
    # congested branch at rho = 50 caps outflow at 20/3
    violations = check_safety(_record([50.0], [0.0], z=[10.0]), fd, u0=0.0)
    assert [v.formula for v in violations] == ["fd_congested"]


def test_outflow_within_tolerance(fd):
    assert check_safety(_record([10.0], [0.0], z=[10.0 + 1e-9]), fd, u0=0.0) == []


def test_phase_transition_atom(fd, chain):
    schedule = build_phase_schedule({
        1: [MovementPhase(1, frozenset({(1, 2)})), MovementPhase(1, frozenset())],
    }, network=chain)
    ok = _record([0.0, 0.0], [0.0], zeta=0, gamma=1)
    bad = _record([0.0, 0.0], [0.0], zeta=0, gamma=0)
    assert check_safety(ok, fd, u0=0.0, schedule=schedule) == []
    assert [v.formula for v in check_safety(bad, fd, u0=0.0, schedule=schedule)] == ["phase_transition"]


def test_liveness_constant_balance():
    assert check_liveness([50.0] * 10, u0=50.0, eps=0.1, hold_window=3) == LivenessVerdict(True, 0)


def test_liveness_geometric_approach():
    sums = [50.0 + 10.0 * 0.5 ** k for k in range(30)]
    verdict = check_liveness(sums, u0=50.0, eps=0.1, hold_window=1)
    assert verdict.satisfied
    assert verdict.k_s == 7


def test_liveness_uses_record_steps():
    trace = [_record([0.0], [0.0], k=k + 5, outlet_sum=0.0 if k < 2 else 4.0) for k in range(6)]
    verdict = check_liveness(trace, u0=4.0, eps=0.5, hold_window=2)
    assert verdict.k_s == 7


def test_liveness_needs_full_window():
    sums = [0.0] * 8 + [50.0] * 3
    assert check_liveness(sums, u0=50.0, eps=0.1, hold_window=4).describe() == "NotYetSatisfied"
    assert check_liveness(sums, u0=50.0, eps=0.1, hold_window=3).k_s == 8


def test_liveness_input_errors():
    with pytest.raises(EmptyTraceError):
        check_liveness([], u0=1.0, eps=0.1, hold_window=1)
    with pytest.raises(ValueError):
        check_liveness([1.0], u0=1.0, eps=0.0, hold_window=1)
    with pytest.raises(ValueError):
        check_liveness([1.0], u0=1.0, eps=0.1, hold_window=0)


def test_liveness_is_monotone_in_eps(rng):
    for _ in range(200):
        length = int(rng.integers(1, 80))
        sums = 50.0 + rng.normal(scale=3.0, size=length) * np.linspace(1.0, 0.0, length)
        hold_window = int(rng.integers(1, 15))
        tolerances = np.sort(rng.uniform(0.01, 5.0, size=6))
        verdicts = [check_liveness(list(sums), u0=50.0, eps=eps, hold_window=hold_window)
                    for eps in tolerances]
        for tight, loose in zip(verdicts, verdicts[1:]):
            if tight.satisfied:
                assert loose.satisfied
                assert loose.k_s <= tight.k_s


def test_certificate_on_steady_chain(chain):
    mats = build_phase_matrices(chain, p=[0.5, 0.5])
    x = np.array([8.0, 8.0])
    z = outflows(TrafficState(x), mats)
    trace = [_record(x, [4.0], z=z, k=k, outlet_sum=float(z[1])) for k in range(4)]
    cert = epsilon_certificate(trace, 0, [mats], outlet_positions=[1])
    assert cert.delta1 == 0.0
    assert cert.delta2 == pytest.approx(0.0, abs=1e-12)
    assert cert.to_dict()["epsilon"] == cert.epsilon
    with pytest.raises(EmptyTraceError):
        epsilon_certificate([], 0, [mats], [1])


def test_verdict_render_and_dict():
    verdict = Verdict(
        safety_violations=[Violation(3, "density_upper", 7, 1.0)],
        liveness=LivenessVerdict(False),
        epsilon=2.5,
        hold_window=12,
    )
    assert not verdict.safe
    text = verdict.render()
    assert text.splitlines()[0] == "safety: VIOLATED (1 violations)"
    assert "liveness: NotYetSatisfied" in text
    assert "violation k=3 density_upper road=7 margin=1.0" in text
    data = verdict.to_dict()
    assert data["k_s"] is None
    assert data["safety_violations"][0]["road"] == 7
    assert data["certificate"] is None
