import numpy as np
import pytest

from netdecide.dynamics import InfoVector, ModelParams, field_normalized, odd_saturation
from netdecide.graph import ThreeGroupSpec, build_all_to_all, build_three_group
from netdecide.integrate import (
    IntegrationConfig,
    IntegrationError,
    Trajectory,
    consensus_lyapunov,
    integrate,
    is_stationary,
    simulate_network,
    write_trajectory_csv,
)


def test_config_validation():
    with pytest.raises(ValueError):
        IntegrationConfig(t_end=1.0, method="euler")
    with pytest.raises(ValueError):
        IntegrationConfig(t_end=-1.0)
    with pytest.raises(ValueError):
        IntegrationConfig(t_end=1.0, record_stride=0)
    assert IntegrationConfig(t_end=1.0, dt=0.3).n_steps == 4


def test_rk4_fourth_order_on_linear_decay():
    errs = []
    for dt in (0.1, 0.05):
        tr = integrate(lambda x: -x, np.array([1.0]), IntegrationConfig(t_end=1.0, dt=dt))
        errs.append(abs(tr.final[0] - np.exp(-1.0)))
    assert 14 < errs[0] / errs[1] < 18


def test_rk45_meets_tolerance():
    tr = integrate(lambda x: np.array([x[1], -x[0]]), np.array([1.0, 0.0]),
                   IntegrationConfig(t_end=10.0, method="rk45", rtol=1e-10, atol=1e-12))
    assert np.allclose(tr.final, [np.cos(10), -np.sin(10)], atol=1e-8)


def test_diverging_run_raises_with_last_state():
    with pytest.raises(IntegrationError) as ei:
        integrate(lambda x: x * x, np.array([1.0]), IntegrationConfig(t_end=2.0, dt=1e-3))
    assert ei.value.last_time < 1.0 + 1e-2
    assert np.isfinite(ei.value.last_state).all()


def test_stop_condition_sets_status():
    f = lambda x: np.array([1.0])  # noqa: E731
    for method in ("rk4", "rk45"):
        tr = integrate(f, np.array([0.0]), IntegrationConfig(t_end=10.0, dt=0.01, method=method),
                       stop=lambda x: 3.0 - x[0])
        assert tr.status == 2
        assert tr.final[0] == pytest.approx(3.0, abs=2e-2)


def test_kernel_path_matches_python_path(rng):
    g = build_three_group(ThreeGroupSpec(2, 2, 3))
    p = ModelParams(1.4)
    info = InfoVector.from_groups(g.groups, 0.3, 0.1)
    x0 = rng.normal(size=7)
    cfg = IntegrationConfig(t_end=3.0, dt=0.01, record_stride=5)
    fast = simulate_network(g, p, x0, cfg, info)
    slow = integrate(lambda x: field_normalized(x, g, p, info), x0, cfg)
    assert np.allclose(fast.times, slow.times)
    assert np.allclose(fast.states, slow.states, atol=1e-12)


def test_non_tanh_sigmoid_uses_generic_path(rng):
    g = build_all_to_all(4)
    p = ModelParams(2.0, sigmoid=odd_saturation(1.0))
    tr = simulate_network(g, p, rng.normal(size=4), IntegrationConfig(t_end=1.0))
    assert len(tr) == 101


def test_consensus_lyapunov_pairwise_identity(rng):
    x = rng.normal(size=6)
    pairs = sum((a - b) ** 2 for a in x for b in x) / 2
    assert consensus_lyapunov(x) == pytest.approx(pairs)


def test_stationarity_and_csv(tmp_path):
    g = build_all_to_all(3)
    p = ModelParams(0.5)
    tr = simulate_network(g, p, np.array([0.3, -0.1, 0.2]), IntegrationConfig(t_end=20.0, dt=0.01))
    assert is_stationary(lambda x: field_normalized(x, g, p), tr)
    path = tmp_path / "t.csv"
    write_trajectory_csv(path, tr)
    lines = path.read_text().splitlines()
    assert lines[0] == "s,x_1,x_2,x_3,y,delta"
    assert len(lines) == len(tr) + 1
    assert float(lines[1].split(",")[1]) == 0.3


def test_trajectory_validation():
    with pytest.raises(ValueError):
        Trajectory(np.array([0.0, 0.0]), np.zeros((2, 1)))
