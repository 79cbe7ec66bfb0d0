import numpy as np
import pytest

from netdecide.continuation import (
    ContinuationSettings,
    MaxIterExceeded,
    SingularJacobian,
    StepFailure,
    continue_branch,
    newton_solve,
    switch_branch,
)


def scalar(x, u):
    return np.array([-x[0] + u * np.tanh(x[0])])


def dscalar(x, u):
    return np.array([[-1.0 + u / np.cosh(x[0]) ** 2]])


def test_newton_origin_below_threshold():
    pt = newton_solve(scalar, dscalar, [0.1], 0.5)
    assert abs(pt.state[0]) < 1e-9 and pt.stable
    assert pt.residual <= 1e-10


def test_newton_nontrivial_root():
    pt = newton_solve(lambda x, p: np.array([-x[0] + 2 * np.tanh(x[0])]),
                      lambda x, p: np.array([[-1 + 2 / np.cosh(x[0]) ** 2]]), [2.0], 0.0)
    assert pt.state[0] == pytest.approx(1.9150080, abs=1e-6)
    assert pt.residual <= 1e-10


def test_newton_failures():
    with pytest.raises(SingularJacobian):
        newton_solve(lambda x, p: x**2 + p, lambda x, p: np.array([[2 * x[0]]]), [0.0], 1e-3)
    with pytest.raises(MaxIterExceeded):
        newton_solve(lambda x, p: np.array([np.arctan(x[0])]), lambda x, p: np.array([[1 / (1 + x[0] ** 2)]]),
                     [3.0], 0.0, max_iter=5)


def test_pitchfork_detected_and_switched():
    st = newton_solve(scalar, dscalar, [0.0], 0.0)
    br = continue_branch(scalar, dscalar, st, (0.0, 2.0), dfdp=lambda x, u: np.tanh(x))
    pf = br.of_kind("pitchfork")
    assert len(pf) == 1 and pf[0].param == pytest.approx(1.0, abs=1e-8)
    assert br.params[-1] == pytest.approx(2.0)
    assert all(p.stable for p in br.points if p.param < 0.999)
    assert not any(p.stable for p in br.points if p.param > 1.001)
    sides = switch_branch(scalar, dscalar, br, pf[0], (0.0, 2.0))
    ends = sorted(b.states[-1][0] for b in sides)
    assert ends[0] == pytest.approx(-ends[1]) and ends[1] == pytest.approx(1.9150080, abs=1e-6)
    assert all(b.stable[1:].all() for b in sides)


def test_fold_on_s_curve():
    # x^3 - x + p = 0 has folds at p = +/- 2 / (3 sqrt 3)
    f = lambda x, p: np.array([x[0] ** 3 - x[0] + p])  # noqa: E731
    j = lambda x, p: np.array([[3 * x[0] ** 2 - 1]])  # noqa: E731
    st = newton_solve(f, j, [-1.5], 1.0)
    br = continue_branch(f, j, st, (-1.0, 1.0), direction=-1, dfdp=lambda x, p: np.array([1.0]))
    folds = sorted(s.param for s in br.of_kind("fold"))
    pf = 2 / (3 * np.sqrt(3))
    assert folds == pytest.approx([-pf, pf], abs=1e-9)
    assert not br.of_kind("pitchfork")


def test_residual_bound_on_every_point():
    st = newton_solve(scalar, dscalar, [0.0], 0.0)
    br = continue_branch(scalar, dscalar, st, (0.0, 1.5))
    for p in br.points:
        assert np.max(np.abs(scalar(p.state, p.param))) <= 1e-10
        assert p.stable == (p.max_real_eig < -1e-8)


def test_step_failure_carries_partial_branch():
    def f(x, p):
        if p > 0.3:
            return np.array([np.nan])
        return np.array([x[0] - p])

    st = newton_solve(f, lambda x, p: np.eye(1), [0.0], 0.0)
    with pytest.raises(StepFailure) as ei:
        continue_branch(f, lambda x, p: np.eye(1), st, (0.0, 1.0))
    assert ei.value.branch is not None and len(ei.value.branch) > 1


def test_step_bounds_respected():
    s = ContinuationSettings(ds=0.01, ds_max=0.02)
    st = newton_solve(scalar, dscalar, [0.0], 0.0)
    br = continue_branch(scalar, dscalar, st, (0.0, 0.9), s)
    z = np.column_stack([br.states, br.params])
    steps = np.linalg.norm(np.diff(z, axis=0), axis=1)
    assert steps.max() <= 0.02 + 1e-9
