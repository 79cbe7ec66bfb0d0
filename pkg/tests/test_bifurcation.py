import math

import mpmath
import numpy as np
import pytest

from netdecide.bifurcation import (
    bifurcation_diagram,
    classify_pitchfork,
    deadlock_branch,
    deadlock_equilibrium_expansion,
    deadlock_equilibrium_numeric,
    detect_folds,
    first_pitchfork,
    honeybee_sigma_star,
    network_problem,
    reduced_delta_nu_problem,
    reduced_determinant,
    reduced_problem,
    reduced_u2_problem,
    u2star_expansion,
    ustar_coefficient,
    ustar_expansion,
    ustar_numeric,
    value_sensitivity_curve,
)
from netdecide.graph import ThreeGroupSpec, build_all_to_all


def test_deadlock_expansion_values():
    assert deadlock_equilibrium_expansion(1.0, 0.0, 100) == 0.0
    v = deadlock_equilibrium_expansion(1.0, 0.1, 100)
    assert v == pytest.approx(1e-3 + 0.1**3 / (3 * 100**4), rel=1e-15)
    with pytest.warns(RuntimeWarning):
        deadlock_equilibrium_expansion(1.0, 0.8, 100)


def test_deadlock_numeric_float_and_mp_agree():
    a = deadlock_equilibrium_numeric(1.0, 0.3, 10)
    b = deadlock_equilibrium_numeric(1.0, 0.3, 10, dps=30)
    assert a == pytest.approx(float(b), rel=1e-14)
    assert 9 * a + math.tanh(a) == pytest.approx(0.3, abs=1e-15)


def test_ustar_forms():
    assert ustar_expansion(0.0, 100, 80) == 1
    c = ustar_coefficient(100, 80, "N9")
    assert c == pytest.approx(9.000006e12 * 20 / 9e18, rel=1e-6)
    assert ustar_expansion(0.2, 100, 80) == pytest.approx(1 + c * 0.04)
    assert ustar_coefficient(100, 80, "corrected") == pytest.approx(2e-5)
    with pytest.raises(ValueError):
        ustar_coefficient(100, 80, "other")


def test_u2star_is_composition():
    nu = 2.0
    assert u2star_expansion(nu, 100, 80) == pytest.approx(ustar_expansion(nu**2, 100, 80) / nu, rel=1e-15)
    assert u2star_expansion(nu, 100, 80) == pytest.approx(0.5 + 1.6e-4, rel=1e-6)


def test_critical_effort_oracle_zeroes_reduced_determinant():
    spec = ThreeGroupSpec(10, 10, 80)
    beta = 0.3
    u = float(ustar_numeric(beta, 100, 10, 80))
    y = deadlock_equilibrium_numeric(u, beta, 100)
    assert abs(reduced_determinant([y, -y, 0.0], u, spec)) <= 1e-8 * 99**3


def test_continuation_pitchfork_matches_oracle():
    spec = ThreeGroupSpec(10, 10, 80)
    dia = deadlock_branch(reduced_problem(spec, 0.1, 0.1), (0.0, 2.0))
    pf = first_pitchfork(dia)
    assert pf == pytest.approx(float(ustar_numeric(0.1, 100, 10, 80)), abs=1e-9)
    assert abs(pf - ustar_expansion(0.1, 100, 80)) < 1e-6


def test_full_network_pitchfork_at_one():
    prob = network_problem(build_all_to_all(10))
    dia = deadlock_branch(prob, (0.0, 2.0))
    assert first_pitchfork(dia) == pytest.approx(1.0, abs=1e-8)
    up, down = dia.branches[1], dia.branches[2]
    # symmetric pair: state(u) = -state'(u)
    assert np.allclose(up.states[-1], -down.states[-1], atol=1e-9)
    assert not detect_folds(dia.branches[0])


def test_sigma_star_closed_form():
    assert honeybee_sigma_star(2.0) == pytest.approx(32 / 9)
    assert honeybee_sigma_star(3.0) == pytest.approx(1.6875)
    with pytest.raises(ZeroDivisionError):
        honeybee_sigma_star(1.0)
    nus = np.linspace(1.8, 6, 30)
    assert np.all(np.diff([honeybee_sigma_star(v) for v in nus]) < 0)


def test_value_curve_small_network():
    rows = value_sensitivity_curve([0.5, 1.0, 1.5], 7, 3, 3, 1)
    num = [r[2] for r in rows]
    assert all(np.isfinite(num)) and np.all(np.diff(num) < 0)
    with pytest.raises(ValueError):
        value_sensitivity_curve([1.0], 7, 3, 3, 2)


def test_common_value_scaling_keeps_pitchfork():
    spec = ThreeGroupSpec(3, 3, 4)
    for nu in (0.8, 1.6, 2.4):
        dia = deadlock_branch(reduced_u2_problem(spec, nu), (0.0, 6.0))
        assert dia.branches[0].of_kind("pitchfork")
        assert not dia.branches[0].of_kind("fold")


def test_regimes_on_symmetric_twelve(twelve_spec):
    assert classify_pitchfork(twelve_spec, 1.0).kind == "supercritical"
    sub = classify_pitchfork(twelve_spec, 3.0)
    assert sub.kind == "subcritical" and sub.folds and max(sub.folds) < sub.u_star


def test_delta_nu_branch_folds_are_symmetric():
    prob = reduced_delta_nu_problem(ThreeGroupSpec(3, 3, 4), 1.1, 10.0, u1=0.37)
    st = prob.solve(np.array([5.0, 4.0, 4.0]), 5.0)
    dia = bifurcation_diagram(prob, st, (-5.0, 5.0), direction=-1, switch=False)
    folds = sorted(detect_folds(dia.branches[0]))
    assert len(folds) == 2 and folds[0] == pytest.approx(-folds[1], abs=1e-8)


def test_diagram_csv(tmp_path):
    dia = deadlock_branch(network_problem(build_all_to_all(3)), (0.0, 1.5))
    path = tmp_path / "d.csv"
    dia.write_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "param,state_1,state_2,state_3,max_real_eig,stable,singular_kind"
    assert any(line.endswith(",pitchfork") for line in lines)


def test_expansion_accepts_mpmath():
    with mpmath.workdps(50):
        v = deadlock_equilibrium_expansion(mpmath.mpf(1), mpmath.mpf("0.1"), 100)
        assert isinstance(v, mpmath.mpf)
