"""Bifurcation problems, analytic expansions near the deadlock, and regime tests.

A :class:`Problem` bundles ``field(x, p)``, ``jacobian(x, p)`` and ``dfdp(x, p)``
for one choice of continuation parameter, so the same machinery runs on the
full network, the three-group reduction, or the value-difference unfolding.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable

import mpmath
import numpy as np
from scipy.optimize import brentq

from .continuation import (
    ContinuationSettings,
    EquilibriumBranch,
    EquilibriumPoint,
    NewtonError,
    StepFailure,
    continue_branch,
    newton_solve,
    switch_branch,
)
from .dynamics import TANH, Sigmoid
from .graph import Graph, ThreeGroupSpec
from .integrate import write_csv
from .reduction import reduced_info


@dataclass(frozen=True)
class Problem:
    field: Callable
    jacobian: Callable
    dfdp: Callable
    dim: int
    param_name: str = "u"

    def solve(self, guess, param, **kw) -> EquilibriumPoint:
        return newton_solve(self.field, self.jacobian, guess, param, **kw)

    def continue_from(self, start, param_range, settings=None, direction=1.0, label="") -> EquilibriumBranch:
        return continue_branch(
            self.field, self.jacobian, start, param_range, settings, self.dfdp, direction, label=label
        )


def network_problem(g: Graph, beta=None, sigmoid: Sigmoid = TANH) -> Problem:
    """Full network dynamics with social effort u as the parameter."""
    A, d = g.adjacency, g.in_degrees
    b = np.zeros(g.n_agents) if beta is None else np.asarray(getattr(beta, "beta", beta), dtype=float)
    return Problem(
        lambda x, u: -d * x + u * (A @ sigmoid(x)) + b,
        lambda x, u: -np.diag(d) + u * A * sigmoid.df(x)[None, :],
        lambda x, u: A @ sigmoid(x),
        g.n_agents,
    )


def _reduced(spec: ThreeGroupSpec, gain: Callable, dgain: Callable, bias: Callable, dbias: Callable,
             sigmoid: Sigmoid, name: str) -> Problem:
    w, d = spec.reduced_weights(), spec.group_degrees()
    return Problem(
        lambda y, p: -d * y + gain(p) * (w @ sigmoid(y)) + bias(p),
        lambda y, p: -np.diag(d) + gain(p) * w * sigmoid.df(y)[None, :],
        lambda y, p: dgain(p) * (w @ sigmoid(y)) + dbias(p),
        3,
        name,
    )


def reduced_problem(spec: ThreeGroupSpec, beta_a: float = 0.0, beta_b: float = 0.0,
                    sigmoid: Sigmoid = TANH) -> Problem:
    """Three-group reduction, parameter u."""
    b = reduced_info(beta_a, beta_b)
    zero = np.zeros(3)
    return _reduced(spec, lambda u: u, lambda u: 1.0, lambda u: b, lambda u: zero, sigmoid, "u")


def reduced_u2_problem(spec: ThreeGroupSpec, nu: float, sigmoid: Sigmoid = TANH) -> Problem:
    """Equal-value honeybee mapping (u = u2 nu, beta = nu^2), parameter u2.

    Equilibria and stability coincide with those of the original-time model,
    whose field is this one divided by nu.
    """
    b = reduced_info(nu * nu, nu * nu)
    zero = np.zeros(3)
    return _reduced(spec, lambda u2: u2 * nu, lambda u2: nu, lambda u2: b, lambda u2: zero, sigmoid, "u2")


def reduced_delta_nu_problem(
    spec: ThreeGroupSpec, u2: float, nu_mean: float, u1: float | None = None, sigmoid: Sigmoid = TANH
) -> Problem:
    """Value-difference unfolding with parameter dnu = nu_A - nu_B.

    The original-time decay rate defaults to u1 = 1/nu_mean. Dividing by u1
    gives u = u2 / u1 and beta_i = nu_i / u1 with nu_A,B = nu_mean +/- dnu / 2.
    """
    if u1 is None:
        u1 = 1.0 / nu_mean
    if u1 <= 0:
        raise ValueError("u1 must be positive")
    u = u2 / u1

    def bias(dnu):
        return reduced_info((nu_mean + dnu / 2) / u1, (nu_mean - dnu / 2) / u1)

    dbias = np.array([0.5 / u1, 0.5 / u1, 0.0])
    return _reduced(spec, lambda p: u, lambda p: 0.0, bias, lambda p: dbias, sigmoid, "delta_nu")


# --- analytic expansions -------------------------------------------------------


def deadlock_equilibrium_expansion(u, beta, n_agents: int):
    """Two-term small-beta expansion of the deadlock equilibrium.

    Accepts mpmath numbers, in which case the result keeps their precision.
    """
    if abs(beta) > 0.5:
        warnings.warn("deadlock expansion used outside |beta| <= 0.5", RuntimeWarning, stacklevel=2)
    a = n_agents - 1 + u
    return beta / a + u * beta**3 / (3 * a**4)


def deadlock_equilibrium_numeric(u, beta, n_agents: int, dps: int | None = None):
    """Root of (N-1) y + u tanh(y) = beta; mpmath with ``dps`` digits if given."""
    k = n_agents - 1
    if dps is None:
        if beta == 0:
            return 0.0
        lo, hi = sorted((0.0, beta / k))
        return brentq(lambda y: k * y + u * math.tanh(y) - beta, lo, hi, xtol=1e-300, rtol=1e-15)
    with mpmath.workdps(dps):
        b, uu = mpmath.mpf(beta), mpmath.mpf(u)
        return mpmath.findroot(lambda y: k * y + uu * mpmath.tanh(y) - b, b / (k + uu))


USTAR_FORMS = ("N9", "n9", "corrected")


def ustar_coefficient(n_agents: int, n_uninformed: int, form: str = "N9"):
    """beta^2 coefficient of the critical social effort.

    ``N9`` and ``n9`` differ only in the denominator, 9 N^9 or 9 n^9 with
    n = (N - n_U) / 2. ``corrected`` is the exact leading
    coefficient (N - n_U) / N^3 obtained by expanding the determinant
    condition; it differs from ``N9`` by a relative 1e-6 at N = 100.
    """
    N, nu_ = n_agents, n_uninformed
    if form == "N9":
        return (1 + 3 * N**3) ** 2 * (N - nu_) / (9 * N**9)
    if form == "n9":
        n = (N - nu_) / 2
        return (1 + 3 * N**3) ** 2 * (N - nu_) / (9 * n**9)
    if form == "corrected":
        return (N - nu_) / N**3
    raise ValueError(f"form must be one of {USTAR_FORMS}")


def ustar_expansion(beta, n_agents: int, n_uninformed: int, form: str = "N9"):
    """1 + c beta^2, the critical u for equal-magnitude opposing information."""
    return 1 + ustar_coefficient(n_agents, n_uninformed, form) * beta**2


def u2star_expansion(nu, n_agents: int, n_uninformed: int, form: str = "N9"):
    """Critical u2 in the honeybee mapping: 1/nu + c nu^3."""
    if nu <= 0:
        raise ValueError("nu must be positive")
    return 1 / nu + ustar_coefficient(n_agents, n_uninformed, form) * nu**3


def ustar_numeric(beta, n_agents: int, n: int, n3: int, dps: int = 40):
    """Critical u on an all-to-all graph with two informed groups of size n.

    Solves the vanishing of the symmetry-breaking 2x2 block of the reduced
    Jacobian at the deadlock y = (y*, -y*, 0), in mpmath precision.
    """
    if 2 * n + n3 != n_agents:
        raise ValueError("n_agents must equal 2 n + n3")
    k = n_agents - 1
    with mpmath.workdps(dps):
        b = mpmath.mpf(beta)

        def det(u):
            y = mpmath.findroot(lambda y: k * y + u * mpmath.tanh(y) - b, b / (k + u))
            s = mpmath.sech(y) ** 2
            return (-k + u * (2 * n - 1) * s) * (-k + u * (n3 - 1)) - 2 * u * u * n * n3 * s

        u0 = 1 + mpmath.mpf(n_agents - n3) / n_agents**3 * b**2
        return mpmath.findroot(det, u0)


def reduced_determinant(y, u, spec: ThreeGroupSpec, sigmoid: Sigmoid = TANH) -> float:
    w, d = spec.reduced_weights(), spec.group_degrees()
    return float(np.linalg.det(-np.diag(d) + u * w * sigmoid.df(np.asarray(y))[None, :]))


def honeybee_sigma_star(nu: float) -> float:
    """Critical stop-signal rate 4 nu^3 / (nu^2 - 1)^2."""
    if nu <= 0:
        raise ValueError("nu must be positive")
    if nu == 1:
        raise ZeroDivisionError("critical stop-signal rate has a pole at nu = 1")
    return 4 * nu**3 / (nu * nu - 1) ** 2


# --- diagrams -----------------------------------------------------------------


def detect_folds(branch: EquilibriumBranch) -> list[float]:
    """Parameters where the branch turns back and an eigenvalue crosses zero."""
    out = []
    for s in branch.singularities:
        if s.kind != "fold":
            continue
        k = s.index
        pts = branch.points
        lo, hi = pts[max(k - 1, 0)], pts[min(k + 1, len(pts) - 1)]
        if lo.stable != hi.stable or np.sign(lo.max_real_eig) != np.sign(hi.max_real_eig) or abs(
            pts[k].max_real_eig
        ) < 1e-6:
            out.append(s.param)
    return out


@dataclass
class Diagram:
    branches: list

    def singularities(self, kind: str | None = None) -> list:
        return [s for b in self.branches for s in b.singularities if kind is None or s.kind == kind]

    def rows(self):
        for b in self.branches:
            for p in b.points:
                yield [p.param, *p.state, p.max_real_eig, p.stable, p.singular_kind]

    def write_csv(self, path) -> None:
        k = self.branches[0].points[0].state.size
        header = ["param"] + [f"state_{i + 1}" for i in range(k)] + ["max_real_eig", "stable", "singular_kind"]
        write_csv(path, header, self.rows())


def bifurcation_diagram(
    problem: Problem,
    start: EquilibriumPoint,
    param_range,
    settings: ContinuationSettings | None = None,
    direction: float = 1.0,
    switch: bool = True,
) -> Diagram:
    """Primary branch plus one level of switched branches at each pitchfork."""
    try:
        primary = problem.continue_from(start, param_range, settings, direction, label="primary")
    except StepFailure as exc:
        primary = exc.branch
    branches = [primary]
    if switch:
        for sg in primary.of_kind("pitchfork"):
            branches.extend(
                switch_branch(problem.field, problem.jacobian, primary, sg, param_range, settings, problem.dfdp)
            )
    return Diagram(branches)


def deadlock_branch(problem: Problem, param_range, start_param: float | None = None, settings=None) -> Diagram:
    """Continue the equilibrium found by Newton from the origin at the low end."""
    p0 = min(param_range) if start_param is None else start_param
    guess = np.zeros(problem.dim)
    st = problem.solve(guess, p0)
    return bifurcation_diagram(problem, st, param_range, settings)


def first_pitchfork(diagram: Diagram) -> float | None:
    p = diagram.branches[0].of_kind("pitchfork")
    return p[0].param if p else None


def value_sensitivity_curve(
    nu_values,
    n_agents: int,
    n1: int,
    n2: int,
    n3: int,
    form: str = "N9",
    settings: ContinuationSettings | None = None,
) -> list[tuple[float, float, float]]:
    """Rows (nu, u2* analytic, u2* numeric) for the equal-value all-to-all case.

    The numeric value is the first pitchfork met when continuing the deadlock
    in u2. Failed cells carry ``nan`` in the numeric column.
    """
    if n1 + n2 + n3 != n_agents:
        raise ValueError("group sizes must sum to n_agents")
    spec = ThreeGroupSpec(n1, n2, n3)
    rows = []
    for nu in nu_values:
        nu = float(nu)
        if nu <= 0:
            raise ValueError("nu must be positive")
        analytic = u2star_expansion(nu, n_agents, n3, form)
        numeric = math.nan
        try:
            prob = reduced_u2_problem(spec, nu)
            hi = max(4.0 / nu, 2.0 * analytic)
            dia = deadlock_branch(prob, (0.0, hi), settings=settings)
            pf = first_pitchfork(dia)
            if pf is not None:
                numeric = pf
        except (NewtonError, StepFailure, np.linalg.LinAlgError):
            pass
        rows.append((nu, float(analytic), float(numeric)))
    return rows


@dataclass(frozen=True)
class RegimeReport:
    kind: str  # "supercritical" | "subcritical" | "none"
    u_star: float | None
    folds: tuple
    min_stable_decision_u: float | None


def regime_from_diagram(dia: Diagram) -> RegimeReport:
    """Classify the first pitchfork on the primary branch of ``dia``.

    Subcritical means stable equilibria on the emanating branches exist for
    some parameter below the point where the primary branch loses stability.
    """
    u_star = first_pitchfork(dia)
    if u_star is None:
        return RegimeReport("none", None, (), None)
    side = dia.branches[1:]
    folds = tuple(sorted({round(f, 10) for b in side for f in detect_folds(b)}))
    stable_u = [p.param for b in side for p in b.points if p.stable and not p.singular]
    min_u = min(stable_u) if stable_u else None
    sub = min_u is not None and min_u < u_star - 1e-6
    return RegimeReport("subcritical" if sub else "supercritical", u_star, folds, min_u)


def classify_pitchfork(
    spec: ThreeGroupSpec, beta: float, u_range=(0.0, 3.0), settings: ContinuationSettings | None = None
) -> RegimeReport:
    """Supercritical vs subcritical deadlock breaking for equal opposing information."""
    return regime_from_diagram(deadlock_branch(reduced_problem(spec, beta, beta), u_range, settings=settings))
