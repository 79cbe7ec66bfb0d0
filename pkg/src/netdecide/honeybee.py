"""Mean-field house-hunting model with stop signalling, on the unit simplex.

With site values nu_A, nu_B the rates are recruitment = discovery = nu and
abandonment = 1/nu; both populations share the stop-signal rate sigma.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .bifurcation import Problem, honeybee_sigma_star
from .continuation import NewtonError, newton_solve


@dataclass(frozen=True)
class SwarmState:
    y_a: float
    y_b: float

    def __post_init__(self):
        tol = 1e-12
        if self.y_a < -tol or self.y_b < -tol or self.y_a + self.y_b > 1 + tol:
            raise ValueError("swarm state must lie in the unit simplex")

    @property
    def y_u(self) -> float:
        return 1.0 - self.y_a - self.y_b

    def as_array(self) -> np.ndarray:
        return np.array([self.y_a, self.y_b])


@dataclass(frozen=True)
class SwarmParams:
    nu_a: float
    nu_b: float
    sigma: float

    def __post_init__(self):
        if self.nu_a <= 0 or self.nu_b <= 0:
            raise ValueError("site values must be positive")
        if self.sigma < 0:
            raise ValueError("stop-signal rate must be nonnegative")

    @property
    def gamma(self) -> np.ndarray:
        return np.array([self.nu_a, self.nu_b])

    rho = gamma

    @property
    def alpha(self) -> np.ndarray:
        return 1.0 / self.gamma


def _arr(s) -> np.ndarray:
    if isinstance(s, SwarmState):
        return s.as_array()
    return np.asarray(s, dtype=float)


def swarm_field(s, p: SwarmParams) -> np.ndarray:
    ya, yb = _arr(s)
    yu = 1.0 - ya - yb
    g, a = p.gamma, p.alpha
    return np.array(
        [
            g[0] * yu - ya * (a[0] - g[0] * yu + p.sigma * yb),
            g[1] * yu - yb * (a[1] - g[1] * yu + p.sigma * ya),
        ]
    )


def swarm_jacobian(s, p: SwarmParams) -> np.ndarray:
    ya, yb = _arr(s)
    yu = 1.0 - ya - yb
    g, a, sg = p.gamma, p.alpha, p.sigma
    return np.array(
        [
            [-g[0] - a[0] + g[0] * yu - g[0] * ya - sg * yb, -g[0] - g[0] * ya - sg * ya],
            [-g[1] - g[1] * yb - sg * yb, -g[1] - a[1] + g[1] * yu - g[1] * yb - sg * ya],
        ]
    )


def swarm_problem(nu_a: float, nu_b: float) -> Problem:
    """Continuation problem with the stop-signal rate as parameter."""

    def f(x, sg):
        return swarm_field(x, SwarmParams(nu_a, nu_b, max(sg, 0.0)))

    def j(x, sg):
        return swarm_jacobian(x, SwarmParams(nu_a, nu_b, max(sg, 0.0)))

    def dp(x, sg):
        return np.array([-x[0] * x[1], -x[0] * x[1]])

    return Problem(f, j, dp, 2, "sigma")


def symmetric_equilibrium(nu: float, sigma: float) -> float:
    """Committed fraction y with y_a = y_b = y for equal values."""
    p = SwarmParams(nu, nu, sigma)
    return brentq(lambda y: swarm_field((y, y), p)[0], 0.0, 0.5, xtol=1e-15, rtol=1e-15)


def _antisymmetric_eig(nu: float, sigma: float) -> float:
    y = symmetric_equilibrium(nu, sigma)
    J = swarm_jacobian((y, y), SwarmParams(nu, nu, sigma))
    return J[0, 0] - J[0, 1]


def sigma_star_numeric(nu: float, sigma_max: float = 1e4) -> float:
    """Stop-signal rate where the symmetric equilibrium loses stability."""
    lo, hi = 0.0, 1.0
    if _antisymmetric_eig(nu, lo) >= 0:
        raise ValueError("symmetric equilibrium already unstable at sigma = 0")
    while _antisymmetric_eig(nu, hi) < 0:
        hi *= 2
        if hi > sigma_max:
            raise ValueError(f"no instability found for sigma <= {sigma_max:g}")
    return brentq(lambda sg: _antisymmetric_eig(nu, sg), lo, hi, xtol=1e-14, rtol=1e-13)


def swarm_pitchfork_point(nu: float) -> float:
    """Closed-form critical stop-signal rate (pole at nu = 1)."""
    return honeybee_sigma_star(nu)


@dataclass(frozen=True)
class SwarmEquilibrium:
    state: SwarmState
    eigenvalues: np.ndarray

    @property
    def stable(self) -> bool:
        return bool(np.max(self.eigenvalues.real) < -1e-8)


def swarm_equilibria(p: SwarmParams, grid: int = 5, merge_tol: float = 1e-7) -> list[SwarmEquilibrium]:
    """All equilibria in the simplex reached by Newton from a grid of guesses."""
    f = lambda x, _: swarm_field(x, p)  # noqa: E731
    j = lambda x, _: swarm_jacobian(x, p)  # noqa: E731
    found: list[np.ndarray] = []
    ticks = (np.arange(grid) + 0.5) / grid
    for a in ticks:
        for b in ticks:
            if a + b > 1:
                continue
            try:
                pt = newton_solve(f, j, (a, b), 0.0, tol=1e-13, max_iter=50)
            except NewtonError:
                continue
            x = pt.state
            if x.min() < -1e-9 or x.sum() > 1 + 1e-9:
                continue
            if all(np.linalg.norm(x - y) > merge_tol for y in found):
                found.append(x)
    found.sort(key=lambda x: (x[0] - x[1], x[0]))
    out = []
    for x in found:
        x = np.clip(x, 0.0, 1.0)
        out.append(SwarmEquilibrium(SwarmState(float(x[0]), float(x[1])), np.linalg.eigvals(swarm_jacobian(x, p))))
    return out


class Quorum(enum.Enum):
    A = "A"
    B = "B"
    NONE = "none"


def quorum_reached(s, omega: float) -> Quorum:
    if not 0.5 < omega <= 1.0:
        raise ValueError("quorum threshold must lie in (0.5, 1]")
    ya, yb = _arr(s)
    if ya >= omega:
        return Quorum.A
    if yb >= omega:
        return Quorum.B
    return Quorum.NONE


def sigma_star_table(nu_values) -> list[tuple[float, float, float]]:
    """Rows (nu, closed form, numeric) of the deadlock-breaking boundary."""
    return [(float(v), honeybee_sigma_star(v), sigma_star_numeric(v)) for v in nu_values]
