"""Agent-based opinion dynamics on a graph.

Normalized-time model::

    dx/ds = -D x + u A S(x) + beta

with the original-time form ``dx/dt = -u1 D x + u2 A S(x) + nu`` related by
``s = u1 t``, ``u = u2 / u1`` and ``beta = nu / u1``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .graph import INFORMED_A, INFORMED_B, UNINFORMED, Graph


class SigmoidError(ValueError):
    pass


@dataclass(frozen=True)
class Sigmoid:
    """Odd saturating coupling function with its first two derivatives."""

    name: str
    f: Callable[[np.ndarray], np.ndarray]
    df: Callable[[np.ndarray], np.ndarray]
    d2f: Callable[[np.ndarray], np.ndarray]

    def __call__(self, z):
        return self.f(z)

    def validate(self, lo: float = -10.0, hi: float = 10.0, samples: int = 2001) -> None:
        """Raise :class:`SigmoidError` unless S is odd, increasing, in the
        sector (0, 1] and has sign(S'') = -sign(z) on a sample grid."""
        z = np.linspace(lo, hi, samples)
        z = z[z != 0.0]
        s = self.f(z)
        if not np.allclose(self.f(-z), -s, rtol=1e-12, atol=1e-14):
            raise SigmoidError(f"{self.name}: not odd")
        if np.any(self.df(z) <= 0) or self.df(np.array([0.0]))[0] <= 0:
            raise SigmoidError(f"{self.name}: not strictly increasing")
        ratio = s / z
        if np.any(ratio <= 0) or np.any(ratio > 1 + 1e-12):
            raise SigmoidError(f"{self.name}: S(z)/z leaves the sector (0, 1]")
        curv = self.d2f(z)
        if np.any(curv * np.sign(z) > 1e-15):
            raise SigmoidError(f"{self.name}: sign(S'') != -sign(z)")


def _sech2(z):
    c = np.cosh(np.clip(z, -350.0, 350.0))
    return 1.0 / (c * c)


TANH = Sigmoid(
    "tanh",
    np.tanh,
    _sech2,
    lambda z: -2.0 * np.tanh(z) * _sech2(z),
)


def odd_saturation(k: float = 1.0) -> Sigmoid:
    """S(z) = z / (1 + |z|^k)^(1/k), a parameterized odd saturation (k > 0)."""
    if k <= 0:
        raise SigmoidError("saturation exponent must be positive")

    def f(z):
        z = np.asarray(z, dtype=float)
        return z / (1.0 + np.abs(z) ** k) ** (1.0 / k)

    def df(z):
        z = np.asarray(z, dtype=float)
        return (1.0 + np.abs(z) ** k) ** (-1.0 / k - 1.0)

    def d2f(z):
        z = np.asarray(z, dtype=float)
        a = np.abs(z)
        return -(1.0 + k) * np.sign(z) * a ** (k - 1.0) * (1.0 + a**k) ** (-1.0 / k - 2.0)

    return Sigmoid(f"odd_saturation(k={k:g})", f, df, d2f)


_REGISTRY: dict[str, Sigmoid] = {}


def register_sigmoid(sig: Sigmoid) -> Sigmoid:
    sig.validate()
    _REGISTRY[sig.name] = sig
    return sig


def get_sigmoid(name: str = "tanh") -> Sigmoid:
    if name in _REGISTRY:
        return _REGISTRY[name]
    if name.startswith("odd_saturation"):
        k = 1.0
        if "=" in name:
            k = float(name.split("=", 1)[1].rstrip(")"))
        return register_sigmoid(odd_saturation(k))
    raise SigmoidError(f"unknown sigmoid {name!r}")


register_sigmoid(TANH)
register_sigmoid(odd_saturation(1.0))
register_sigmoid(odd_saturation(2.0))


@dataclass(frozen=True, eq=False)
class InfoVector:
    """Per-agent information beta_i in {beta_a, 0, -beta_b} set by group label."""

    beta: np.ndarray
    beta_a: float
    beta_b: float
    assignment: np.ndarray

    @classmethod
    def from_groups(cls, groups, beta_a: float = 0.0, beta_b: float = 0.0) -> "InfoVector":
        if beta_a < 0 or beta_b < 0:
            raise ValueError("beta_a and beta_b must be nonnegative")
        g = np.asarray(groups, dtype=int)
        beta = np.zeros(g.shape, dtype=float)
        beta[g == INFORMED_A] = beta_a
        beta[g == INFORMED_B] = -beta_b
        return cls(beta, float(beta_a), float(beta_b), g)

    @classmethod
    def zeros(cls, n_agents: int) -> "InfoVector":
        return cls.from_groups(np.full(n_agents, UNINFORMED))

    @classmethod
    def from_json(cls, obj: dict, graph: Graph, u1: float = 1.0) -> "InfoVector":
        """``{"beta_a", "beta_b", "groups"}`` or the value form ``{"nu_a", "nu_b"}``
        (values are converted with beta = nu / u1)."""
        groups = obj.get("groups", graph.groups)
        if groups is None:
            groups = np.full(graph.n_agents, UNINFORMED)
        if "nu_a" in obj or "nu_b" in obj:
            return cls.from_groups(groups, obj.get("nu_a", 0.0) / u1, obj.get("nu_b", 0.0) / u1)
        return cls.from_groups(groups, obj.get("beta_a", 0.0), obj.get("beta_b", 0.0))

    def __neg__(self) -> "InfoVector":
        return InfoVector(-self.beta, -self.beta_a, -self.beta_b, self.assignment)


@dataclass(frozen=True)
class ModelParams:
    """Social effort in normalized form (u) with optional original-time pair."""

    u: float
    u1: float | None = None
    u2: float | None = None
    sigmoid: Sigmoid = TANH

    def __post_init__(self):
        if self.u < 0:
            raise ValueError("social effort u must be nonnegative")
        if self.u1 is not None and self.u2 is not None:
            if self.u1 <= 0 or self.u2 <= 0:
                raise ValueError("u1 and u2 must be positive")
            if not np.isclose(self.u, self.u2 / self.u1, rtol=1e-12, atol=0.0):
                raise ValueError("u must equal u2 / u1")

    @classmethod
    def from_original(cls, u1: float, u2: float, sigmoid: Sigmoid = TANH) -> "ModelParams":
        if u1 <= 0 or u2 <= 0:
            raise ValueError("u1 and u2 must be positive")
        return cls(u2 / u1, u1, u2, sigmoid)

    @classmethod
    def honeybee(cls, u2: float, nu: float, sigmoid: Sigmoid = TANH) -> "ModelParams":
        """Equal-value mapping u1 = 1/nu, so u = u2 * nu."""
        if nu <= 0:
            raise ValueError("value nu must be positive")
        return cls.from_original(1.0 / nu, u2, sigmoid)


@dataclass(frozen=True, eq=False)
class OpinionState:
    x: np.ndarray

    @property
    def y(self) -> float:
        return float(np.mean(self.x))

    @property
    def disagreement(self) -> float:
        return disagreement(self.x)


def collective_opinion(x) -> float:
    return float(np.mean(x))


def disagreement(x) -> float:
    """|y| - ||x||_1 / N; zero iff all nonzero opinions share a sign."""
    x = np.asarray(x, dtype=float)
    return float(abs(np.mean(x)) - np.mean(np.abs(x)))


def _as_vec(x, n: int) -> np.ndarray:
    x = np.asarray(getattr(x, "x", x), dtype=float)
    if x.shape != (n,):
        raise ValueError(f"state has shape {x.shape}, expected ({n},)")
    return x


def _beta(info, n: int) -> np.ndarray:
    if info is None:
        return np.zeros(n)
    b = np.asarray(getattr(info, "beta", info), dtype=float)
    if b.shape != (n,):
        raise ValueError(f"information vector has shape {b.shape}, expected ({n},)")
    return b


def field_normalized(x, g: Graph, p: ModelParams, info=None) -> np.ndarray:
    """-D x + u A S(x) + beta."""
    n = g.n_agents
    x = _as_vec(x, n)
    if p.u < 0:
        raise ValueError("u must be nonnegative")
    return -g.in_degrees * x + p.u * (g.adjacency @ p.sigmoid(x)) + _beta(info, n)


def field_original_time(x, g: Graph, u1: float, u2: float, nu=None, sigmoid: Sigmoid = TANH) -> np.ndarray:
    """-u1 D x + u2 A S(x) + nu."""
    if u1 <= 0:
        raise ValueError("u1 must be positive")
    if u2 < 0:
        raise ValueError("u2 must be nonnegative")
    n = g.n_agents
    x = _as_vec(x, n)
    return -u1 * g.in_degrees * x + u2 * (g.adjacency @ sigmoid(x)) + _beta(nu, n)


def field_honeybee_mapped(x, g: Graph, u2: float, nu: float, pattern=None, sigmoid: Sigmoid = TANH) -> np.ndarray:
    """Honeybee-mapped dynamics -(1/nu) D x + u2 A S(x) + nu * pattern.

    ``pattern`` holds +1 / -1 / 0 per agent (informed-A / informed-B /
    uninformed); it defaults to the graph's group labels.
    """
    if nu <= 0:
        raise ValueError("value nu must be positive")
    n = g.n_agents
    if pattern is None:
        pattern = info_pattern(g.groups if g.groups is not None else np.full(n, UNINFORMED))
    return field_original_time(x, g, 1.0 / nu, u2, nu * np.asarray(pattern, dtype=float), sigmoid)


def info_pattern(groups) -> np.ndarray:
    g = np.asarray(groups, dtype=int)
    return np.where(g == INFORMED_A, 1.0, np.where(g == INFORMED_B, -1.0, 0.0))


def jacobian(x, g: Graph, p: ModelParams, info=None) -> np.ndarray:
    """-D + u A diag(S'(x)); independent of the information vector."""
    x = _as_vec(x, g.n_agents)
    return -np.diag(g.in_degrees) + p.u * g.adjacency * p.sigmoid.df(x)[None, :]


def dfield_du(x, g: Graph, p: ModelParams) -> np.ndarray:
    x = _as_vec(x, g.n_agents)
    return g.adjacency @ p.sigmoid(x)


class Decision(enum.Enum):
    A = "DecisionA"
    B = "DecisionB"
    DEADLOCK = "Deadlock"


def classify_state(x_ss, eta: float, tol: float | None = None) -> Decision:
    """Decision for A (B) when there is no disagreement and y > eta (y < -eta)."""
    x = np.asarray(getattr(x_ss, "x", x_ss), dtype=float)
    if eta <= 0:
        raise ValueError("eta must be positive")
    if tol is None:
        tol = 1e-8 * x.size
    delta = disagreement(x)
    y = float(np.mean(x))
    if delta >= -tol:
        if y > eta:
            return Decision.A
        if y < -eta:
            return Decision.B
    return Decision.DEADLOCK
