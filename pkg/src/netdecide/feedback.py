"""Closed-loop social effort: slow feedback from the collective opinion to u.

Three variants share the law u' = eps (y_th^2 - y^2):

* uniform effort on an all-to-all graph, with y the network average;
* the same law on the reduced two-informed-group model;
* per-agent effort on a balanced graph, where agent i replaces y by a
  running estimate yhat_i driven by yhat' = -L yhat + x'.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from . import kernels
from .dynamics import TANH, ModelParams, Sigmoid
from .graph import Graph, ThreeGroupSpec, is_balanced
from .integrate import DIVERGENCE_GUARD, IntegrationConfig, Trajectory, _from_kernel, integrate, write_csv
from .reduction import reduced_field

U_MAX = 50.0


class NoPassage(RuntimeError):
    """The opinion never left the neighbourhood of the deadlock."""


class UnbalancedGraphError(ValueError):
    pass


@dataclass(frozen=True)
class FeedbackParams:
    epsilon: float = 1e-2
    y_th: float = 1.0

    def __post_init__(self):
        if not 0 < self.epsilon < 1:
            raise ValueError("epsilon must lie in (0, 1)")
        if self.y_th <= 0:
            raise ValueError("y_th must be positive")


@dataclass(frozen=True, eq=False)
class ClosedLoopState:
    x: np.ndarray
    u: np.ndarray
    y_hat: np.ndarray | None = None

    @classmethod
    def initial(cls, x0, u0, estimator: bool = False) -> "ClosedLoopState":
        x0 = np.asarray(x0, dtype=float)
        u = np.broadcast_to(np.asarray(u0, dtype=float), x0.shape if estimator else np.shape(u0)).copy()
        return cls(x0, u, x0.copy() if estimator else None)

    @classmethod
    def unpack(cls, z, n: int) -> "ClosedLoopState":
        z = np.asarray(z, dtype=float)
        if z.size == n + 1:
            return cls(z[:n], z[n:])
        if z.size == 3 * n:
            return cls(z[:n], z[2 * n :], z[n : 2 * n])
        raise ValueError(f"state of length {z.size} does not fit N={n}")

    def pack(self) -> np.ndarray:
        if self.y_hat is None:
            return np.concatenate([self.x, np.atleast_1d(self.u)])
        return np.concatenate([self.x, self.y_hat, self.u])

    @property
    def y(self) -> float:
        return float(np.mean(self.x))


def estimate_error(state: ClosedLoopState) -> np.ndarray:
    """xi = y 1 - yhat, the per-agent error in the average estimate."""
    if state.y_hat is None:
        raise ValueError("state carries no average estimates")
    return state.y - state.y_hat


def closed_loop_field_uniform(z, g: Graph, p: FeedbackParams, sigmoid: Sigmoid = TANH) -> np.ndarray:
    """Field on (x, u) for a shared effort on an all-to-all graph."""
    if not g.is_all_to_all:
        raise ValueError("uniform feedback needs an all-to-all graph")
    n = g.n_agents
    z = np.asarray(z, dtype=float)
    x, u = z[:n], z[n]
    y = x.mean()
    out = np.empty(n + 1)
    out[:n] = -g.in_degrees * x + u * (g.adjacency @ sigmoid(x))
    out[n] = p.epsilon * (p.y_th**2 - y * y)
    return out


def reduced_closed_loop_field(y: float, u: float, n_agents: int, p: FeedbackParams, sigmoid: Sigmoid = TANH):
    """Consensus-manifold dynamics (y, u)."""
    return np.array(
        [(n_agents - 1) * (-y + u * float(sigmoid(np.asarray(y)))), p.epsilon * (p.y_th**2 - y * y)]
    )


def closed_loop_field_informed_z2(y1, y2, y3, u, spec: ThreeGroupSpec, beta: float, p: FeedbackParams,
                                  sigmoid: Sigmoid = TANH) -> np.ndarray:
    """Reduced three-group opinions with informed groups pulled by +beta and
    -beta, plus the effort law on the size-weighted average."""
    if spec.n1 != spec.n2:
        raise ValueError("informed groups must have equal size")
    y = np.array([y1, y2, y3], dtype=float)
    fy = reduced_field(y, spec, ModelParams(max(u, 0.0), sigmoid=sigmoid), beta, beta)
    ybar = float(spec.sizes @ y) / spec.n_agents
    return np.append(fy, p.epsilon * (p.y_th**2 - ybar * ybar))


def closed_loop_field_general(z, g: Graph, p: FeedbackParams, sigmoid: Sigmoid = TANH, check: bool = True):
    """Field on (x, yhat, u) with per-agent effort and average estimation."""
    if check and not is_balanced(g):
        raise UnbalancedGraphError("average estimation requires a balanced graph")
    n = g.n_agents
    z = np.asarray(z, dtype=float)
    x, yh, u = z[:n], z[n : 2 * n], z[2 * n :]
    A, d = g.adjacency, g.in_degrees
    xd = -d * x + u * (A @ sigmoid(x))
    out = np.empty(3 * n)
    out[:n] = xd
    out[n : 2 * n] = -d * yh + A @ yh + xd
    out[2 * n :] = p.epsilon * (p.y_th**2 - yh * yh)
    return out


# --- critical manifold ----------------------------------------------------------


def ybar(u: float, sigmoid: Sigmoid = TANH) -> float:
    """Positive root of -y + u S(y) for u > 1 (zero otherwise)."""
    if u <= 1:
        return 0.0
    hi = u  # |S| <= 1 bounds the root by u
    return brentq(lambda y: -y + u * float(sigmoid(np.asarray(y))), 1e-300, hi, xtol=1e-15, rtol=1e-15)


def ybar_inverse(y_th: float, sigmoid: Sigmoid = TANH) -> float:
    """Effort at which the critical manifold reaches y_th."""
    return brentq(lambda u: -y_th + u * float(sigmoid(np.asarray(y_th))), 1e-12, 1e6, xtol=1e-15, rtol=1e-15)


def closed_loop_equilibrium(n_agents: int, p: FeedbackParams, sign: float = 1.0, sigmoid: Sigmoid = TANH):
    """(y, u) equilibrium of the consensus-manifold loop, Newton-polished."""
    y = np.sign(sign) * p.y_th
    u = ybar_inverse(p.y_th, sigmoid)
    z = np.array([y, u])
    for _ in range(20):
        f = reduced_closed_loop_field(z[0], z[1], n_agents, p, sigmoid)
        if np.max(np.abs(f)) < 1e-15:
            break
        s, ds = float(sigmoid(np.asarray(z[0]))), float(sigmoid.df(np.asarray(z[0])))
        J = np.array([[(n_agents - 1) * (-1 + z[1] * ds), (n_agents - 1) * s], [-2 * p.epsilon * z[0], 0.0]])
        z = z - np.linalg.solve(J, f)
    return float(z[0]), float(z[1])


# --- simulation -----------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ClosedLoopRun:
    traj: Trajectory
    n_agents: int
    n_efforts: int
    estimator: bool
    aborted: bool = False
    diagnostic: str = ""

    @property
    def x(self) -> np.ndarray:
        return self.traj.states[:, : self.n_agents]

    @property
    def y_hat(self) -> np.ndarray | None:
        if not self.estimator:
            return None
        return self.traj.states[:, self.n_agents : 2 * self.n_agents]

    @property
    def u(self) -> np.ndarray:
        return self.traj.states[:, -self.n_efforts :]

    @property
    def y(self) -> np.ndarray:
        return self.x.mean(axis=1)

    def estimate_errors(self) -> np.ndarray:
        if not self.estimator:
            raise ValueError("run has no average estimates")
        return self.y[:, None] - self.y_hat

    def write_csv(self, path) -> None:
        """Columns ``s,x_1..x_N,u_1..u_k[,yhat_1..yhat_N],y``."""
        n, k = self.n_agents, self.n_efforts
        header = ["s"] + [f"x_{i + 1}" for i in range(n)] + [f"u_{i + 1}" for i in range(k)]
        cols = [self.traj.times[:, None], self.x, self.u]
        if self.estimator:
            header += [f"yhat_{i + 1}" for i in range(n)]
            cols.append(self.y_hat)
        header.append("y")
        cols.append(self.y[:, None])
        write_csv(path, header, np.hstack(cols))


def _abort_note(traj: Trajectory, u_max: float) -> tuple[bool, str]:
    if traj.status == 2:
        return True, f"social effort exceeded u_max={u_max:g} at s={traj.times[-1]:.6g}"
    return False, ""


def _wrap(traj, n, k, est, u_max):
    ab, msg = _abort_note(traj, u_max)
    return ClosedLoopRun(traj, n, k, est, ab, msg)


def simulate_uniform(g: Graph, p: FeedbackParams, x0, u0: float, cfg: IntegrationConfig,
                     u_max: float = U_MAX, sigmoid: Sigmoid = TANH) -> ClosedLoopRun:
    n = g.n_agents
    z0 = np.append(np.asarray(x0, dtype=float), u0)
    if cfg.method == "rk4" and sigmoid is TANH:
        if not g.is_all_to_all:
            raise ValueError("uniform feedback needs an all-to-all graph")
        res = kernels.rk4_closed_loop_uniform(
            g.adjacency, g.in_degrees, z0, p.epsilon, p.y_th, cfg.dt, cfg.n_steps, cfg.record_stride,
            DIVERGENCE_GUARD, u_max,
        )
        traj = _from_kernel(res, cfg, n)
    else:
        traj = integrate(lambda z: closed_loop_field_uniform(z, g, p, sigmoid), z0, cfg, n,
                         stop=lambda z: u_max - z[n])
    return _wrap(traj, n, 1, False, u_max)


def simulate_general(g: Graph, p: FeedbackParams, x0, u0, cfg: IntegrationConfig, y_hat0=None,
                     u_max: float = U_MAX, sigmoid: Sigmoid = TANH) -> ClosedLoopRun:
    """Per-agent loop; the estimates start at ``x0`` unless given."""
    if not is_balanced(g):
        raise UnbalancedGraphError("average estimation requires a balanced graph")
    n = g.n_agents
    x0 = np.asarray(x0, dtype=float)
    yh0 = x0.copy() if y_hat0 is None else np.asarray(y_hat0, dtype=float)
    z0 = np.concatenate([x0, yh0, np.broadcast_to(np.asarray(u0, dtype=float), (n,))])
    if cfg.method == "rk4" and sigmoid is TANH:
        res = kernels.rk4_closed_loop_general(
            g.adjacency, g.in_degrees, z0, p.epsilon, p.y_th, cfg.dt, cfg.n_steps, cfg.record_stride,
            DIVERGENCE_GUARD, u_max,
        )
        traj = _from_kernel(res, cfg, n)
    else:
        traj = integrate(lambda z: closed_loop_field_general(z, g, p, sigmoid, check=False), z0, cfg, n,
                         stop=lambda z: u_max - np.max(z[2 * n :]))
    return _wrap(traj, n, n, True, u_max)


def simulate_reduced(n_agents: int, p: FeedbackParams, y0: float, u0: float, cfg: IntegrationConfig,
                     u_max: float = U_MAX, sigmoid: Sigmoid = TANH, t_eval=None) -> ClosedLoopRun:
    """Consensus-manifold loop; states are (y, u)."""

    def f(z):
        return reduced_closed_loop_field(z[0], z[1], n_agents, p, sigmoid)

    traj = integrate(f, np.array([y0, u0], dtype=float), cfg, 1, t_eval=t_eval, stop=lambda z: u_max - z[1])
    return _wrap(traj, 1, 1, False, u_max)


def simulate_informed_z2(spec: ThreeGroupSpec, beta: float, p: FeedbackParams, y0, u0: float,
                         cfg: IntegrationConfig, u_max: float = U_MAX, sigmoid: Sigmoid = TANH) -> ClosedLoopRun:
    """Reduced three-group loop; the opinion columns are the group values."""

    def f(z):
        return closed_loop_field_informed_z2(z[0], z[1], z[2], z[3], spec, beta, p, sigmoid)

    traj = integrate(f, np.append(np.asarray(y0, dtype=float), u0), cfg, 3, stop=lambda z: u_max - z[3])
    return _wrap(traj, 3, 1, False, u_max)


# --- bifurcation delay ----------------------------------------------------------


def measure_bifurcation_delay(run_or_traj, u_star: float = 1.0, departure_tol: float | None = None,
                              epsilon: float | None = None, weights=None) -> float:
    """u_depart - u_star, where u_depart is the effort at which |y| first
    exceeds ``departure_tol`` after u has passed ``u_star``.

    The crossing is located by linear interpolation between samples.
    ``departure_tol`` defaults to 10 * epsilon. For three-group runs pass the
    group sizes as ``weights`` so y is the size-weighted average.
    """
    if departure_tol is None:
        if epsilon is None:
            raise ValueError("give departure_tol or epsilon")
        departure_tol = 10.0 * epsilon
    if isinstance(run_or_traj, ClosedLoopRun):
        x, u = run_or_traj.x, run_or_traj.u.mean(axis=1)
    else:
        tr = run_or_traj
        n = tr.n_opinions or tr.states.shape[1] - 1
        x, u = tr.states[:, :n], tr.states[:, n:].mean(axis=1)
    if weights is None:
        y = x.mean(axis=1)
    else:
        w = np.asarray(weights, dtype=float)
        y = x @ w / w.sum()
    ay = np.abs(y)
    past = np.flatnonzero(u >= u_star)
    if past.size == 0:
        raise NoPassage(f"effort never reached u_star={u_star:g}")
    k0 = past[0]
    hit = np.flatnonzero(ay[k0:] > departure_tol)
    if hit.size == 0:
        raise NoPassage(f"|y| stayed below {departure_tol:g} after u passed {u_star:g}")
    k = k0 + hit[0]
    if k == 0 or k == k0:
        u_dep = u[k]
    else:
        f = (departure_tol - ay[k - 1]) / (ay[k] - ay[k - 1])
        u_dep = u[k - 1] + f * (u[k] - u[k - 1])
    return float(u_dep - u_star)


def delay_report(run, epsilon: float, u_star: float = 1.0, departure_tol: float | None = None, weights=None):
    d = measure_bifurcation_delay(run, u_star, departure_tol, epsilon, weights)
    return {"epsilon": epsilon, "u_star": u_star, "u_depart": u_star + d, "delay": d}


def write_delay_json(path, report: dict) -> None:
    with open(path, "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
