"""Deterministic ODE integration and trajectory records."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import solve_ivp

from . import kernels
from .dynamics import TANH, ModelParams
from .graph import Graph

DIVERGENCE_GUARD = 1e6


class IntegrationError(RuntimeError):
    """Integration aborted; ``last_state`` / ``last_time`` hold the last finite point."""

    def __init__(self, msg, last_time=None, last_state=None):
        super().__init__(msg)
        self.last_time = last_time
        self.last_state = last_state


@dataclass(frozen=True)
class IntegrationConfig:
    t_end: float
    method: str = "rk4"
    dt: float = 1e-2
    rtol: float = 1e-9
    atol: float = 1e-12
    dt_max: float = np.inf
    record_stride: int = 1

    def __post_init__(self):
        if self.method not in ("rk4", "rk45"):
            raise ValueError(f"unknown method {self.method!r}")
        if self.t_end <= 0 or self.dt <= 0:
            raise ValueError("t_end and dt must be positive")
        if self.rtol <= 0 or self.atol <= 0:
            raise ValueError("rtol and atol must be positive")
        if self.record_stride < 1:
            raise ValueError("record_stride must be >= 1")

    @property
    def n_steps(self) -> int:
        return int(np.ceil(self.t_end / self.dt - 1e-9))


@dataclass(frozen=True, eq=False)
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    n_opinions: int | None = None
    status: int = 0  # 0 completed, 2 stopped by a stop condition

    def __post_init__(self):
        if self.states.shape[0] != self.times.shape[0]:
            raise ValueError("one state row per time is required")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")

    @property
    def opinions(self) -> np.ndarray:
        n = self.n_opinions if self.n_opinions is not None else self.states.shape[1]
        return self.states[:, :n]

    @property
    def y(self) -> np.ndarray:
        return self.opinions.mean(axis=1)

    @property
    def delta(self) -> np.ndarray:
        x = self.opinions
        return np.abs(x.mean(axis=1)) - np.abs(x).mean(axis=1)

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]

    def __len__(self):
        return self.times.shape[0]


def _rk4_python(field, x0, cfg: IntegrationConfig, stop=None):
    x = np.array(x0, dtype=float)
    n_steps = cfg.n_steps
    dt = cfg.dt
    times, states = [0.0], [x.copy()]
    stopped = False
    for k in range(1, n_steps + 1):
        k1 = field(x)
        k2 = field(x + 0.5 * dt * k1)
        k3 = field(x + 0.5 * dt * k2)
        k4 = field(x + dt * k3)
        xn = x + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.all(np.isfinite(xn)) or np.max(np.abs(xn)) > DIVERGENCE_GUARD:
            raise IntegrationError(
                f"state diverged at t={k * dt:.6g}; last finite state at t={(k - 1) * dt:.6g}",
                (k - 1) * dt,
                x,
            )
        x = xn
        if stop is not None and stop(x) <= 0:
            times.append(k * dt)
            states.append(x.copy())
            stopped = True
            break
        if k % cfg.record_stride == 0 or k == n_steps:
            times.append(k * dt)
            states.append(x.copy())
    return np.array(times), np.array(states), stopped


def _rk45(field, x0, cfg: IntegrationConfig, t_eval=None, stop=None):
    def guard(t, x):
        return DIVERGENCE_GUARD - np.max(np.abs(x))

    guard.terminal = True
    events = [guard]
    if stop is not None:
        def user_stop(t, x):
            return stop(x)

        user_stop.terminal = True
        user_stop.direction = -1
        events.append(user_stop)
    sol = solve_ivp(
        lambda t, x: field(x),
        (0.0, cfg.t_end),
        np.asarray(x0, dtype=float),
        method="RK45",
        rtol=cfg.rtol,
        atol=cfg.atol,
        max_step=cfg.dt_max,
        t_eval=t_eval,
        events=events,
    )
    stopped = stop is not None and sol.status == 1 and sol.t_events[1].size > 0
    if (sol.status == 1 and not stopped) or not np.all(np.isfinite(sol.y)):
        raise IntegrationError(
            f"state left the guarded region at t={sol.t[-1]:.6g}", sol.t[-1], sol.y[:, -1]
        )
    if sol.status < 0:
        raise IntegrationError(sol.message, sol.t[-1], sol.y[:, -1])
    times, states = sol.t, sol.y.T
    if stopped:
        te, ye = sol.t_events[1][0], sol.y_events[1][0]
        if te > times[-1]:
            times, states = np.append(times, te), np.vstack([states, ye])
    if t_eval is None and cfg.record_stride > 1:
        keep = np.zeros(times.size, dtype=bool)
        keep[:: cfg.record_stride] = True
        keep[-1] = True
        times, states = times[keep], states[keep]
    return times, states, stopped


def integrate(
    field: Callable[[np.ndarray], np.ndarray],
    x0,
    cfg: IntegrationConfig,
    n_opinions: int | None = None,
    t_eval: Sequence[float] | None = None,
    stop: Callable[[np.ndarray], float] | None = None,
) -> Trajectory:
    """Integrate the autonomous field ``x' = field(x)`` from ``x0``.

    ``stop(x)`` ends the run once it drops to zero or below; the trajectory's
    ``status`` is then 2 (0 for a completed run).
    """
    x0 = np.asarray(x0, dtype=float)
    probe = np.asarray(field(x0))
    if probe.shape != x0.shape:
        raise ValueError(f"field returns shape {probe.shape} for state of shape {x0.shape}")
    if cfg.method == "rk4":
        times, states, stopped = _rk4_python(field, x0, cfg, stop)
    else:
        times, states, stopped = _rk45(field, x0, cfg, t_eval, stop)
    return Trajectory(times, states, n_opinions, 2 if stopped else 0)


def _from_kernel(result, cfg: IntegrationConfig, n_opinions=None, t_offset=0.0) -> Trajectory:
    steps, states, status, last_step, last_state = result
    if status == 1:
        raise IntegrationError(
            f"state diverged after t={last_step * cfg.dt:.6g}", last_step * cfg.dt, last_state
        )
    return Trajectory(t_offset + steps * cfg.dt, states, n_opinions, status)


def simulate_network(g: Graph, p: ModelParams, x0, cfg: IntegrationConfig, info=None) -> Trajectory:
    """Integrate -D x + u A S(x) + beta, using the compiled kernel when possible."""
    n = g.n_agents
    beta = np.zeros(n) if info is None else np.asarray(getattr(info, "beta", info), dtype=float)
    if cfg.method == "rk4" and p.sigmoid is TANH:
        res = kernels.rk4_network(
            g.adjacency, g.in_degrees, np.full(n, p.u), beta, x0, cfg.dt, cfg.n_steps,
            cfg.record_stride, DIVERGENCE_GUARD,
        )
        return _from_kernel(res, cfg)
    from .dynamics import field_normalized

    return integrate(lambda x: field_normalized(x, g, p, beta), x0, cfg)


def consensus_lyapunov(x) -> float:
    """Sum over ordered pairs of (x_i - x_j)^2 / 2."""
    x = np.asarray(x, dtype=float)
    n = x.size
    # sum_{i,j} (x_i - x_j)^2 / 2 = N * sum (x_i - mean)^2
    return float(n * np.sum((x - x.mean()) ** 2))


def within_group_spread(x, index_sets) -> float:
    x = np.asarray(x, dtype=float)
    return max((np.ptp(x[idx]) if idx.size else 0.0) for idx in index_sets)


def is_stationary(field, traj: Trajectory, tol: float = 1e-9, window: int = 10) -> bool:
    """True when the last ``window`` records all have ||field||_inf < tol."""
    if len(traj) < window:
        return False
    return all(np.max(np.abs(field(s))) < tol for s in traj.states[-window:])


def write_csv(path, header: Sequence[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))  # shortest string that round-trips
    return str(v)


def write_trajectory_csv(path, traj: Trajectory) -> None:
    """Columns ``s,x_1..x_N,y,delta``."""
    x = traj.opinions
    n = x.shape[1]
    header = ["s"] + [f"x_{i + 1}" for i in range(n)] + ["y", "delta"]
    rows = (
        [t, *xi, yi, di] for t, xi, yi, di in zip(traj.times, x, traj.y, traj.delta)
    )
    write_csv(path, header, rows)
