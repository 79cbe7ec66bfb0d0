"""Pure NumPy fixed-step RK4 kernels (fallback for ``_ckernels``).

All kernels share one contract: integrate from step 0 to ``nsteps`` with step
``dt``, record the state at step 0, every ``stride`` steps and at the final
step, and stop early when the state leaves the finite/guarded region.

Returns ``(steps, states, status, last_step, last_state)`` where ``status`` is
0 (completed), 1 (state nonfinite or beyond ``guard``) or 2 (social effort
above ``u_max``). ``last_state`` is the last finite state reached.
"""

import numpy as np

BACKEND = "python"


def _drive(deriv, z0, dt, nsteps, stride, guard, u_slice=None, u_max=np.inf):
    z = np.array(z0, dtype=float)
    steps = [0]
    states = [z.copy()]
    status = 0
    k = 0
    h2 = 0.5 * dt
    h6 = dt / 6.0
    while k < nsteps:
        k1 = deriv(z)
        k2 = deriv(z + h2 * k1)
        k3 = deriv(z + h2 * k2)
        k4 = deriv(z + dt * k3)
        znew = z + h6 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(znew)) or np.max(np.abs(znew)) > guard:
            status = 1
            break
        z = znew
        k += 1
        if u_slice is not None and np.max(z[u_slice]) > u_max:
            status = 2
            steps.append(k)
            states.append(z.copy())
            break
        if k % stride == 0 or k == nsteps:
            steps.append(k)
            states.append(z.copy())
    return np.array(steps, dtype=np.int64), np.array(states), status, k, z


def rk4_network(A, d, gain, beta, x0, dt, nsteps, stride=1, guard=1e6):
    """x' = -d*x + gain * (A @ tanh(x)) + beta, gain per agent."""
    A = np.ascontiguousarray(A, dtype=float)
    d = np.asarray(d, dtype=float)
    gain = np.asarray(gain, dtype=float)
    beta = np.asarray(beta, dtype=float)

    def deriv(x):
        return -d * x + gain * (A @ np.tanh(x)) + beta

    return _drive(deriv, x0, dt, nsteps, stride, guard)


def rk4_closed_loop_uniform(A, d, z0, eps, yth, dt, nsteps, stride=1, guard=1e6, u_max=np.inf):
    """z = (x, u): x' = -d*x + u A tanh(x), u' = eps (yth^2 - mean(x)^2)."""
    A = np.ascontiguousarray(A, dtype=float)
    d = np.asarray(d, dtype=float)
    n = d.size
    yth2 = yth * yth

    def deriv(z):
        x = z[:n]
        out = np.empty_like(z)
        out[:n] = -d * x + z[n] * (A @ np.tanh(x))
        y = x.mean()
        out[n] = eps * (yth2 - y * y)
        return out

    return _drive(deriv, z0, dt, nsteps, stride, guard, slice(n, n + 1), u_max)


def rk4_closed_loop_general(A, d, z0, eps, yth, dt, nsteps, stride=1, guard=1e6, u_max=np.inf):
    """z = (x, yhat, u) with per-agent effort and dynamic average estimation."""
    A = np.ascontiguousarray(A, dtype=float)
    d = np.asarray(d, dtype=float)
    n = d.size
    yth2 = yth * yth

    def deriv(z):
        x = z[:n]
        yh = z[n : 2 * n]
        u = z[2 * n :]
        out = np.empty_like(z)
        xd = -d * x + u * (A @ np.tanh(x))
        out[:n] = xd
        out[n : 2 * n] = -d * yh + A @ yh + xd
        out[2 * n :] = eps * (yth2 - yh * yh)
        return out

    return _drive(deriv, z0, dt, nsteps, stride, guard, slice(2 * n, 3 * n), u_max)
