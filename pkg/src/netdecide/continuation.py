"""Newton equilibria and pseudo-arclength continuation with singularity detection.

Fields and Jacobians are callables ``field(x, p)`` / ``jacobian(x, p)`` where
``p`` is the scalar continuation parameter. Folds are detected by a sign change
of the parameter component of the branch tangent. Branch points (labelled
``pitchfork``) show up as a sign change of ``det(J_x)`` with no such reversal.
Both are refined by bisection in arclength.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from typing import Callable

import numpy as np

Field = Callable[[np.ndarray, float], np.ndarray]


class NewtonError(RuntimeError):
    pass


class MaxIterExceeded(NewtonError):
    pass


class SingularJacobian(NewtonError):
    pass


class StepFailure(RuntimeError):
    def __init__(self, msg, branch=None):
        super().__init__(msg)
        self.branch = branch


@dataclass(eq=False)
class EquilibriumPoint:
    param: float
    state: np.ndarray
    max_real_eig: float
    stable: bool
    singular: bool = False
    singular_kind: str = ""
    residual: float = 0.0

    def __repr__(self):
        return (
            f"EquilibriumPoint(param={self.param:.10g}, max_real_eig={self.max_real_eig:.4g}, "
            f"stable={self.stable}, singular_kind={self.singular_kind!r})"
        )


@dataclass(eq=False)
class Singularity:
    param: float
    kind: str
    state: np.ndarray
    index: int
    null_vector: np.ndarray | None = None

    def __repr__(self):
        return f"Singularity({self.kind!r}, param={self.param:.10g})"


@dataclass(eq=False)
class EquilibriumBranch:
    points: list = dc_field(default_factory=list)
    singularities: list = dc_field(default_factory=list)
    label: str = ""

    @property
    def params(self) -> np.ndarray:
        return np.array([p.param for p in self.points])

    @property
    def states(self) -> np.ndarray:
        return np.array([p.state for p in self.points])

    @property
    def stable(self) -> np.ndarray:
        return np.array([p.stable for p in self.points])

    @property
    def max_real_eigs(self) -> np.ndarray:
        return np.array([p.max_real_eig for p in self.points])

    def of_kind(self, kind: str) -> list:
        return [s for s in self.singularities if s.kind == kind]

    def __len__(self):
        return len(self.points)


@dataclass(frozen=True)
class ContinuationSettings:
    ds: float = 1e-2
    ds_min: float = 1e-5
    ds_max: float = 5e-2
    newton_tol: float = 1e-10
    max_corrector: int = 25
    max_steps: int = 20000
    stability_margin: float = 1e-8
    refine_tol: float = 1e-12
    detect: bool = True


def _eig_data(jac: np.ndarray, margin: float):
    m = float(np.max(np.linalg.eigvals(jac).real))
    return m, m < -margin


def newton_solve(
    field: Field,
    jacobian: Field,
    guess,
    param: float,
    tol: float = 1e-10,
    max_iter: int = 25,
    stability_margin: float = 1e-8,
    cond_max: float = 1e13,
) -> EquilibriumPoint:
    """Solve field(x, param) = 0 by Newton's method from ``guess``."""
    x = np.array(guess, dtype=float).reshape(-1)
    for _ in range(max_iter + 1):
        f = np.asarray(field(x, param), dtype=float)
        res = float(np.max(np.abs(f)))
        J = np.asarray(jacobian(x, param), dtype=float)
        if res <= tol:
            m, st = _eig_data(J, stability_margin)
            return EquilibriumPoint(param, x, m, st, residual=res)
        if not np.isfinite(res):
            raise NewtonError("nonfinite residual")
        if np.linalg.cond(J) > cond_max:
            raise SingularJacobian(f"Jacobian near singular at param={param:.10g}")
        x = x - np.linalg.solve(J, f)
    raise MaxIterExceeded(f"Newton did not converge in {max_iter} iterations (residual {res:.3e})")


def _fd_dfdp(field: Field) -> Field:
    def dfdp(x, p):
        h = 1e-6 * max(1.0, abs(p))
        return (np.asarray(field(x, p + h)) - np.asarray(field(x, p - h))) / (2 * h)

    return dfdp


class _Continuer:
    def __init__(self, field, jacobian, dfdp, settings):
        self.field = field
        self.jacobian = jacobian
        self.dfdp = dfdp or _fd_dfdp(field)
        self.s = settings

    def augmented(self, z, t):
        x, p = z[:-1], z[-1]
        J = np.asarray(self.jacobian(x, p), dtype=float)
        fp = np.asarray(self.dfdp(x, p), dtype=float).reshape(-1, 1)
        top = np.hstack([J, fp])
        return J, np.vstack([top, t.reshape(1, -1)])

    def tangent(self, z, t_ref):
        _, M = self.augmented(z, t_ref)
        rhs = np.zeros(z.size)
        rhs[-1] = 1.0
        t = np.linalg.solve(M, rhs)
        return t / np.linalg.norm(t)

    def correct(self, zp, t):
        """Newton on F(z) = 0, t.(z - zp) = 0. Returns (z, iterations) or None."""
        z = zp.copy()
        for it in range(1, self.s.max_corrector + 1):
            x, p = z[:-1], z[-1]
            f = np.asarray(self.field(x, p), dtype=float)
            g = np.append(f, t @ (z - zp))
            _, M = self.augmented(z, t)
            try:
                dz = np.linalg.solve(M, g)
            except np.linalg.LinAlgError:
                return None
            z = z - dz
            if not np.all(np.isfinite(z)):
                return None
            res = np.max(np.abs(self.field(z[:-1], z[-1])))
            if res <= self.s.newton_tol and np.max(np.abs(dz)) <= 1e3 * self.s.newton_tol * max(1.0, np.max(np.abs(z))):
                return z, it
            if res <= self.s.newton_tol * 1e-2:
                return z, it
        return None

    def point(self, z):
        J = np.asarray(self.jacobian(z[:-1], z[-1]), dtype=float)
        m, st = _eig_data(J, self.s.stability_margin)
        res = float(np.max(np.abs(self.field(z[:-1], z[-1]))))
        return EquilibriumPoint(float(z[-1]), z[:-1].copy(), m, st, residual=res)

    def det_sign(self, z):
        J = np.asarray(self.jacobian(z[:-1], z[-1]), dtype=float)
        return np.linalg.slogdet(J)[0]

    def bisect(self, z0, t0, ds, test):
        """Locate the sign change of ``test(z, t)`` along [0, ds] from z0."""
        lo, hi = 0.0, ds
        s_lo = test(z0, t0)
        z_best, t_best = z0, t0
        for _ in range(80):
            if hi - lo <= self.s.refine_tol * max(1.0, ds):
                break
            mid = 0.5 * (lo + hi)
            out = self.correct(z0 + mid * t0, t0)
            if out is None:
                break
            zm = out[0]
            tm = self.tangent(zm, t0)
            if test(zm, tm) == s_lo:
                lo = mid
            else:
                hi = mid
            z_best, t_best = zm, tm
        return z_best, t_best


def continue_branch(
    field: Field,
    jacobian: Field,
    start: EquilibriumPoint,
    param_range: tuple[float, float],
    settings: ContinuationSettings | None = None,
    dfdp: Field | None = None,
    direction: float = 1.0,
    tangent: np.ndarray | None = None,
    label: str = "",
) -> EquilibriumBranch:
    """Pseudo-arclength continuation from a converged equilibrium.

    ``direction`` picks the initial sense of the parameter; ``tangent`` (in
    (x, p) coordinates) overrides it, e.g. when leaving a branch point.
    """
    s = settings or ContinuationSettings()
    c = _Continuer(field, jacobian, dfdp, s)
    pmin, pmax = min(param_range), max(param_range)
    z = np.append(np.asarray(start.state, dtype=float), start.param)
    if tangent is None:
        ref = np.zeros(z.size)
        ref[-1] = np.sign(direction) or 1.0
    else:
        ref = np.asarray(tangent, dtype=float)
    t = c.tangent(z, ref)
    if t @ ref < 0:
        t = -t
    branch = EquilibriumBranch(label=label)
    branch.points.append(c.point(z))
    det_prev = c.det_sign(z)
    ds = s.ds
    for _ in range(s.max_steps):
        out = c.correct(z + ds * t, t)
        while out is None:
            ds *= 0.5
            if ds < s.ds_min:
                raise StepFailure(
                    f"corrector failed near param={z[-1]:.10g} with ds < {s.ds_min:g}", branch
                )
            out = c.correct(z + ds * t, t)
        z_new, iters = out
        t_new = c.tangent(z_new, t)
        det_new = c.det_sign(z_new)
        if s.detect:
            fold = t[-1] * t_new[-1] < 0
            if fold:
                zf, tf = c.bisect(z, t, ds, lambda zz, tt: np.sign(tt[-1]))
                _mark(branch, c, zf, "fold", tf)
            elif det_new != det_prev and det_new != 0 and det_prev != 0:
                zb, tb = c.bisect(z, t, ds, lambda zz, tt: c.det_sign(zz))
                _mark(branch, c, zb, "pitchfork", tb)
        z, t, det_prev = z_new, t_new, det_new
        if not (pmin <= z[-1] <= pmax):
            _close_at_boundary(branch, c, z, t, pmin if z[-1] < pmin else pmax, s)
            break
        branch.points.append(c.point(z))
        if iters <= 3:
            ds = min(ds * 1.5, s.ds_max)
        elif iters > 8:
            ds = max(ds * 0.5, s.ds_min)
    return branch


def _mark(branch, c, z, kind, t):
    pt = c.point(z)
    pt.singular = True
    pt.singular_kind = kind
    J = np.asarray(c.jacobian(z[:-1], z[-1]), dtype=float)
    null = np.linalg.svd(J)[2][-1]
    branch.singularities.append(Singularity(float(z[-1]), kind, z[:-1].copy(), len(branch.points), null))
    branch.points.append(pt)


def _close_at_boundary(branch, c, z_out, t, p_edge, s):
    prev = np.append(branch.points[-1].state, branch.points[-1].param)
    frac = (p_edge - prev[-1]) / (z_out[-1] - prev[-1])
    guess = prev[:-1] + frac * (z_out[:-1] - prev[:-1])
    try:
        pt = newton_solve(c.field, c.jacobian, guess, p_edge, s.newton_tol, s.max_corrector, s.stability_margin)
    except NewtonError:
        return
    if abs(pt.param - branch.points[-1].param) > 0:
        branch.points.append(pt)


def branch_directions(
    field: Field, jacobian: Field, sing: Singularity, known_tangent: np.ndarray | None = None, dfdp: Field | None = None
) -> np.ndarray:
    """Tangent of the emanating branch at a simple branch point, in (x, p)."""
    dfdp = dfdp or _fd_dfdp(field)
    x, p = sing.state, sing.param
    J = np.asarray(jacobian(x, p), dtype=float)
    fp = np.asarray(dfdp(x, p), dtype=float).reshape(-1, 1)
    vt = np.linalg.svd(np.hstack([J, fp]))[2]
    basis = vt[-2:]
    if known_tangent is None:
        return basis[-1]
    k = known_tangent / np.linalg.norm(known_tangent)
    cand = basis - np.outer(basis @ k, k)
    v = cand[np.argmax(np.linalg.norm(cand, axis=1))]
    return v / np.linalg.norm(v)


def switch_branch(
    field: Field,
    jacobian: Field,
    branch: EquilibriumBranch,
    sing: Singularity,
    param_range: tuple[float, float],
    settings: ContinuationSettings | None = None,
    dfdp: Field | None = None,
    offset: float = 1e-2,
) -> list[EquilibriumBranch]:
    """Continue both halves of the branch emanating from a branch point."""
    s = settings or ContinuationSettings()
    c = _Continuer(field, jacobian, dfdp, s)
    k = sing.index
    pts = branch.points
    a, b = pts[max(k - 1, 0)], pts[min(k + 1, len(pts) - 1)]
    known = np.append(b.state - a.state, b.param - a.param)
    v = branch_directions(field, jacobian, sing, known, dfdp)
    z0 = np.append(sing.state, sing.param)
    out = []
    for sign in (1.0, -1.0):
        tv = sign * v
        corr = c.correct(z0 + offset * tv, tv)
        if corr is None:
            continue
        zs = corr[0]
        start = c.point(zs)
        try:
            br = continue_branch(
                field, jacobian, start, param_range, s, dfdp, tangent=c.tangent(zs, tv),
                label=f"{branch.label}/bp{sing.param:.6g}{'+' if sign > 0 else '-'}",
            )
        except StepFailure as exc:
            br = exc.branch
        # prepend the branch point itself so the diagram is connected
        bp = c.point(z0)
        bp.singular, bp.singular_kind = True, sing.kind
        br.points.insert(0, bp)
        for sg in br.singularities:
            sg.index += 1
        out.append(br)
    return out
