"""Scenario files: validation, dispatch to the experiment kinds, and sweeps.

A scenario is a JSON object with ``"schema": 1`` and a ``kind``. Every run
writes its CSV outputs plus ``summary.json`` into one output directory. Runs
are deterministic given the scenario and seed.
"""

from __future__ import annotations

import copy
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from importlib import resources
from pathlib import Path

import numpy as np

from . import bifurcation as bf
from . import feedback as fb
from . import honeybee as hb
from .continuation import ContinuationSettings, NewtonError, StepFailure
from .dynamics import (
    InfoVector,
    ModelParams,
    SigmoidError,
    classify_state,
    disagreement,
    field_normalized,
    get_sigmoid,
)
from .graph import Graph, GraphError, ThreeGroupSpec, graph_from_json
from .integrate import (
    IntegrationConfig,
    IntegrationError,
    integrate,
    is_stationary,
    simulate_network,
    write_csv,
    write_trajectory_csv,
)
from .reduction import embed, manifold_distance, project, reduced_field

SCHEMA_VERSION = 1
KINDS = ("simulate", "equilibria", "continue", "sweep-value", "sweep-delta", "feedback", "reduce", "honeybee")
TOP_KEYS = {"schema", "name", "description", "kind", "graph", "model", "info", "initial", "integration",
            "experiment", "sweep", "seed"}


class SchemaError(ValueError):
    """Scenario JSON does not match the expected layout."""


class NumericalFailure(RuntimeError):
    """A solver or integrator failed while running a valid scenario."""


NUMERIC_ERRORS = (IntegrationError, NewtonError, StepFailure, np.linalg.LinAlgError, FloatingPointError)


# --- loading / validation ----------------------------------------------------------


def bundled_names() -> list[str]:
    d = resources.files("netdecide") / "scenarios"
    return sorted(p.name[:-5] for p in d.iterdir() if p.name.endswith(".json"))


def resolve_path(path) -> Path:
    """A file path, or the name of a bundled scenario."""
    p = Path(path)
    if p.exists():
        return p
    name = str(path)
    name = name[:-5] if name.endswith(".json") else name
    if name in bundled_names():
        return Path(str(resources.files("netdecide") / "scenarios" / f"{name}.json"))
    raise SchemaError(f"scenario {path!s} not found")


def load_scenario(path) -> dict:
    p = resolve_path(path)
    try:
        with open(p) as fh:
            sc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{p}: invalid JSON ({exc})") from exc
    validate(sc)
    return sc


def validate(sc) -> None:
    if not isinstance(sc, dict):
        raise SchemaError("scenario must be a JSON object")
    if sc.get("schema") != SCHEMA_VERSION:
        raise SchemaError(f"unsupported schema {sc.get('schema')!r}; expected {SCHEMA_VERSION}")
    extra = set(sc) - TOP_KEYS
    if extra:
        raise SchemaError(f"unknown top-level keys: {sorted(extra)}")
    if sc.get("kind") not in KINDS:
        raise SchemaError(f"kind must be one of {list(KINDS)}, got {sc.get('kind')!r}")
    for key in ("graph", "model", "info", "integration", "experiment"):
        if key in sc and not isinstance(sc[key], dict):
            raise SchemaError(f"{key!r} must be an object")
    if "sweep" in sc:
        sw = sc["sweep"]
        if not isinstance(sw, dict) or "axis" not in sw or not isinstance(sw.get("values"), list):
            raise SchemaError("sweep needs an 'axis' and a list of 'values'")


def _req(obj: dict, key: str, where: str):
    if key not in obj:
        raise SchemaError(f"missing {where}.{key}")
    return obj[key]


def _num(obj: dict, key: str, where: str, default=None) -> float:
    v = obj.get(key, default)
    if v is None:
        raise SchemaError(f"missing {where}.{key}")
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise SchemaError(f"{where}.{key} must be a number")
    return float(v)


def _values(spec, where: str) -> list[float]:
    """A list of numbers or ``{"start", "stop", "step"}`` (inclusive)."""
    if isinstance(spec, list):
        return [float(v) for v in spec]
    if isinstance(spec, dict):
        a, b, h = (_num(spec, k, where) for k in ("start", "stop", "step"))
        if h <= 0:
            raise SchemaError(f"{where}.step must be positive")
        k = int(math.floor((b - a) / h + 1e-9))
        return [round(a + i * h, 12) for i in range(k + 1)]
    raise SchemaError(f"{where} must be a list or a range object")


def graph_of(sc: dict) -> Graph:
    try:
        return graph_from_json(_req(sc, "graph", "scenario"))
    except (GraphError, KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"graph: {exc}") from exc


def three_group_of(sc: dict, exp: dict | None = None) -> ThreeGroupSpec:
    exp = exp or {}
    if "groups" in exp:
        grp = exp["groups"]
        try:
            return ThreeGroupSpec(int(grp["n1"]), int(grp["n2"]), int(grp["n3"]),
                                  exp.get("weights", np.ones((3, 3))))
        except (GraphError, KeyError, TypeError) as exc:
            raise SchemaError(f"experiment.groups: {exc}") from exc
    g = graph_of(sc)
    if g.three_group is None:
        raise SchemaError("this experiment needs a three_group graph")
    return g.three_group


def model_of(sc: dict) -> ModelParams:
    m = sc.get("model", {})
    try:
        sig = get_sigmoid(m.get("sigmoid", "tanh"))
        if "u" in m:
            return ModelParams(_num(m, "u", "model"), sigmoid=sig)
        if "nu" in m:
            return ModelParams.honeybee(_num(m, "u2", "model"), _num(m, "nu", "model"), sig)
        if "u1" in m:
            return ModelParams.from_original(_num(m, "u1", "model"), _num(m, "u2", "model"), sig)
    except (SigmoidError, ValueError) as exc:
        if isinstance(exc, SchemaError):
            raise
        raise SchemaError(f"model: {exc}") from exc
    raise SchemaError("model needs 'u', 'u1'+'u2' or 'u2'+'nu'")


def info_of(sc: dict, g: Graph, p: ModelParams) -> InfoVector:
    try:
        return InfoVector.from_json(sc.get("info", {}), g, p.u1 or 1.0)
    except (ValueError, TypeError) as exc:
        raise SchemaError(f"info: {exc}") from exc


def initial_of(sc: dict, n: int, seed: int | None = None) -> np.ndarray:
    ini = sc.get("initial", {"consensus": 0.0})
    if isinstance(ini, list):
        x = np.asarray(ini, dtype=float)
        if x.shape != (n,):
            raise SchemaError(f"initial has {x.size} entries, expected {n}")
        return x
    if isinstance(ini, dict):
        if "consensus" in ini:
            return np.full(n, _num(ini, "consensus", "initial"))
        if "random" in ini:
            r = ini["random"]
            s = int(r.get("seed", 0)) if seed is None else int(seed)
            rng = np.random.default_rng(s)
            return rng.normal(0.0, _num(r, "scale", "initial.random", 1.0), n) + r.get("mean", 0.0)
    raise SchemaError("initial must be a vector, {'consensus': v} or {'random': {seed, scale}}")


def integration_of(sc: dict, default_t_end: float | None = None) -> IntegrationConfig:
    it = dict(sc.get("integration", {}))
    if "t_end" not in it:
        if default_t_end is None:
            raise SchemaError("missing integration.t_end")
        it["t_end"] = default_t_end
    if "dt_max" in it and it["dt_max"] is None:
        it.pop("dt_max")
    try:
        return IntegrationConfig(**it)
    except (TypeError, ValueError) as exc:
        raise SchemaError(f"integration: {exc}") from exc


def settings_of(exp: dict) -> ContinuationSettings:
    try:
        return ContinuationSettings(**exp.get("settings", {}))
    except TypeError as exc:
        raise SchemaError(f"experiment.settings: {exc}") from exc


# --- output helpers ---------------------------------------------------------------


def _clean(v):
    if isinstance(v, dict):
        return {str(k): _clean(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_clean(x) for x in v]
    if isinstance(v, np.ndarray):
        return [_clean(x) for x in v.tolist()]
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        f = float(v)
        return f if math.isfinite(f) else None
    return v


def write_json(path, obj) -> None:
    with open(path, "w") as fh:
        json.dump(_clean(obj), fh, indent=2, sort_keys=True, allow_nan=False)
        fh.write("\n")


class _Out:
    def __init__(self, out_dir):
        self.dir = Path(out_dir)
        self.dir.mkdir(parents=True, exist_ok=True)
        self.files: list[str] = []

    def path(self, name: str) -> Path:
        self.files.append(name)
        return self.dir / name


# --- kinds ------------------------------------------------------------------------


def _run_simulate(sc, out: _Out, seed):
    g = graph_of(sc)
    p = model_of(sc)
    info = info_of(sc, g, p)
    x0 = initial_of(sc, g.n_agents, seed)
    cfg = integration_of(sc)
    traj = simulate_network(g, p, x0, cfg, info)
    write_trajectory_csv(out.path("trajectory.csv"), traj)
    exp = sc.get("experiment", {})
    eta = float(exp.get("eta", 1e-3))
    xf = traj.final
    stat = is_stationary(lambda x: field_normalized(x, g, p, info), traj, tol=float(exp.get("stationary_tol", 1e-9)),
                         window=min(10, len(traj)))
    return {
        "final_y": float(xf.mean()),
        "final_delta": disagreement(xf),
        "decision": classify_state(xf, eta).value,
        "stationary": stat,
        "n_records": len(traj),
    }


def _merge(points, tol=1e-7):
    out = []
    for pt in points:
        if all(np.linalg.norm(pt.state - q.state) > tol for q in out):
            out.append(pt)
    return out


def _problem(sc, exp) -> tuple[bf.Problem, str]:
    form = exp.get("model_form", "network")
    param = exp.get("param", "u")
    if form == "network":
        if param != "u":
            raise SchemaError("network continuation supports param 'u' only")
        g = graph_of(sc)
        p = model_of(sc) if "model" in sc else ModelParams(0.0)
        return bf.network_problem(g, info_of(sc, g, p).beta, p.sigmoid), param
    if form != "reduced":
        raise SchemaError("experiment.model_form must be 'network' or 'reduced'")
    spec = three_group_of(sc, exp)
    if param == "u":
        # "beta" sets equal and opposite information on the two informed groups
        ba = float(exp.get("beta_a", exp.get("beta", 0.0)))
        bb = float(exp.get("beta_b", exp.get("beta", 0.0)))
        return bf.reduced_problem(spec, ba, bb), param
    if param == "u2":
        return bf.reduced_u2_problem(spec, _num(exp, "nu", "experiment")), param
    if param == "delta_nu":
        u1 = exp.get("u1")
        return bf.reduced_delta_nu_problem(
            spec, _num(exp, "u2", "experiment"), _num(exp, "nu_mean", "experiment"),
            None if u1 is None else float(u1)
        ), param
    raise SchemaError("experiment.param must be 'u', 'u2' or 'delta_nu'")


def _run_equilibria(sc, out: _Out, seed):
    exp = sc.get("experiment", {})
    prob, _ = _problem(sc, exp)
    val = _num(exp, "param_value", "experiment", exp.get("u", sc.get("model", {}).get("u")))
    guesses = exp.get("guesses")
    if guesses is None:
        guesses = [np.full(prob.dim, c) for c in np.linspace(-3.0, 3.0, 13)]
    found = []
    for gss in guesses:
        try:
            found.append(prob.solve(np.asarray(gss, dtype=float), val))
        except NewtonError:
            continue
    pts = _merge(found)
    pts.sort(key=lambda q: (float(np.mean(q.state)), tuple(q.state)))
    header = ["param"] + [f"state_{i + 1}" for i in range(prob.dim)] + ["max_real_eig", "stable", "singular_kind"]
    write_csv(out.path("equilibria.csv"), header, ([q.param, *q.state, q.max_real_eig, q.stable, ""] for q in pts))
    return {
        "param": val,
        "n_equilibria": len(pts),
        "n_stable": sum(q.stable for q in pts),
        "equilibria": [{"state": q.state, "stable": q.stable, "max_real_eig": q.max_real_eig} for q in pts],
    }


def _diagram_summary(dia: bf.Diagram) -> dict:
    return {
        "n_branches": len(dia.branches),
        "n_points": sum(len(b) for b in dia.branches),
        "singularities": [
            {"branch": i, "kind": s.kind, "param": s.param, "state": s.state}
            for i, b in enumerate(dia.branches)
            for s in b.singularities
        ],
        "folds": [f for b in dia.branches for f in bf.detect_folds(b)],
    }


def _continue(sc, exp, out: _Out):
    prob, param = _problem(sc, exp)
    lo, hi = (float(v) for v in _req(exp, "range", "experiment"))
    direction = float(exp.get("direction", 1.0))
    start = float(exp.get("start", lo if direction > 0 else hi))
    guess = np.asarray(exp.get("guess", np.zeros(prob.dim)), dtype=float)
    if guess.shape != (prob.dim,):
        raise SchemaError(f"experiment.guess must have {prob.dim} entries")
    st = prob.solve(guess, start)
    dia = bf.bifurcation_diagram(prob, st, (lo, hi), settings_of(exp), direction, bool(exp.get("switch", True)))
    dia.write_csv(out.path("diagram.csv"))
    res = {"param": param, **_diagram_summary(dia)}
    return dia, res


def _run_continue(sc, out: _Out, seed):
    exp = sc.get("experiment", {})
    dia, res = _continue(sc, exp, out)
    if res["param"] in ("u", "u2"):
        r = bf.regime_from_diagram(dia)
        res["regime"] = {"kind": r.kind, "pitchfork_param": r.u_star, "side_folds": list(r.folds),
                         "min_stable_side_param": r.min_stable_decision_u}
    return res


def _run_sweep_delta(sc, out: _Out, seed):
    exp = dict(sc.get("experiment", {}))
    exp.setdefault("model_form", "reduced")
    exp["param"] = "delta_nu"
    exp.setdefault("switch", False)
    dia, res = _continue(sc, exp, out)
    folds = res["folds"]
    res["n_folds"] = len(folds)
    res["lowest_fold"] = min(folds) if folds else None
    res["highest_fold"] = max(folds) if folds else None
    return res


def _run_sweep_value(sc, out: _Out, seed):
    exp = sc.get("experiment", {})
    N = int(_num(exp, "N", "experiment"))
    n3 = int(_num(exp, "n3", "experiment"))
    half = (N - n3) / 2
    n1 = exp.get("n1", half)
    n2 = exp.get("n2", half)
    nus = _values(_req(exp, "nu", "experiment"), "experiment.nu")
    form = exp.get("form", "N9")
    if form not in bf.USTAR_FORMS:
        raise SchemaError(f"experiment.form must be one of {list(bf.USTAR_FORMS)}")
    if float(n1).is_integer() and float(n2).is_integer():
        rows = bf.value_sensitivity_curve(nus, N, int(n1), int(n2), n3, form, settings_of(exp))
        gaps = [f"nu={r[0]:.17g}: continuation found no pitchfork" for r in rows if math.isnan(r[2])]
    else:
        rows = [(v, float(bf.u2star_expansion(v, N, n3, form)), math.nan) for v in nus]
        gaps = [f"informed group sizes {n1}, {n2} are not integers; numeric column left empty"]
    write_csv(out.path("value_curve.csv"), ["nu", "u2_analytic", "u2_numeric"],
              ([a, b, c if math.isfinite(c) else ""] for a, b, c in rows))
    num = np.array([r[2] for r in rows])
    ana = np.array([r[1] for r in rows])
    ok = np.isfinite(num)
    rel = np.abs(num - ana) / np.abs(num)
    return {
        "N": N, "n1": n1, "n2": n2, "n3": n3, "form": form,
        "rows": len(rows),
        "gaps": gaps,
        "numeric_strictly_decreasing": bool(ok.sum() > 1 and np.all(np.diff(num[ok]) < 0)),
        "max_relative_difference": float(np.max(rel[ok])) if ok.any() else None,
        "curve": [list(r) for r in rows],
    }


def _run_feedback(sc, out: _Out, seed):
    exp = sc.get("experiment", {})
    variant = exp.get("variant", "uniform")
    try:
        p = fb.FeedbackParams(_num(exp, "epsilon", "experiment", 1e-2), _num(exp, "y_th", "experiment", 1.0))
    except ValueError as exc:
        raise SchemaError(f"experiment: {exc}") from exc
    u0 = _num(exp, "u0", "experiment", 0.5)
    u_max = _num(exp, "u_max", "experiment", fb.U_MAX)
    weights = None
    if variant == "reduced":
        n = int(_num(exp, "N", "experiment"))
        cfg = integration_of(sc, 100.0 / p.epsilon)
        run = fb.simulate_reduced(n, p, _num(exp, "y0", "experiment"), u0, cfg, u_max)
    elif variant == "uniform":
        g = graph_of(sc)
        cfg = integration_of(sc, 100.0 / p.epsilon)
        run = fb.simulate_uniform(g, p, initial_of(sc, g.n_agents, seed), u0, cfg, u_max)
    elif variant == "z2":
        spec = three_group_of(sc, exp)
        cfg = integration_of(sc, 100.0 / p.epsilon)
        y0 = np.asarray(exp.get("y0", [0.0, 0.0, 0.0]), dtype=float)
        if y0.shape != (3,):
            raise SchemaError("experiment.y0 must have three entries for the z2 variant")
        run = fb.simulate_informed_z2(spec, _num(exp, "beta", "experiment", 0.0), p, y0, u0, cfg, u_max)
        weights = spec.sizes
    elif variant == "general":
        g = graph_of(sc)
        cfg = integration_of(sc, 100.0 / p.epsilon)
        try:
            run = fb.simulate_general(g, p, initial_of(sc, g.n_agents, seed), u0, cfg, u_max=u_max)
        except fb.UnbalancedGraphError as exc:
            raise SchemaError(str(exc)) from exc
    else:
        raise SchemaError("experiment.variant must be reduced, uniform, z2 or general")
    run.write_csv(out.path("closed_loop.csv"))
    y = run.x @ weights / weights.sum() if weights is not None else run.y
    res = {
        "variant": variant,
        "epsilon": p.epsilon,
        "y_th": p.y_th,
        "final_y": float(y[-1]),
        "final_u": run.u[-1],
        "aborted": run.aborted,
        "diagnostic": run.diagnostic,
        "final_time": float(run.traj.times[-1]),
    }
    if run.estimator:
        xi = run.estimate_errors()
        drift = run.y_hat.sum(1) - run.x.sum(1)
        res["max_conservation_error"] = float(np.max(np.abs(drift - drift[0])))
        res["final_max_abs_estimate_error"] = float(np.max(np.abs(xi[-1])))
        res["max_abs_estimate_error_per_agent"] = np.max(np.abs(xi), axis=0)
    if variant != "reduced" and variant != "z2":
        res["decision"] = classify_state(run.x[-1], float(exp.get("eta", 1e-3))).value
    dl = exp.get("delay")
    if dl:
        dl = dl if isinstance(dl, dict) else {}
        try:
            rep = fb.delay_report(run, p.epsilon, float(dl.get("u_star", 1.0)), dl.get("departure_tol"), weights)
            fb.write_delay_json(out.path("delay.json"), rep)
            res["delay"] = rep
        except fb.NoPassage as exc:
            res["delay"] = None
            res["delay_error"] = str(exc)
    return res


def _run_reduce(sc, out: _Out, seed):
    g = graph_of(sc)
    if g.three_group is None:
        raise SchemaError("reduce needs a three_group graph")
    spec = g.three_group
    p = model_of(sc)
    info = info_of(sc, g, p)
    exp = sc.get("experiment", {})
    cfg = integration_of(sc)
    if exp.get("embedded", False):
        x0 = embed(initial_of(sc, 3, seed), spec)
    else:
        x0 = initial_of(sc, g.n_agents, seed)
    full = simulate_network(g, p, x0, cfg, info)
    y0 = project(x0, spec)
    red = integrate(lambda y: reduced_field(y, spec, p, info.beta_a, info.beta_b), y0, cfg, 3)
    ys = red.states
    ybar = ys @ spec.sizes / spec.n_agents
    write_csv(out.path("reduced.csv"), ["s", "y1", "y2", "y3", "y"],
              np.column_stack([red.times, ys, ybar]))
    write_trajectory_csv(out.path("trajectory.csv"), full)
    means = np.array([project(x, spec) for x in full.states])
    dist = np.array([manifold_distance(x, spec) for x in full.states])
    stride_match = full.times.shape == red.times.shape and np.allclose(full.times, red.times)
    return {
        "embedded": bool(exp.get("embedded", False)),
        "max_group_mean_discrepancy": float(np.max(np.abs(means - ys))) if stride_match else None,
        "initial_manifold_distance": float(dist[0]),
        "final_manifold_distance": float(dist[-1]),
        "final_reduced": ys[-1],
    }


def _run_honeybee(sc, out: _Out, seed):
    exp = sc.get("experiment", {})
    res = {}
    if "nu" in exp:
        nus = _values(exp["nu"], "experiment.nu")
        try:
            rows = hb.sigma_star_table(nus)
        except (ValueError, ZeroDivisionError) as exc:
            raise SchemaError(f"experiment.nu: {exc}") from exc
        write_csv(out.path("sigma_star.csv"), ["nu", "sigma_star_closed_form", "sigma_star_numeric"], rows)
        res["max_relative_difference"] = max(abs(a - b) / a for _, a, b in rows)
        res["table"] = [list(r) for r in rows]
    if "sigma" in exp:
        try:
            sp = hb.SwarmParams(_num(exp, "nu_a", "experiment"), _num(exp, "nu_b", "experiment"),
                                _num(exp, "sigma", "experiment"))
        except ValueError as exc:
            if isinstance(exc, SchemaError):
                raise
            raise SchemaError(f"experiment: {exc}") from exc
        eqs = hb.swarm_equilibria(sp)
        write_csv(out.path("swarm_equilibria.csv"), ["y_a", "y_b", "max_real_eig", "stable"],
                  ([e.state.y_a, e.state.y_b, float(np.max(e.eigenvalues.real)), e.stable] for e in eqs))
        res["equilibria"] = [{"y_a": e.state.y_a, "y_b": e.state.y_b, "stable": e.stable} for e in eqs]
        if "initial" in sc:
            s0 = np.asarray(sc["initial"], dtype=float)
            if s0.shape != (2,):
                raise SchemaError("honeybee initial state must be [y_a, y_b]")
            cfg = integration_of(sc)
            tr = integrate(lambda s: hb.swarm_field(s, sp), s0, cfg, 2)
            write_csv(out.path("swarm_trajectory.csv"), ["s", "y_a", "y_b", "y_u"],
                      np.column_stack([tr.times, tr.states, 1 - tr.states.sum(1)]))
            omega = _num(exp, "omega", "experiment", 0.75)
            try:
                q = hb.quorum_reached(tr.final, omega)
            except ValueError as exc:
                raise SchemaError(f"experiment.omega: {exc}") from exc
            res["final_state"] = tr.final
            res["quorum"] = q.value
    if not res:
        raise SchemaError("honeybee experiment needs 'nu' and/or 'sigma'")
    return res


RUNNERS = {
    "simulate": _run_simulate,
    "equilibria": _run_equilibria,
    "continue": _run_continue,
    "sweep-value": _run_sweep_value,
    "sweep-delta": _run_sweep_delta,
    "feedback": _run_feedback,
    "reduce": _run_reduce,
    "honeybee": _run_honeybee,
}


def run_scenario(scenario, out_dir, seed: int | None = None, workers: int = 1, kind: str | None = None) -> dict:
    """Run a scenario (path, bundled name or dict) and write its outputs.

    Scenarios with a ``sweep`` block fan out into one cell per value.
    """
    sc = load_scenario(scenario) if not isinstance(scenario, dict) else copy.deepcopy(scenario)
    validate(sc)
    if kind is not None and kind != sc["kind"]:
        raise SchemaError(f"scenario kind is {sc['kind']!r}, not {kind!r}")
    if seed is None and "seed" in sc:
        seed = int(sc["seed"])
    if "sweep" in sc:
        sw = sc.pop("sweep")
        return sweep(sc, sw["axis"], sw["values"], out_dir, workers, seed)
    out = _Out(out_dir)
    try:
        result = RUNNERS[sc["kind"]](sc, out, seed)
    except SchemaError:
        raise
    except NUMERIC_ERRORS as exc:
        raise NumericalFailure(f"{type(exc).__name__}: {exc}") from exc
    summary = {"name": sc.get("name", ""), "kind": sc["kind"], "seed": seed, "outputs": list(out.files),
               "result": result}
    write_json(out.dir / "summary.json", summary)
    return _clean(summary)


# --- sweeps -----------------------------------------------------------------------


def _locate(sc: dict, axis: str) -> tuple[dict, str]:
    if "." in axis:
        *path, key = axis.split(".")
        node = sc
        for part in path:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise SchemaError(f"sweep axis {axis!r} does not name a scalar field")
        return node, key
    for section in ("experiment", "model", "info", "integration"):
        if isinstance(sc.get(section), dict) and axis in sc[section]:
            return sc[section], axis
    grp = sc.get("graph", {}).get("groups")
    if isinstance(grp, dict) and axis in grp:
        return grp, axis
    if axis in sc:
        return sc, axis
    return sc.setdefault("experiment", {}), axis


def set_axis(sc: dict, axis: str, value) -> dict:
    sc = copy.deepcopy(sc)
    node, key = _locate(sc, axis)
    if key in node and isinstance(node[key], (dict, list)):
        raise SchemaError(f"sweep axis {axis!r} does not name a scalar field")
    node[key] = value
    return sc


def _cell(args):
    sc, out_dir, seed = args
    try:
        summ = run_scenario(sc, out_dir, seed)
        return {"status": "ok", "outputs": summ["outputs"], "error": None}
    except (SchemaError, NumericalFailure) as exc:
        return {"status": "failed", "outputs": [], "error": f"{type(exc).__name__}: {exc}"}


def sweep(template, axis: str, values, out_dir, workers: int = 1, seed: int | None = None) -> dict:
    """Run ``template`` once per axis value into ``out_dir/cell_XXX``.

    Returns (and writes) a manifest; failed cells are listed, not raised.
    """
    sc = load_scenario(template) if not isinstance(template, dict) else copy.deepcopy(template)
    sc.pop("sweep", None)
    validate(sc)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    jobs = []
    for i, v in enumerate(values):
        cell = set_axis(sc, axis, v)
        jobs.append((cell, str(out / f"cell_{i:03d}"), seed))
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(jobs), os.cpu_count() or 1)) as ex:
            results = list(ex.map(_cell, jobs))
    else:
        results = [_cell(j) for j in jobs]
    cells = [
        {"index": i, "value": v, "dir": f"cell_{i:03d}", **r}
        for i, (v, r) in enumerate(zip(values, results))
    ]
    manifest = {
        "name": sc.get("name", ""),
        "kind": sc["kind"],
        "axis": axis,
        "values": list(values),
        "seed": seed,
        "cells": cells,
        "failed": [c["index"] for c in cells if c["status"] != "ok"],
    }
    write_json(out / "manifest.json", manifest)
    return manifest
