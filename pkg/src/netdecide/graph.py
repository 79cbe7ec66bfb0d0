"""Interaction graphs: all-to-all, three-group block graphs and explicit weights.

Graphs are dense and immutable. ``adjacency[i, j]`` is the weight agent ``i``
puts on its measurement of agent ``j``; in-degrees are row sums and the
Laplacian is ``L = D - A``.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

INFORMED_A, INFORMED_B, UNINFORMED = 1, 2, 3


class GraphError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class ThreeGroupSpec:
    """Group sizes plus the 3x3 inter-group weights (diagonal fixed at 1)."""

    n1: int
    n2: int
    n3: int
    inter_group_weights: np.ndarray = field(default_factory=lambda: np.ones((3, 3)))

    def __post_init__(self):
        w = np.array(self.inter_group_weights, dtype=float)
        if w.shape != (3, 3):
            raise GraphError("inter_group_weights must be 3x3")
        if min(self.n1, self.n2, self.n3) < 0:
            raise GraphError("group sizes must be nonnegative")
        if self.n_agents < 2:
            raise GraphError("need at least two agents")
        if np.any(w < 0):
            raise GraphError("inter-group weights must be nonnegative")
        if not np.allclose(np.diag(w), 1.0):
            raise GraphError("within-group weights must equal 1")
        w.setflags(write=False)
        object.__setattr__(self, "inter_group_weights", w)

    @property
    def n_agents(self) -> int:
        return self.n1 + self.n2 + self.n3

    @property
    def sizes(self) -> np.ndarray:
        return np.array([self.n1, self.n2, self.n3])

    @property
    def groups(self) -> np.ndarray:
        return np.repeat([INFORMED_A, INFORMED_B, UNINFORMED], self.sizes)

    def index_sets(self) -> list[np.ndarray]:
        g = self.groups
        return [np.flatnonzero(g == k) for k in (1, 2, 3)]

    def reduced_weights(self) -> np.ndarray:
        """Weight W[k, m] on S(y_m) in group k's reduced equation.

        Equals n_m * a_km, minus one on the diagonal for the agent's own
        (excluded) self-loop.
        """
        w = self.inter_group_weights * self.sizes[None, :]
        return w - np.diag((self.sizes > 0).astype(float))

    def group_degrees(self) -> np.ndarray:
        """Common in-degree d_k of every agent in group k."""
        return self.reduced_weights().sum(axis=1)

    @classmethod
    def z2(cls, n: int, n3: int, informed_link: float = 1.0, uninformed_link: float = 1.0):
        """Symmetric spec with equal informed groups of size ``n``."""
        w = np.array(
            [
                [1.0, informed_link, uninformed_link],
                [informed_link, 1.0, uninformed_link],
                [uninformed_link, uninformed_link, 1.0],
            ]
        )
        return cls(n, n, n3, w)


@dataclass(frozen=True, eq=False)
class Graph:
    adjacency: np.ndarray
    groups: np.ndarray | None = None
    three_group: ThreeGroupSpec | None = None

    def __post_init__(self):
        a = np.array(self.adjacency, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise GraphError("adjacency must be square")
        if a.shape[0] < 2:
            raise GraphError("need at least two agents")
        if np.any(a < 0):
            raise GraphError("adjacency weights must be nonnegative")
        if np.any(np.diag(a) != 0):
            raise GraphError("self-loops are not allowed (a_ii must be 0)")
        a.setflags(write=False)
        object.__setattr__(self, "adjacency", a)
        if self.groups is not None:
            g = np.asarray(self.groups, dtype=int)
            if g.shape != (a.shape[0],) or not set(np.unique(g)) <= {1, 2, 3}:
                raise GraphError("groups must be a length-N vector of labels in {1,2,3}")
            g.setflags(write=False)
            object.__setattr__(self, "groups", g)
        deg = a.sum(axis=1)
        deg.setflags(write=False)
        lap = np.diag(deg) - a
        lap.setflags(write=False)
        object.__setattr__(self, "_in_degrees", deg)
        object.__setattr__(self, "_laplacian", lap)

    @property
    def n_agents(self) -> int:
        return self.adjacency.shape[0]

    @property
    def in_degrees(self) -> np.ndarray:
        return self._in_degrees

    @property
    def laplacian(self) -> np.ndarray:
        return self._laplacian

    @property
    def is_all_to_all(self) -> bool:
        n = self.n_agents
        return bool(np.array_equal(self.adjacency, np.ones((n, n)) - np.eye(n)))


def build_all_to_all(n_agents: int) -> Graph:
    if n_agents < 2:
        raise GraphError("all-to-all graph needs n_agents >= 2")
    a = np.ones((n_agents, n_agents)) - np.eye(n_agents)
    return Graph(a, groups=np.full(n_agents, UNINFORMED))


def build_three_group(spec: ThreeGroupSpec) -> Graph:
    g = spec.groups
    a = spec.inter_group_weights[np.ix_(g - 1, g - 1)].copy()
    np.fill_diagonal(a, 0.0)
    return Graph(a, groups=g, three_group=spec)


def build_explicit(adjacency, groups=None) -> Graph:
    return Graph(np.asarray(adjacency, dtype=float), groups=groups)


def graph_from_json(obj: dict) -> Graph:
    """Build a graph from its scenario-JSON description."""
    kind = obj.get("type")
    if kind == "all_to_all":
        g = build_all_to_all(int(obj["n"]))
        if "groups" in obj and isinstance(obj["groups"], list):
            g = Graph(g.adjacency, groups=obj["groups"])
        return g
    if kind == "three_group":
        grp = obj["groups"]
        spec = ThreeGroupSpec(
            int(grp["n1"]), int(grp["n2"]), int(grp["n3"]), obj.get("weights", np.ones((3, 3)))
        )
        return build_three_group(spec)
    if kind == "explicit":
        n = int(obj["n"])
        flat = np.asarray(obj["adjacency"], dtype=float)
        if flat.ndim == 2:
            flat = flat.ravel()
        if flat.size != n * n:
            raise GraphError(f"explicit adjacency must have {n * n} entries, got {flat.size}")
        return build_explicit(flat.reshape(n, n), groups=obj.get("groups"))
    raise GraphError(f"unknown graph type {kind!r}")


def is_balanced(g: Graph, tol: float = 1e-12) -> bool:
    """True iff every column of L sums to zero (in-degree equals out-degree)."""
    return bool(np.all(np.abs(g.laplacian.sum(axis=0)) <= tol))


def is_strongly_connected(g: Graph) -> bool:
    a = g.adjacency > 0
    n = g.n_agents

    def reach(adj):
        seen = np.zeros(n, dtype=bool)
        seen[0] = True
        queue = deque([0])
        while queue:
            i = queue.popleft()
            for j in np.flatnonzero(adj[i] & ~seen):
                seen[j] = True
                queue.append(j)
        return seen.all()

    # a[i, j] > 0 is an edge j -> i; check reachability both ways from node 0.
    return bool(reach(a) and reach(a.T))


def z2_matrix(n: int, n_agents: int) -> np.ndarray:
    """Signed permutation swapping and negating the two informed blocks and
    negating the remaining block."""
    if n < 0 or 2 * n > n_agents:
        raise GraphError("need 0 <= 2n <= N")
    gam = np.zeros((n_agents, n_agents))
    idx = np.arange(n)
    gam[idx, n + idx] = -1.0
    gam[n + idx, idx] = -1.0
    rest = np.arange(2 * n, n_agents)
    gam[rest, rest] = -1.0
    return gam


@dataclass(frozen=True)
class Z2Transform:
    n: int
    n_agents: int

    @property
    def matrix(self) -> np.ndarray:
        return z2_matrix(self.n, self.n_agents)

    def apply(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        n = self.n
        out = -x.copy()
        out[:n], out[n : 2 * n] = -x[n : 2 * n], -x[:n]
        return out


class Z2EquivarianceError(AssertionError):
    pass


def check_z2_equivariance(
    g: Graph,
    spec: ThreeGroupSpec,
    field: Callable[[np.ndarray], np.ndarray],
    samples: int = 32,
    tol: float = 1e-10,
    seed: int = 0,
    raise_on_failure: bool = False,
) -> bool:
    """Test F(gamma x) == gamma F(x) at random states.

    With ``raise_on_failure`` the first violating sample is reported in a
    :class:`Z2EquivarianceError`.
    """
    if spec.n1 != spec.n2:
        raise GraphError("Z2 symmetry needs n1 == n2")
    if spec.n_agents != g.n_agents:
        raise GraphError("spec and graph disagree on N")
    gam = Z2Transform(spec.n1, g.n_agents)
    rng = np.random.default_rng(seed)
    for k in range(samples):
        x = rng.normal(scale=2.0, size=g.n_agents)
        lhs = field(gam.apply(x))
        rhs = gam.apply(field(x))
        err = np.max(np.abs(lhs - rhs))
        if err > tol * max(1.0, np.max(np.abs(rhs))):
            if raise_on_failure:
                raise Z2EquivarianceError(f"sample {k}: |F(gx) - gF(x)| = {err:.3e} at x = {x!r}")
            return False
    return True
