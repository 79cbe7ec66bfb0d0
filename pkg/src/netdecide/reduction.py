"""Exact three-group reduction of the network dynamics.

On a three-group block graph every agent of group k shares the in-degree
d_k, and the subspace where each group agrees is invariant and attracting.
The dynamics there are three-dimensional::

    y_k' = -d_k y_k + u sum_m W[k, m] S(y_m) + b_k,   b = (beta_a, -beta_b, 0)

with W from :meth:`ThreeGroupSpec.reduced_weights`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dynamics import TANH, ModelParams, Sigmoid
from .graph import ThreeGroupSpec


@dataclass(frozen=True)
class ReducedState:
    y1: float
    y2: float
    y3: float

    def as_array(self) -> np.ndarray:
        return np.array([self.y1, self.y2, self.y3])

    def collective_opinion(self, spec: ThreeGroupSpec) -> float:
        return float(spec.sizes @ self.as_array() / spec.n_agents)


def _y(y) -> np.ndarray:
    if isinstance(y, ReducedState):
        return y.as_array()
    y = np.asarray(y, dtype=float)
    if y.shape != (3,):
        raise ValueError("reduced state must have three components")
    return y


def reduced_info(beta_a: float, beta_b: float) -> np.ndarray:
    return np.array([beta_a, -beta_b, 0.0])


def reduced_field(y, spec: ThreeGroupSpec, p: ModelParams, beta_a: float = 0.0, beta_b: float = 0.0) -> np.ndarray:
    y = _y(y)
    w = spec.reduced_weights()
    return -spec.group_degrees() * y + p.u * (w @ p.sigmoid(y)) + reduced_info(beta_a, beta_b)


def reduced_jacobian(y, spec: ThreeGroupSpec, p: ModelParams) -> np.ndarray:
    y = _y(y)
    return -np.diag(spec.group_degrees()) + p.u * spec.reduced_weights() * p.sigmoid.df(y)[None, :]


def z2_all_to_all_field(y, n_agents: int, n: int, u: float, beta: float, sigmoid: Sigmoid = TANH) -> np.ndarray:
    """Reduced dynamics for an all-to-all graph with n1 = n2 = n, written out
    term by term (independent of :func:`reduced_field`)."""
    y1, y2, y3 = _y(y)
    n3 = n_agents - 2 * n
    s1, s2, s3 = sigmoid(np.array([y1, y2, y3]))
    k = n_agents - 1
    return np.array(
        [
            -k * y1 + u * ((n - 1) * s1 + n * s2 + n3 * s3) + beta,
            -k * y2 + u * (n * s1 + (n - 1) * s2 + n3 * s3) - beta,
            -k * y3 + u * (n * s1 + n * s2 + (n3 - 1) * s3),
        ]
    )


def embed(y, spec: ThreeGroupSpec) -> np.ndarray:
    """Lift (y1, y2, y3) to R^N with x_i = y_k for i in group k."""
    return np.repeat(_y(y), spec.sizes)


def project(x, spec: ThreeGroupSpec) -> np.ndarray:
    """Group means of ``x`` (zero for empty groups)."""
    x = np.asarray(x, dtype=float)
    return np.array([x[idx].mean() if idx.size else 0.0 for idx in spec.index_sets()])


def manifold_distance(x, spec: ThreeGroupSpec) -> float:
    """sum_k sum_{i,j in I_k} (x_i - x_j)^2 / 2."""
    x = np.asarray(x, dtype=float)
    total = 0.0
    for idx in spec.index_sets():
        if idx.size:
            xk = x[idx]
            total += idx.size * np.sum((xk - xk.mean()) ** 2)
    return float(total)
