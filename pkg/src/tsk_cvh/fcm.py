"""Fuzzy c-means clustering."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import cdist


@dataclass
class FcmResult:
    """Output of :func:`fcm_cluster`.

    Attributes
    ----------
    centers : ndarray, shape (c, d)
    memberships : ndarray, shape (n_samples, c)
        Rows sum to one.
    fuzzifier : float
    iterations_run : int
    final_objective : float
        ``sum_jk u_jk**m * ||x_j - v_k||**2`` at the returned state.
    objective_trace : list of float
        Objective after every iteration, starting with the initial partition.
    """

    centers: np.ndarray
    memberships: np.ndarray
    fuzzifier: float
    iterations_run: int
    final_objective: float
    objective_trace: list = field(default_factory=list)


def _sq_distances(data, centers):
    return cdist(data, centers, "sqeuclidean")


def _centers(data, u, m):
    um = u ** m
    return (um.T @ data) / um.sum(axis=0)[:, None]


def _memberships(d2, m):
    """Optimal memberships for fixed centers.

    A sample sitting on one or more centers is shared equally among them.
    """
    zero = d2 <= 1e-300
    d2 = np.where(zero, 1.0, d2)
    # u_jk proportional to d_jk^(-2/(m-1)); shift by the row minimum for range
    expo = -1.0 / (m - 1.0)
    logd = np.log(d2)
    w = np.exp(expo * (logd - logd.min(axis=1, keepdims=True)))
    u = w / w.sum(axis=1, keepdims=True)
    hit = zero.any(axis=1)
    if hit.any():
        z = zero[hit].astype(float)
        u[hit] = z / z.sum(axis=1, keepdims=True)
    return u


def fcm_objective(data, centers, memberships, m=2.0) -> float:
    return float(np.sum(memberships ** m * _sq_distances(np.asarray(data, float), centers)))


def fcm_cluster(data, clusters: int, fuzzifier: float = 2.0, max_iter: int = 200,
                tol: float = 1e-6, seed: int = 0, init=None) -> FcmResult:
    """Alternate center and membership updates until the objective settles.

    Iteration stops once the relative objective decrease drops below
    ``tol`` or after ``max_iter`` sweeps. Initial memberships are uniform
    random, row-normalized, drawn from ``seed`` unless ``init`` gives them.
    """
    data = np.asarray(data, dtype=float)
    if data.ndim != 2:
        raise ValueError("data must be a 2-D matrix")
    n = data.shape[0]
    if not np.all(np.isfinite(data)):
        raise ValueError("data contains non-finite values")
    if clusters < 1:
        raise ValueError("clusters must be >= 1")
    if clusters > n:
        raise ValueError(f"cannot form {clusters} clusters from {n} samples")
    if fuzzifier <= 1.0:
        raise ValueError("fuzzifier must be > 1")
    if tol <= 0:
        raise ValueError("tol must be positive")
    m = float(fuzzifier)

    if clusters == 1:
        centers = data.mean(axis=0)[None, :]
        u = np.ones((n, 1))
        obj = fcm_objective(data, centers, u, m)
        return FcmResult(centers, u, m, 0, obj, [obj])

    if init is None:
        rng = np.random.default_rng(seed)
        u = rng.uniform(size=(n, clusters))
    else:
        u = np.array(init, dtype=float)
        if u.shape != (n, clusters):
            raise ValueError(f"init must have shape {(n, clusters)}")
    u = u / u.sum(axis=1, keepdims=True)

    centers = _centers(data, u, m)
    trace = [fcm_objective(data, centers, u, m)]
    it = 0
    for it in range(1, max_iter + 1):
        centers = _centers(data, u, m)
        u = _memberships(_sq_distances(data, centers), m)
        obj = fcm_objective(data, centers, u, m)
        prev = trace[-1]
        trace.append(obj)
        if prev - obj <= tol * max(prev, 1e-300):
            break
    return FcmResult(centers, u, m, it, trace[-1], trace)
