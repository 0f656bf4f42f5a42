"""Shared hidden view learned by graph-regularized multi-view NMF.

Every (non-negative) visible view is approximated as ``X_k ~ H @ W_k`` with
one common ``H``. Neighbors in a visible view should stay close in ``H``,
so the objective is::

    sum_k alpha_k * ||X_k - H W_k||_F^2 + beta_k * trace(H^T L_k H)

with ``L_k = D_k - S_k`` the Laplacian of an epsilon-nearest-neighbor
graph of view ``k``. Both factors are updated multiplicatively; the
Laplacian is split into its non-negative parts (``S_k H`` into the
numerator, ``D_k H`` into the denominator) so every iterate stays
non-negative.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import cdist, pdist

DENOM_GUARD = 1e-12


@dataclass
class NeighborGraph:
    weights: np.ndarray
    degree: np.ndarray
    epsilon: int
    sigma: float

    @property
    def laplacian(self) -> np.ndarray:
        return np.diag(self.degree) - self.weights


def mean_pairwise_distance(x) -> float:
    x = np.asarray(x, dtype=float)
    if x.shape[0] < 2:
        return 0.0
    return float(np.mean(pdist(x)))


def build_graph(view, epsilon: int = 5, sigma: float | None = None) -> NeighborGraph:
    """Symmetric epsilon-NN graph with heat-kernel weights.

    ``S_ij = exp(-||x_i - x_j||^2 / (2 sigma^2))`` when ``i`` is among the
    ``epsilon`` nearest neighbors of ``j`` or vice versa, else 0. ``sigma``
    defaults to the mean pairwise distance of ``view`` (1.0 if that is 0).
    """
    x = np.asarray(view, dtype=float)
    n = x.shape[0]
    if n < 2:
        raise ValueError("a neighbor graph needs at least 2 samples")
    if not 1 <= epsilon < n:
        raise ValueError(f"epsilon must be in [1, {n - 1}], got {epsilon}")
    if sigma is None:
        sigma = mean_pairwise_distance(x)
    if not sigma > 0:
        sigma = 1.0
    dist = cdist(x, x)
    ranked = dist.copy()
    np.fill_diagonal(ranked, np.inf)
    nearest = np.argsort(ranked, axis=1, kind="stable")[:, :epsilon]
    mask = np.zeros((n, n), dtype=bool)
    mask[np.repeat(np.arange(n), epsilon), nearest.ravel()] = True
    mask |= mask.T
    np.fill_diagonal(mask, False)
    weights = np.where(mask, np.exp(-dist ** 2 / (2.0 * sigma ** 2)), 0.0)
    return NeighborGraph(weights, weights.sum(axis=1), int(epsilon), float(sigma))


def _graphs_for(views, beta, epsilon, sigmas):
    graphs = []
    for k, x in enumerate(views):
        n = x.shape[0]
        if beta[k] == 0 or n < 2:
            graphs.append(None)
        else:
            graphs.append(build_graph(x, min(epsilon, n - 1),
                                      None if sigmas is None else sigmas[k]))
    return graphs


def nmf_objective(views, H, W, alpha, beta, graphs) -> float:
    """Weighted reconstruction error plus Laplacian smoothness of ``H``."""
    total = 0.0
    for k, x in enumerate(views):
        r = x - H @ W[k]
        total += alpha[k] * float(np.sum(r * r))
        g = graphs[k]
        if g is not None and beta[k] != 0:
            smooth = float(np.sum(H * (g.degree[:, None] * H))) - float(np.sum(H * (g.weights @ H)))
            total += beta[k] * smooth
    return total


def _update_H(views, H, W, alpha, beta, graphs):
    num = np.zeros_like(H)
    den = np.zeros_like(H)
    for k, x in enumerate(views):
        num += alpha[k] * (x @ W[k].T)
        den += alpha[k] * (H @ (W[k] @ W[k].T))
        g = graphs[k]
        if g is not None and beta[k] != 0:
            num += beta[k] * (g.weights @ H)
            den += beta[k] * (g.degree[:, None] * H)
    return H * num / (den + DENOM_GUARD)


def _update_W(x, H, Wk):
    return Wk * (H.T @ x) / ((H.T @ H) @ Wk + DENOM_GUARD)


def _as_weights(value, k, name):
    arr = np.full(k, float(value)) if np.ndim(value) == 0 else np.asarray(value, dtype=float)
    if arr.shape != (k,):
        raise ValueError(f"{name} needs one entry per view ({k})")
    if np.any(arr < 0):
        raise ValueError(f"{name} must be non-negative")
    return arr


def _check_views(views):
    views = [np.asarray(v, dtype=float) for v in views]
    for k, v in enumerate(views):
        if v.ndim != 2:
            raise ValueError(f"view {k} must be a 2-D matrix")
        if np.any(v < 0):
            raise ValueError(f"view {k} has negative entries; normalize before factorizing")
    if len({v.shape[0] for v in views}) != 1:
        raise ValueError("views have differing row counts")
    return views


@dataclass
class HiddenSpaceModel:
    """Fitted hidden space: ``H`` for the training rows and the view maps ``W_k``."""

    H: np.ndarray
    W: list
    alpha: np.ndarray
    beta: np.ndarray
    epsilon: int
    sigmas: list
    loss_trace: list = field(default_factory=list)

    @property
    def rank(self) -> int:
        return self.H.shape[1]

    def to_dict(self) -> dict:
        return {
            "rank": self.rank,
            "H": _matrix(self.H),
            "W": [_matrix(w) for w in self.W],
            "alpha": self.alpha.tolist(),
            "beta": self.beta.tolist(),
            "epsilon": self.epsilon,
            "sigmas": list(self.sigmas),
            "loss_trace": list(self.loss_trace),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "HiddenSpaceModel":
        return cls(_unmatrix(d["H"]), [_unmatrix(w) for w in d["W"]],
                   np.asarray(d["alpha"], float), np.asarray(d["beta"], float),
                   int(d["epsilon"]), [float(s) for s in d["sigmas"]],
                   [float(v) for v in d["loss_trace"]])


def _matrix(a) -> dict:
    a = np.asarray(a, dtype=float)
    return {"shape": list(a.shape), "data": a.tolist()}


def _unmatrix(d) -> np.ndarray:
    return np.asarray(d["data"], dtype=float).reshape(d["shape"])


def nmf_train(views, rank: int, alpha=None, beta=1.0, epsilon: int = 5,
              max_iter: int = 300, tol: float = 1e-6, seed: int = 0,
              H_init=None, W_init=None, update_H: bool = True,
              callback=None) -> HiddenSpaceModel:
    """Factorize the visible views into a shared ``H`` and per-view ``W_k``.

    Parameters
    ----------
    views : list of ndarray
        Non-negative ``(n, d_k)`` matrices.
    rank : int
        Hidden dimension ``r``.
    alpha : array-like, optional
        View weights on the simplex; uniform by default.
    beta : float or array-like
        Graph regularization per view.
    epsilon : int
        Neighbors per sample in each view graph (capped at ``n - 1``).
    max_iter, tol
        Stop after ``max_iter`` sweeps or when the relative objective
        decrease of a sweep falls below ``tol``.
    H_init, W_init : optional
        Starting factors; uniform random on (0, 1) from ``seed`` otherwise.
    update_H : bool
        Keep ``H`` frozen at its initial value when False.
    callback : callable, optional
        Called as ``callback(iteration, H, W)`` after every sweep.

    Returns
    -------
    HiddenSpaceModel
    """
    views = _check_views(views)
    n_views = len(views)
    n = views[0].shape[0]
    if rank < 1:
        raise ValueError("rank must be >= 1")
    alpha = np.full(n_views, 1.0 / n_views) if alpha is None else _as_weights(alpha, n_views, "alpha")
    if alpha.sum() <= 0:
        raise ValueError("alpha must have positive mass")
    alpha = alpha / alpha.sum()
    beta = _as_weights(beta, n_views, "beta")

    rng = np.random.default_rng(seed)
    H = rng.uniform(size=(n, rank)) if H_init is None else np.array(H_init, dtype=float)
    W = [rng.uniform(size=(rank, v.shape[1])) for v in views] if W_init is None \
        else [np.array(w, dtype=float) for w in W_init]
    if H.shape != (n, rank) or any(w.shape != (rank, v.shape[1]) for w, v in zip(W, views)):
        raise ValueError("initial factors have the wrong shape")
    if np.any(H < 0) or any(np.any(w < 0) for w in W):
        raise ValueError("initial factors must be non-negative")

    graphs = _graphs_for(views, beta, epsilon, None)
    sigmas = [mean_pairwise_distance(v) if g is None else g.sigma for v, g in zip(views, graphs)]
    sigmas = [s if s > 0 else 1.0 for s in sigmas]
    trace = [nmf_objective(views, H, W, alpha, beta, graphs)]
    for it in range(1, max_iter + 1):
        W = [_update_W(x, H, w) for x, w in zip(views, W)]
        if update_H:
            H = _update_H(views, H, W, alpha, beta, graphs)
        obj = nmf_objective(views, H, W, alpha, beta, graphs)
        if callback is not None:
            callback(it, H, W)
        prev = trace[-1]
        trace.append(obj)
        if prev - obj <= tol * max(prev, 1e-300):
            break
    return HiddenSpaceModel(np.ascontiguousarray(H), [np.ascontiguousarray(w) for w in W],
                            alpha, beta, int(epsilon), sigmas, trace)


def nmf_infer_test(test_views, model: HiddenSpaceModel, epsilon: int | None = None,
                   max_iter: int = 300, tol: float = 1e-6, seed: int = 0,
                   H_init=None, callback=None, return_trace: bool = False):
    """Hidden representation of new rows with the view maps held fixed.

    Graphs are built on the new rows themselves, with the training kernel
    bandwidths. Only ``H`` is updated, by the same multiplicative rule as
    in training.
    """
    views = _check_views(test_views)
    if len(views) != len(model.W):
        raise ValueError(f"model has {len(model.W)} views, got {len(views)}")
    for k, (x, w) in enumerate(zip(views, model.W)):
        if x.shape[1] != w.shape[1]:
            raise ValueError(f"view {k} has {x.shape[1]} features, the model expects {w.shape[1]}")
    n = views[0].shape[0]
    eps = model.epsilon if epsilon is None else epsilon
    graphs = _graphs_for(views, model.beta, eps, model.sigmas)
    rng = np.random.default_rng(seed)
    H = rng.uniform(size=(n, model.rank)) if H_init is None else np.array(H_init, dtype=float)
    trace = [nmf_objective(views, H, model.W, model.alpha, model.beta, graphs)]
    for it in range(1, max_iter + 1):
        H = _update_H(views, H, model.W, model.alpha, model.beta, graphs)
        obj = nmf_objective(views, H, model.W, model.alpha, model.beta, graphs)
        if callback is not None:
            callback(it, H, model.W)
        prev = trace[-1]
        trace.append(obj)
        if prev - obj <= tol * max(prev, 1e-300):
            break
    return (H, trace) if return_trace else H


def graphs_for_views(views, beta, epsilon, sigmas=None):
    """Graphs the solver would use for ``views`` (``None`` where unused)."""
    views = [np.asarray(v, dtype=float) for v in views]
    return _graphs_for(views, _as_weights(beta, len(views), "beta"), epsilon, sigmas)
