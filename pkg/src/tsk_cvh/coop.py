"""Cooperative training of per-view TSK rule bases with entropy-weighted views.

Views ``k = 1..V`` (the visible views, plus the hidden view when present)
each own a TSK rule base with mapped features ``G_k`` and consequents
``P_k``; ``F_k = G_k P_k`` is the view output. Training minimizes::

    J = sum_k w_k ||F_k - Y||^2 + lambda1 sum_k w_k ln w_k
        + lambda2 / 2 sum_k ||P_k||^2 + lambda3 * coop(F)

over ``P_1..P_V`` and the weight simplex ``w``. The cooperation penalty
pulls every view toward ``Ybar_k``, the mean output of the other views.
Its monotone form is ``coop(F) = 1/(V-1) sum_{k<j} ||F_k - F_j||^2``,
whose gradient in ``P_k`` is exactly that of ``||F_k - Ybar_k||^2`` with
``Ybar_k`` frozen. Each consequent solve is therefore an exact block
minimizer, the softmax weight step is too, and ``J`` never increases.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .dataset import MultiViewDataset, NormalizationState, decode_argmax
from .hidden_view import HiddenSpaceModel
from .tsk import FuzzyRuleBase, estimate_antecedents, map_features

MODEL_FORMAT_VERSION = 1
HIDDEN_VIEW_NAME = "hidden"


def derive_seed(*keys) -> int:
    """Deterministic 32-bit seed from integer keys (master seed, fold, ...)."""
    return int(np.random.SeedSequence([int(k) for k in keys]).generate_state(1)[0])


@dataclass
class CoopConfig:
    lambda1: float = 1.0
    lambda2: float = 1.0
    lambda3: float = 1.0
    rules: int = 10
    hidden_rules: int | None = None
    h: float = 1.0
    max_outer_iter: int = 50
    tol: float = 1e-6
    seed: int = 0
    fuzzifier: float = 2.0
    fcm_max_iter: int = 200
    fcm_tol: float = 1e-6

    def __post_init__(self):
        for name in ("lambda1", "lambda2"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.lambda3 < 0:
            raise ValueError("lambda3 must be non-negative")
        if self.rules < 1 or (self.hidden_rules is not None and self.hidden_rules < 1):
            raise ValueError("rule counts must be >= 1")

    @property
    def effective_hidden_rules(self) -> int:
        return self.rules if self.hidden_rules is None else self.hidden_rules


# --------------------------------------------------------------------------
# block updates

def solve_consequents(G, w_k: float, Y, Ybar, lambda2: float, lambda3: float,
                      gram=None) -> np.ndarray:
    """Minimize ``w_k||G P - Y||^2 + lambda2/2 ||P||^2 + lambda3 ||G P - Ybar||^2``.

    Solves ``[lambda2/2 I + (w_k + lambda3) G^T G] P = G^T (w_k Y + lambda3 Ybar)``
    for all output columns with one Cholesky factorization. ``Ybar=None``
    drops the cooperation term.
    """
    G = np.asarray(G, dtype=float)
    Y = np.asarray(Y, dtype=float)
    if Y.ndim == 1:
        Y = Y[:, None]
    if not lambda2 > 0:
        raise ValueError("lambda2 must be positive for a well-posed solve")
    if G.shape[0] != Y.shape[0]:
        raise ValueError("features and targets have different row counts")
    if not (np.all(np.isfinite(G)) and np.all(np.isfinite(Y))):
        raise ValueError("non-finite features or targets")
    if gram is None:
        gram = G.T @ G
    coop = Ybar is not None and lambda3 != 0
    A = (w_k + (lambda3 if coop else 0.0)) * gram
    A[np.diag_indices_from(A)] += 0.5 * lambda2
    rhs = w_k * Y
    if coop:
        Ybar = np.asarray(Ybar, dtype=float).reshape(Y.shape)
        if not np.all(np.isfinite(Ybar)):
            raise ValueError("non-finite cooperation targets")
        rhs = rhs + lambda3 * Ybar
    return cho_solve(cho_factor(A), G.T @ rhs)


def update_weights(errors, lambda1: float) -> np.ndarray:
    """Entropy-regularized view weights ``w_k ~ exp(-E_k / lambda1)``."""
    E = np.asarray(errors, dtype=float)
    if not lambda1 > 0:
        raise ValueError("lambda1 must be positive")
    z = np.exp(-(E - E.min()) / lambda1)
    return z / z.sum()


def cooperation_targets(outputs, k: int):
    """Mean of the other views' outputs, or None for a single view."""
    if len(outputs) < 2:
        return None
    return (sum(outputs) - outputs[k]) / (len(outputs) - 1)


def neg_entropy(w) -> float:
    w = np.asarray(w, dtype=float)
    pos = w > 0
    return float(np.sum(w[pos] * np.log(w[pos])))


def coop_objective(features, consequents, w, Y, lambda1: float, lambda2: float,
                   lambda3: float, frozen_targets=None) -> float:
    """Value of the cooperative objective ``J``.

    With ``frozen_targets`` (one ``Ybar_k`` per view) the cooperation term is
    ``sum_k ||F_k - Ybar_k||^2`` against those fixed targets; otherwise the
    pairwise form from the module docstring is used.
    """
    Y = np.asarray(Y, dtype=float)
    if Y.ndim == 1:
        Y = Y[:, None]
    outputs = [np.asarray(G, float) @ np.asarray(P, float).reshape(G.shape[1], -1)
               for G, P in zip(features, consequents)]
    w = np.asarray(w, dtype=float)
    fit = sum(w[k] * float(np.sum((F - Y) ** 2)) for k, F in enumerate(outputs))
    ridge = 0.5 * lambda2 * sum(float(np.sum(np.asarray(P) ** 2)) for P in consequents)
    v = len(outputs)
    if frozen_targets is not None:
        coop = sum(float(np.sum((F - T) ** 2)) for F, T in zip(outputs, frozen_targets)
                   if T is not None)
    elif v > 1:
        coop = sum(float(np.sum((outputs[a] - outputs[b]) ** 2))
                   for a in range(v) for b in range(a + 1, v)) / (v - 1)
    else:
        coop = 0.0
    return fit + lambda1 * neg_entropy(w) + ridge + lambda3 * coop


@dataclass
class CoopFitResult:
    consequents: list
    weights: np.ndarray
    objective_trace: list
    weight_trace: list
    iterations: int
    converged: bool


def fit_consequents(features, Y, lambda1: float, lambda2: float, lambda3: float,
                    max_outer_iter: int = 50, tol: float = 1e-6) -> CoopFitResult:
    """Alternate per-view consequent solves and the weight update.

    Views are visited in order; each solve uses the latest outputs of the
    other views as cooperation targets. Starts from ``P_k = 0`` and uniform
    weights; stops when the relative change of ``J`` drops below ``tol``.
    """
    features = [np.asarray(G, dtype=float) for G in features]
    Y = np.asarray(Y, dtype=float)
    if Y.ndim == 1:
        Y = Y[:, None]
    if any(G.shape[0] != Y.shape[0] for G in features):
        raise ValueError("every view needs one feature row per target row")
    v = len(features)
    grams = [G.T @ G for G in features]
    P = [np.zeros((G.shape[1], Y.shape[1])) for G in features]
    F = [np.zeros_like(Y) for _ in features]
    w = np.full(v, 1.0 / v)
    lams = (lambda1, lambda2, lambda3)
    trace = [coop_objective(features, P, w, Y, *lams)]
    wtrace = [w.tolist()]
    converged = False
    it = 0
    for it in range(1, max_outer_iter + 1):
        for k in range(v):
            P[k] = solve_consequents(features[k], w[k], Y, cooperation_targets(F, k),
                                     lambda2, lambda3, gram=grams[k])
            F[k] = features[k] @ P[k]
        w = update_weights([float(np.sum((Fk - Y) ** 2)) for Fk in F], lambda1)
        obj = coop_objective(features, P, w, Y, *lams)
        prev = trace[-1]
        trace.append(obj)
        wtrace.append(w.tolist())
        if abs(prev - obj) <= tol * max(abs(prev), 1e-300):
            converged = True
            break
    return CoopFitResult(P, w, trace, wtrace, it, converged)


# --------------------------------------------------------------------------
# models

@dataclass
class CoopModel:
    """K visible rule bases, optionally a hidden-view one, and their weights.

    The pipeline fields (``hidden``, ``normalization``, ``class_list``...)
    are filled in by :func:`tsk_cvh.pipeline.fit_cvh`.
    """

    rule_bases: list
    weights: np.ndarray
    config: CoopConfig
    has_hidden: bool = False
    objective_trace: list = field(default_factory=list)
    weight_trace: list = field(default_factory=list)
    view_names: list = field(default_factory=list)
    feature_names: list = field(default_factory=list)
    hidden: HiddenSpaceModel | None = None
    normalization: NormalizationState | None = None
    class_list: list | None = None
    meta: dict = field(default_factory=dict)

    @property
    def n_visible(self) -> int:
        return len(self.rule_bases) - int(self.has_hidden)

    def view_outputs(self, views, H=None) -> list:
        """Per-view outputs ``F_k`` for ``(n, d_k)`` inputs (hidden last)."""
        views = list(views)
        if len(views) != self.n_visible:
            raise ValueError(f"model expects {self.n_visible} visible views, got {len(views)}")
        inputs = views + ([H] if self.has_hidden else [])
        if self.has_hidden and H is None:
            raise ValueError("model uses a hidden view; pass its representation")
        out = []
        for k, (rb, x) in enumerate(zip(self.rule_bases, inputs)):
            x = np.asarray(x, dtype=float)
            if x.shape[-1] != rb.antecedents.n_inputs:
                name = self.view_names[k] if k < len(self.view_names) else str(k)
                raise ValueError(f"view '{name}' has {x.shape[-1]} features, "
                                 f"the model expects {rb.antecedents.n_inputs}")
            out.append(rb.predict(x))
        return out

    def fuse(self, outputs) -> np.ndarray:
        return sum(wk * F for wk, F in zip(self.weights, outputs))

    def predict_scores(self, views, H=None) -> np.ndarray:
        return self.fuse(self.view_outputs(views, H))

    def to_dict(self) -> dict:
        return {
            "format_version": MODEL_FORMAT_VERSION,
            "config": asdict(self.config),
            "has_hidden": self.has_hidden,
            "view_names": list(self.view_names),
            "feature_names": [list(f) for f in self.feature_names],
            "class_list": self.class_list,
            "weights": self.weights.tolist(),
            "rule_bases": [rb.to_dict() for rb in self.rule_bases],
            "hidden": None if self.hidden is None else self.hidden.to_dict(),
            "normalization": None if self.normalization is None else self.normalization.to_dict(),
            "objective_trace": list(self.objective_trace),
            "weight_trace": [list(w) for w in self.weight_trace],
            "meta": self.meta,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CoopModel":
        version = d.get("format_version")
        if version != MODEL_FORMAT_VERSION:
            raise ValueError(f"unsupported model format version {version!r}")
        return cls(
            rule_bases=[FuzzyRuleBase.from_dict(r) for r in d["rule_bases"]],
            weights=np.asarray(d["weights"], dtype=float),
            config=CoopConfig(**d["config"]),
            has_hidden=bool(d["has_hidden"]),
            objective_trace=list(d["objective_trace"]),
            weight_trace=[list(w) for w in d["weight_trace"]],
            view_names=list(d["view_names"]),
            feature_names=[list(f) for f in d["feature_names"]],
            hidden=None if d["hidden"] is None else HiddenSpaceModel.from_dict(d["hidden"]),
            normalization=None if d["normalization"] is None
            else NormalizationState.from_dict(d["normalization"]),
            class_list=d["class_list"],
            meta=d.get("meta", {}),
        )

    def save(self, path):
        Path(path).write_text(json.dumps(self.to_dict(), indent=1) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path) -> "CoopModel":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def fit_rule_bases(views, config: CoopConfig, hidden=None) -> list:
    """Antecedents for every view; FCM seeds derive from ``config.seed``."""
    inputs = list(views) + ([hidden] if hidden is not None else [])
    out = []
    for k, x in enumerate(inputs):
        rules = config.effective_hidden_rules if (hidden is not None and k == len(inputs) - 1) \
            else config.rules
        out.append(estimate_antecedents(
            x, rules, h=config.h, fuzzifier=config.fuzzifier, max_iter=config.fcm_max_iter,
            tol=config.fcm_tol, seed=derive_seed(config.seed, 1000 + k)))
    return out


def coop_fit(train, Y, hidden=None, config: CoopConfig | None = None,
             antecedents=None) -> CoopModel:
    """Fit the cooperative multi-view TSK model.

    Parameters
    ----------
    train : MultiViewDataset or list of ndarray
        Normalized visible views.
    Y : ndarray, shape (n, C)
        One-hot targets.
    hidden : ndarray, shape (n, r), optional
        Hidden-view representation of the training rows.
    antecedents : list of Antecedents, optional
        Precomputed antecedents (visible views first, hidden last).
    """
    config = config or CoopConfig()
    names = []
    if isinstance(train, MultiViewDataset):
        names = list(train.view_names)
        views = list(train.views)
    else:
        views = [np.asarray(v, dtype=float) for v in train]
    Y = np.asarray(Y, dtype=float)
    n = Y.shape[0]
    if any(v.shape[0] != n for v in views) or (hidden is not None and np.shape(hidden)[0] != n):
        raise ValueError("views, hidden representation and targets need the same row count")
    if antecedents is None:
        antecedents = fit_rule_bases(views, config, hidden)
    inputs = views + ([np.asarray(hidden, float)] if hidden is not None else [])
    features = [map_features(x, a) for x, a in zip(inputs, antecedents)]
    res = fit_consequents(features, Y, config.lambda1, config.lambda2, config.lambda3,
                          config.max_outer_iter, config.tol)
    if hidden is not None and names:
        names.append(HIDDEN_VIEW_NAME)
    return CoopModel(
        rule_bases=[FuzzyRuleBase(a, p) for a, p in zip(antecedents, res.consequents)],
        weights=res.weights,
        config=config,
        has_hidden=hidden is not None,
        objective_trace=res.objective_trace,
        weight_trace=res.weight_trace,
        view_names=names,
        meta={"outer_iterations": res.iterations, "converged": res.converged},
    )


def coop_predict(model: CoopModel, x_views, h=None):
    """Fused output and decoded class for one sample."""
    views = [np.asarray(x, dtype=float)[None, :] for x in x_views]
    H = None if h is None else np.asarray(h, dtype=float)[None, :]
    fused = model.predict_scores(views, H)[0]
    return fused, decode_argmax(fused, model.class_list)
