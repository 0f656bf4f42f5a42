"""End-to-end train and predict: scaling, hidden view, cooperative fit, fusion."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .coop import CoopConfig, CoopModel, coop_fit, derive_seed
from .dataset import (MultiViewDataset, accuracy, apply_minmax, decode_rows, fit_minmax,
                      one_hot_encode, unique_classes)
from .hidden_view import nmf_infer_test, nmf_train


@dataclass
class HiddenConfig:
    rank: int
    alpha: list | None = None
    beta: float = 1.0
    epsilon: int = 5
    max_iter: int = 300
    tol: float = 1e-6

    def __post_init__(self):
        if self.rank < 1:
            raise ValueError("hidden rank must be >= 1")
        if self.beta < 0:
            raise ValueError("beta must be non-negative")
        if self.epsilon < 1:
            raise ValueError("epsilon must be >= 1")


@dataclass
class Prediction:
    scores: np.ndarray
    labels: list
    view_outputs: list
    hidden: np.ndarray | None = None

    def view_labels(self, class_list) -> list:
        return [decode_rows(F, class_list) for F in self.view_outputs]


def fit_cvh(train: MultiViewDataset, coop: CoopConfig,
            hidden: HiddenConfig | None = None, class_list=None) -> CoopModel:
    """Train the full model on raw (unscaled) training data.

    ``hidden=None`` trains the visible views only. The training accuracy
    stored in ``model.meta`` is obtained through :func:`predict_cvh`, i.e.
    with re-inferred hidden features, so it matches a later prediction on
    the same rows.
    """
    if train.labels is None:
        raise ValueError("training data needs labels")
    if class_list is None:
        class_list = unique_classes(train.labels)
    norm = fit_minmax(train)
    scaled = apply_minmax(train, norm)
    Y = one_hot_encode(train.labels, class_list).one_hot

    hm = None
    H = None
    if hidden is not None:
        hm = nmf_train(scaled.views, hidden.rank, alpha=hidden.alpha, beta=hidden.beta,
                       epsilon=hidden.epsilon, max_iter=hidden.max_iter, tol=hidden.tol,
                       seed=derive_seed(coop.seed, 2001))
        H = hm.H
    model = coop_fit(scaled, Y, H, coop)
    model.hidden = hm
    model.normalization = norm
    model.class_list = list(class_list)
    model.feature_names = [list(f) for f in train.feature_names]
    model.meta["hidden_config"] = None if hidden is None else asdict(hidden)
    pred = predict_cvh(model, train)
    model.meta["train_accuracy"] = accuracy(pred.labels, train.labels)
    return model


def infer_hidden(model: CoopModel, scaled: MultiViewDataset) -> np.ndarray:
    cfg = model.meta.get("hidden_config") or {}
    return nmf_infer_test(scaled.views, model.hidden, max_iter=cfg.get("max_iter", 300),
                          tol=cfg.get("tol", 1e-6), seed=derive_seed(model.config.seed, 2002))


def check_views(model: CoopModel, data: MultiViewDataset):
    expected = model.view_names[:model.n_visible]
    if expected and list(data.view_names) != list(expected):
        missing = [v for v in expected if v not in data.view_names]
        extra = [v for v in data.view_names if v not in expected]
        detail = f"missing views {missing}" if missing else f"unexpected views {extra}"
        if not missing and not extra:
            detail = f"view order {list(data.view_names)} differs from {list(expected)}"
        raise ValueError(f"data does not match the model: {detail}")
    for k, (name, d) in enumerate(zip(data.view_names, data.dims)):
        want = model.rule_bases[k].antecedents.n_inputs
        if d != want:
            raise ValueError(f"view '{name}' has {d} features, the model expects {want}")


def predict_cvh(model: CoopModel, data: MultiViewDataset) -> Prediction:
    """Scale with the stored state, infer the hidden view, fuse the view outputs."""
    check_views(model, data)
    scaled = apply_minmax(data, model.normalization)
    H = infer_hidden(model, scaled) if model.has_hidden else None
    outputs = model.view_outputs(scaled.views, H)
    scores = model.fuse(outputs)
    return Prediction(scores, decode_rows(scores, model.class_list), outputs, H)
