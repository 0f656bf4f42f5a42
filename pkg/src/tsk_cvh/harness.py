"""Cross-validated experiments: nested hyperparameter selection, baselines, reports.

Per outer fold the visible-view model is tuned first (rule count and the
three lambdas, by inner CV without the hidden view); then, with those
values fixed, the hidden dimension ``ceil(f * min_k d_k)`` is swept over the
configured fractions. The chosen settings are refit on the whole outer
training split and scored on its test split.
"""

from __future__ import annotations

import csv
import itertools
import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from .coop import (HIDDEN_VIEW_NAME, CoopConfig, derive_seed, fit_consequents,
                   solve_consequents)
from .dataset import (MultiViewDataset, accuracy, apply_minmax, decode_rows, fit_minmax,
                      load_multiview_csv, one_hot_encode, stratified_kfold, unique_classes)
from .hidden_view import nmf_infer_test, nmf_train
from .pipeline import HiddenConfig, fit_cvh, predict_cvh
from .tsk import dump_rules, estimate_antecedents, map_features

log = logging.getLogger(__name__)

REPORT_FORMAT_VERSION = 1
LAMBDA_GRID = (1e-3, 1e-2, 1e-1, 1.0, 10.0, 100.0, 1000.0)
BASELINES = ("no_hidden", "single_view", "concatenated", "average")
METHOD_CVH = "TSK-FLS-CVH"
METHOD_NAMES = {
    "no_hidden": "TSK-FLS-CVH (without hidden view)",
    "single_view": "TSK-FLS (single view)",
    "concatenated": "TSK-FLS (concatenated views)",
    "average": "TSK-FLS (MV average)",
}
INTEGRATION = "integration"


@dataclass
class ExperimentConfig:
    seed: int
    data_path: str | None = None
    schema_path: str | None = None
    folds: int = 5
    inner_folds: int = 3
    rule_grid: tuple = (10, 12, 14, 16, 18, 20)
    hidden_fractions: tuple = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9)
    lambda1_grid: tuple = LAMBDA_GRID
    lambda2_grid: tuple = LAMBDA_GRID
    lambda3_grid: tuple = LAMBDA_GRID
    alpha: tuple | None = None
    beta_grid: tuple = (1e-3, 1e-2, 1e-1, 1.0)
    epsilon: int = 5
    h: float = 1.0
    hidden_rules: int | None = None
    baselines: tuple = BASELINES
    max_outer_iter: int = 50
    coop_tol: float = 1e-6
    nmf_max_iter: int = 300
    nmf_tol: float = 1e-6
    fuzzifier: float = 2.0
    output_dir: str | None = None
    jobs: int = 1

    def __post_init__(self):
        for name in ("rule_grid", "hidden_fractions", "lambda1_grid", "lambda2_grid",
                     "lambda3_grid", "beta_grid", "baselines"):
            setattr(self, name, tuple(getattr(self, name)))
        if self.alpha is not None:
            self.alpha = tuple(self.alpha)
        if self.folds < 2 or self.inner_folds < 2:
            raise ValueError("folds and inner_folds must be >= 2")
        for name in ("rule_grid", "hidden_fractions", "lambda1_grid", "lambda2_grid",
                     "lambda3_grid", "beta_grid"):
            if not getattr(self, name):
                raise ValueError(f"{name} must not be empty")
        if any(not 0 < f <= 1 for f in self.hidden_fractions):
            raise ValueError("hidden fractions must lie in (0, 1]")
        if any(r < 1 for r in self.rule_grid):
            raise ValueError("rule counts must be >= 1")
        if any(l <= 0 for l in self.lambda1_grid + self.lambda2_grid):
            raise ValueError("lambda1 and lambda2 values must be positive")
        if any(l < 0 for l in self.lambda3_grid + self.beta_grid):
            raise ValueError("lambda3 and beta values must be non-negative")
        unknown = set(self.baselines) - set(BASELINES)
        if unknown:
            raise ValueError(f"unknown baselines {sorted(unknown)}; choose from {BASELINES}")

    def to_dict(self) -> dict:
        return {f.name: (list(v) if isinstance(v, tuple) else v)
                for f in fields(self) for v in [getattr(self, f.name)]}

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config keys {sorted(unknown)}")
        return cls(**d)


def load_config(path, **overrides) -> ExperimentConfig:
    raw = json.loads(Path(path).read_text(encoding="utf-8"))
    raw.update({k: v for k, v in overrides.items() if v is not None})
    return ExperimentConfig.from_dict(raw)


def hidden_ranks(dims, fractions) -> list:
    """Distinct ``ceil(f * min(dims))`` values, at least 1."""
    r_min = min(dims)
    return sorted({max(1, math.ceil(round(f * r_min, 9))) for f in fractions})


# --------------------------------------------------------------------------
# hyperparameter selection

@dataclass
class Selection:
    rules: int
    lambda1: float
    lambda2: float
    lambda3: float
    hidden_rank: int
    beta: float
    visible_score: float
    hidden_score: float
    rank_scores: dict = field(default_factory=dict)


def _fused_accuracy(features_tr, features_va, Ytr, yva, classes, lams, cfg):
    res = fit_consequents(features_tr, Ytr, *lams, cfg.max_outer_iter, cfg.coop_tol)
    scores = sum(w * (G @ P) for w, G, P in zip(res.weights, features_va, res.consequents))
    return accuracy(decode_rows(scores, classes), yva)


def select_hyperparameters(train: MultiViewDataset, cfg: ExperimentConfig,
                           seed: int) -> Selection:
    """Inner-CV choice of rules and lambdas, then of the hidden rank."""
    classes = unique_classes(train.labels)
    splits = stratified_kfold(train.labels, cfg.inner_folds, derive_seed(seed, 1))
    inner = []
    for tr, va in splits:
        a, b = train.subset(tr), train.subset(va)
        norm = fit_minmax(a)
        inner.append((apply_minmax(a, norm), apply_minmax(b, norm),
                      one_hot_encode(a.labels, classes).one_hot, b.labels))
    n_min = min(len(tr) for tr, _ in splits)
    rule_grid = [L for L in cfg.rule_grid if L <= n_min] or [min(n_min, min(cfg.rule_grid))]

    lam_grid = list(itertools.product(cfg.lambda1_grid, cfg.lambda2_grid, cfg.lambda3_grid))
    visible = {}
    best_key, best = None, -1.0
    for li, L in enumerate(rule_grid):
        feats = []
        for i, (a, b, _, _) in enumerate(inner):
            ants = [estimate_antecedents(x, L, h=cfg.h, fuzzifier=cfg.fuzzifier,
                                         seed=derive_seed(seed, 10, i, li, k))
                    for k, x in enumerate(a.views)]
            feats.append(([map_features(x, an) for x, an in zip(a.views, ants)],
                          [map_features(x, an) for x, an in zip(b.views, ants)]))
        visible[L] = feats
        for lams in lam_grid:
            score = float(np.mean([
                _fused_accuracy(ftr, fva, Ytr, yva, classes, lams, cfg)
                for (ftr, fva), (_, _, Ytr, yva) in zip(feats, inner)]))
            if score > best:
                best_key, best = (L, *lams), score
    L, l1, l2, l3 = best_key
    J = cfg.hidden_rules or L

    rank_scores = {}
    best_h, best_hs = None, -1.0
    for ri, r in enumerate(hidden_ranks(train.dims, cfg.hidden_fractions)):
        for bi, beta in enumerate(cfg.beta_grid):
            accs = []
            for i, ((a, b, Ytr, yva), (ftr, fva)) in enumerate(zip(inner, visible[L])):
                hm = nmf_train(a.views, r, alpha=cfg.alpha, beta=beta, epsilon=cfg.epsilon,
                               max_iter=cfg.nmf_max_iter, tol=cfg.nmf_tol,
                               seed=derive_seed(seed, 20, i, ri, bi))
                Hva = nmf_infer_test(b.views, hm, max_iter=cfg.nmf_max_iter, tol=cfg.nmf_tol,
                                     seed=derive_seed(seed, 21, i, ri, bi))
                ant = estimate_antecedents(hm.H, min(J, hm.H.shape[0]), h=cfg.h,
                                           fuzzifier=cfg.fuzzifier,
                                           seed=derive_seed(seed, 22, i, ri, bi))
                accs.append(_fused_accuracy(ftr + [map_features(hm.H, ant)],
                                            fva + [map_features(Hva, ant)],
                                            Ytr, yva, classes, (l1, l2, l3), cfg))
            score = float(np.mean(accs))
            rank_scores[f"r={r},beta={beta!r}"] = score
            if score > best_hs:
                best_h, best_hs = (r, beta), score
    return Selection(L, l1, l2, l3, best_h[0], best_h[1], best, best_hs, rank_scores)


# --------------------------------------------------------------------------
# single-view baselines

def fit_single_tsk(x, Y, rules: int, lambda2: float, h: float, fuzzifier: float, seed: int):
    """Ridge-regressed TSK rule base on one feature block."""
    ant = estimate_antecedents(x, rules, h=h, fuzzifier=fuzzifier, seed=seed)
    G = map_features(x, ant)
    return ant, solve_consequents(G, 1.0, Y, None, lambda2, 0.0)


def _baselines(train_s, test_s, Y, classes, sel, cfg, fold_seed):
    out = {}
    needs_single = {"single_view", "average"} & set(cfg.baselines)
    if needs_single:
        outputs, accs = [], {}
        for k, (xtr, xte) in enumerate(zip(train_s.views, test_s.views)):
            ant, P = fit_single_tsk(xtr, Y, sel.rules, sel.lambda2, cfg.h, cfg.fuzzifier,
                                    derive_seed(fold_seed, 1000 + k))
            F = map_features(xte, ant) @ P
            outputs.append(F)
            accs[train_s.view_names[k]] = accuracy(decode_rows(F, classes), test_s.labels)
        if "single_view" in cfg.baselines:
            out["single_view"] = {"views": accs, INTEGRATION: None}
        if "average" in cfg.baselines:
            mean = sum(outputs) / len(outputs)
            out["average"] = {"views": dict(accs),
                              INTEGRATION: accuracy(decode_rows(mean, classes), test_s.labels)}
    if "concatenated" in cfg.baselines:
        xtr, xte = np.hstack(train_s.views), np.hstack(test_s.views)
        ant, P = fit_single_tsk(xtr, Y, sel.rules, sel.lambda2, cfg.h, cfg.fuzzifier,
                                derive_seed(fold_seed, 1000))
        F = map_features(xte, ant) @ P
        out["concatenated"] = {"views": {},
                               INTEGRATION: accuracy(decode_rows(F, classes), test_s.labels)}
    return out


# --------------------------------------------------------------------------
# fold runner

def _coop_config(sel: Selection, cfg: ExperimentConfig, seed: int) -> CoopConfig:
    return CoopConfig(lambda1=sel.lambda1, lambda2=sel.lambda2, lambda3=sel.lambda3,
                      rules=sel.rules, hidden_rules=cfg.hidden_rules, h=cfg.h,
                      max_outer_iter=cfg.max_outer_iter, tol=cfg.coop_tol, seed=seed,
                      fuzzifier=cfg.fuzzifier)


def _view_accuracies(model, pred, data, names):
    labels = pred.view_labels(model.class_list)
    return {name: accuracy(lab, data.labels) for name, lab in zip(names, labels)}


def run_fold(dataset: MultiViewDataset, cfg: ExperimentConfig, fold: int, train_idx,
             test_idx) -> dict:
    """Select, fit and evaluate every method on one outer fold."""
    t0 = time.monotonic()
    fold_seed = derive_seed(cfg.seed, fold)
    train, test = dataset.subset(train_idx), dataset.subset(test_idx)
    classes = unique_classes(dataset.labels)
    sel = select_hyperparameters(train, cfg, fold_seed)
    log.info("fold %d: rules=%d lambdas=(%g, %g, %g) hidden rank=%d", fold, sel.rules,
             sel.lambda1, sel.lambda2, sel.lambda3, sel.hidden_rank)

    coop_cfg = _coop_config(sel, cfg, fold_seed)
    hidden_cfg = HiddenConfig(sel.hidden_rank, alpha=None if cfg.alpha is None else list(cfg.alpha),
                              beta=sel.beta, epsilon=cfg.epsilon, max_iter=cfg.nmf_max_iter,
                              tol=cfg.nmf_tol)
    cvh = fit_cvh(train, coop_cfg, hidden_cfg, classes)
    pred = predict_cvh(cvh, test)
    names = list(dataset.view_names) + [HIDDEN_VIEW_NAME]
    methods = {METHOD_CVH: {"views": _view_accuracies(cvh, pred, test, names),
                            INTEGRATION: accuracy(pred.labels, test.labels)}}
    record = {
        "fold": fold,
        "n_train": int(len(train_idx)),
        "n_test": int(len(test_idx)),
        "selection": asdict(sel),
        "weights": dict(zip(names, cvh.weights.tolist())),
        "train_accuracy": cvh.meta["train_accuracy"],
        "coop_objective_trace": list(cvh.objective_trace),
        "nmf_loss_trace": list(cvh.hidden.loss_trace),
    }
    dumps = {name: dump_rules(rb, feats, name)
             for name, rb, feats in zip(names, cvh.rule_bases,
                                        list(dataset.feature_names)
                                        + [[f"h{j + 1}" for j in range(sel.hidden_rank)]])}

    if "no_hidden" in cfg.baselines:
        plain = fit_cvh(train, coop_cfg, None, classes)
        ppred = predict_cvh(plain, test)
        methods[METHOD_NAMES["no_hidden"]] = {
            "views": _view_accuracies(plain, ppred, test, dataset.view_names),
            INTEGRATION: accuracy(ppred.labels, test.labels)}
        record["weights_no_hidden"] = dict(zip(dataset.view_names, plain.weights.tolist()))
        record["coop_objective_trace_no_hidden"] = list(plain.objective_trace)

    norm = fit_minmax(train)
    train_s, test_s = apply_minmax(train, norm), apply_minmax(test, norm)
    Y = one_hot_encode(train.labels, classes).one_hot
    for key, res in _baselines(train_s, test_s, Y, classes, sel, cfg, fold_seed).items():
        methods[METHOD_NAMES[key]] = res
    record["methods"] = methods
    return {"record": record, "rule_dumps": dumps, "seconds": time.monotonic() - t0}


def _run_fold_job(args):
    return run_fold(*args)


# --------------------------------------------------------------------------
# experiment + report

@dataclass
class ExperimentReport:
    config: dict
    dataset: dict
    folds: list
    summary: dict
    rule_dumps: list = field(default_factory=list)
    timings: list = field(default_factory=list)

    def to_dict(self) -> dict:
        """JSON content; excludes wall-clock timings so reruns are identical."""
        return {"format_version": REPORT_FORMAT_VERSION, "config": self.config,
                "dataset": self.dataset, "summary": self.summary, "folds": self.folds}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1, sort_keys=True) + "\n"


def _summarize(folds: list) -> dict:
    summary = {}
    order = []
    for rec in folds:
        for m in rec["methods"]:
            if m not in order:
                order.append(m)
    for m in order:
        cols = {}
        for rec in folds:
            res = rec["methods"].get(m)
            if res is None:
                continue
            for name, acc in res["views"].items():
                cols.setdefault(name, []).append(acc)
            if res[INTEGRATION] is not None:
                cols.setdefault(INTEGRATION, []).append(res[INTEGRATION])
        summary[m] = {
            name: {"mean": float(np.mean(v)),
                   "std": float(np.std(v, ddof=1)) if len(v) > 1 else 0.0,
                   "folds": v}
            for name, v in cols.items()}
    return summary


def run_experiment(config: ExperimentConfig, dataset: MultiViewDataset | None = None
                   ) -> ExperimentReport:
    """Outer ``config.folds``-fold CV of TSK-FLS-CVH and the enabled baselines."""
    if dataset is None:
        if not (config.data_path and config.schema_path):
            raise ValueError("config needs data_path and schema_path, or pass a dataset")
        dataset = load_multiview_csv(config.data_path, config.schema_path)
    if dataset.labels is None:
        raise ValueError("experiments need labelled data")
    classes = unique_classes(dataset.labels)
    if len(classes) < 2:
        raise ValueError("classification needs at least two classes")
    splits = stratified_kfold(dataset.labels, config.folds, derive_seed(config.seed, 0))
    jobs = [(dataset, config, f, tr, te) for f, (tr, te) in enumerate(splits)]
    if config.jobs > 1:
        with ProcessPoolExecutor(max_workers=config.jobs) as pool:
            results = list(pool.map(_run_fold_job, jobs))
    else:
        results = [_run_fold_job(j) for j in jobs]

    records = [r["record"] for r in results]
    cfg = config.to_dict()
    for volatile in ("output_dir", "jobs"):
        cfg.pop(volatile)
    info = {
        "n_samples": dataset.n_samples,
        "view_names": list(dataset.view_names),
        "dims": list(dataset.dims),
        "classes": [c if isinstance(c, (int, float, str)) else str(c) for c in classes],
    }
    return ExperimentReport(cfg, info, records, _summarize(records),
                            [r["rule_dumps"] for r in results],
                            [r["seconds"] for r in results])


def _fmt(v) -> str:
    return "NA" if v is None else f"{v:.6f}"


def accuracy_table(report: ExperimentReport) -> list:
    """Rows of the mean/std accuracy table (header first)."""
    columns = list(report.dataset["view_names"]) + [HIDDEN_VIEW_NAME, INTEGRATION]
    header = ["method"] + [f"{c}_{s}" for c in columns for s in ("mean", "std")]
    rows = [header]
    for method, cols in report.summary.items():
        row = [method]
        for c in columns:
            cell = cols.get(c)
            row += [_fmt(None if cell is None else cell["mean"]),
                    _fmt(None if cell is None else cell["std"])]
        rows.append(row)
    return rows


def emit_report(report: ExperimentReport, out_dir, delimiter: str = ",") -> list:
    """Write the accuracy table, JSON report, rule dumps and trace CSV."""
    out = Path(out_dir)
    (out / "rules").mkdir(parents=True, exist_ok=True)
    written = []

    path = out / "accuracy_table.csv"
    with open(path, "w", newline="", encoding="utf-8") as fh:
        csv.writer(fh, delimiter=delimiter, lineterminator="\n").writerows(accuracy_table(report))
    written.append(path)

    path = out / "report.json"
    path.write_text(report.to_json(), encoding="utf-8")
    written.append(path)

    for rec, dumps in zip(report.folds, report.rule_dumps):
        for name, text in dumps.items():
            path = out / "rules" / f"fold{rec['fold'] + 1}_{name}.txt"
            path.write_text(text, encoding="utf-8")
            written.append(path)

    path = out / "convergence.csv"
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, delimiter=delimiter, lineterminator="\n")
        w.writerow(["fold", "series", "iteration", "value"])
        for rec in report.folds:
            for series, key in (("cvh_objective", "coop_objective_trace"),
                                ("cvh_nmf_loss", "nmf_loss_trace"),
                                ("no_hidden_objective", "coop_objective_trace_no_hidden")):
                for it, v in enumerate(rec.get(key, [])):
                    w.writerow([rec["fold"] + 1, series, it, repr(float(v))])
    written.append(path)

    if report.timings:
        path = out / "timings.csv"
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, delimiter=delimiter, lineterminator="\n")
            w.writerow(["fold", "seconds"])
            for rec, sec in zip(report.folds, report.timings):
                w.writerow([rec["fold"] + 1, f"{sec:.3f}"])
        written.append(path)
    return written


def load_report(path) -> dict:
    return json.loads(Path(path).read_text(encoding="utf-8"))
