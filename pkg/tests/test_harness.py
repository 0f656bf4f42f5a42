import json

import numpy as np
import pytest

from tsk_cvh.coop import CoopConfig
from tsk_cvh.dataset import MultiViewDataset, accuracy
from tsk_cvh.harness import (METHOD_CVH, METHOD_NAMES, ExperimentConfig, accuracy_table,
                             emit_report, hidden_ranks, load_config, run_experiment)
from tsk_cvh.pipeline import HiddenConfig, fit_cvh, predict_cvh
from tsk_cvh.synthetic import latent_two_view, noise_view_dataset, quadrant_two_view


def test_hidden_ranks_use_ceiling():
    assert hidden_ranks((6, 8), (0.1, 0.5, 0.9)) == [1, 3, 6]
    assert hidden_ranks((10,), (0.3,)) == [3]


def test_config_validation_and_file(tmp_path):
    with pytest.raises(ValueError):
        ExperimentConfig(seed=0, folds=1)
    with pytest.raises(ValueError):
        ExperimentConfig(seed=0, hidden_fractions=(0.0,))
    with pytest.raises(ValueError):
        ExperimentConfig(seed=0, rule_grid=())
    with pytest.raises(ValueError):
        ExperimentConfig(seed=0, baselines=("bogus",))
    p = tmp_path / "c.json"
    p.write_text(json.dumps({"seed": 1, "folds": 4, "rule_grid": [2, 3]}))
    cfg = load_config(p, seed=5)
    assert cfg.seed == 5 and cfg.folds == 4 and cfg.rule_grid == (2, 3)
    p.write_text(json.dumps({"seed": 1, "nope": 2}))
    with pytest.raises(ValueError, match="nope"):
        load_config(p)


def test_fold_count_per_method(tiny_config):
    data = latent_two_view(n=100, seed=1)
    report = run_experiment(tiny_config(folds=5), data)
    assert len(report.folds) == 5
    for method, cols in report.summary.items():
        for col in cols.values():
            assert len(col["folds"]) == 5
            assert all(0.0 <= a <= 1.0 for a in col["folds"])
            assert col["std"] >= 0
    assert set(report.summary) == {METHOD_CVH, *METHOD_NAMES.values()}


def test_quadrant_needs_both_views(tiny_config):
    data = quadrant_two_view(n=200, seed=0)
    cfg = tiny_config(rule_grid=(4,), lambda1_grid=(10.0,), lambda2_grid=(0.01,),
                      lambda3_grid=(0.01,), baselines=("single_view",))
    report = run_experiment(cfg, data)
    cvh = report.summary[METHOD_CVH]
    single = report.summary[METHOD_NAMES["single_view"]]
    best_single = max(single[v]["mean"] for v in data.view_names)
    best_view = max(cvh[v]["mean"] for v in data.view_names)
    assert cvh["integration"]["mean"] > max(best_single, best_view)
    # integration comes from the fused output, not from per-view accuracies
    view_mean = np.mean([cvh[v]["mean"] for v in data.view_names])
    assert abs(cvh["integration"]["mean"] - view_mean) > 0.1


def test_noise_view_gets_smallest_weight(tiny_config):
    data = noise_view_dataset(n=150, seed=2)
    report = run_experiment(tiny_config(baselines=()), data)
    w = np.mean([[rec["weights"][v] for v in data.view_names] for rec in report.folds], axis=0)
    assert w[1] < w[0]


def test_single_view_baseline_matches_restricted_model(tiny_config):
    full = latent_two_view(n=90, seed=3)
    data = MultiViewDataset([full.views[0]], full.labels, ("only",))
    cfg = tiny_config(lambda3_grid=(0.0,), baselines=("no_hidden", "single_view"))
    report = run_experiment(cfg, data)
    for rec in report.folds:
        plain = rec["methods"][METHOD_NAMES["no_hidden"]]["integration"]
        single = rec["methods"][METHOD_NAMES["single_view"]]["views"]["only"]
        assert abs(plain - single) <= 1e-8


def test_integration_matches_refit_prediction(tiny_config):
    from tsk_cvh.dataset import stratified_kfold
    from tsk_cvh.coop import derive_seed
    from tsk_cvh.harness import run_fold
    data = latent_two_view(n=60, seed=4)
    cfg = tiny_config(baselines=())
    tr, te = stratified_kfold(data.labels, cfg.folds, derive_seed(cfg.seed, 0))[0]
    out = run_fold(data, cfg, 0, tr, te)
    sel = out["record"]["selection"]
    coop = CoopConfig(lambda1=sel["lambda1"], lambda2=sel["lambda2"], lambda3=sel["lambda3"],
                      rules=sel["rules"], max_outer_iter=cfg.max_outer_iter,
                      seed=derive_seed(cfg.seed, 0))
    model = fit_cvh(data.subset(tr), coop,
                    HiddenConfig(sel["hidden_rank"], beta=sel["beta"], max_iter=cfg.nmf_max_iter))
    pred = predict_cvh(model, data.subset(te))
    assert out["record"]["methods"][METHOD_CVH]["integration"] == \
        accuracy(pred.labels, data.labels[te])


def test_emit_is_deterministic_and_round_trips(tmp_path, tiny_config):
    data = latent_two_view(n=60, seed=5)
    report = run_experiment(tiny_config(baselines=()), data)
    a, b = tmp_path / "a", tmp_path / "b"
    emit_report(report, a)
    emit_report(report, b)
    for name in ("report.json", "accuracy_table.csv", "convergence.csv", "rules/fold1_hidden.txt"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    text = (a / "report.json").read_text()
    assert json.dumps(json.loads(text), indent=1, sort_keys=True) + "\n" == text
    rows = accuracy_table(report)
    assert [r[0] for r in rows[1:]] == [METHOD_CVH]
    assert rows[0][-2:] == ["integration_mean", "integration_std"]
    conv = (a / "convergence.csv").read_text().splitlines()
    assert conv[0] == "fold,series,iteration,value" and len(conv) > 1


def test_parallel_folds_match_serial(tiny_config):
    data = latent_two_view(n=60, seed=6)
    serial = run_experiment(tiny_config(baselines=()), data)
    para = run_experiment(tiny_config(baselines=(), jobs=2), data)
    assert serial.to_json() == para.to_json()
