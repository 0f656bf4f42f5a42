import csv
import json

import numpy as np
import pytest

from tsk_cvh.cli import main
from tsk_cvh.coop import CoopConfig, CoopModel
from tsk_cvh.dataset import MultiViewDataset, load_multiview_csv, write_multiview_csv
from tsk_cvh.pipeline import HiddenConfig, fit_cvh, predict_cvh
from tsk_cvh.synthetic import latent_two_view


@pytest.fixture
def files(tmp_path):
    data = latent_two_view(n=70, seed=2)
    d, s = tmp_path / "data.csv", tmp_path / "schema.json"
    write_multiview_csv(data, d, s)
    return tmp_path, d, s


def test_predict_reproduces_train_accuracy(files):
    tmp, d, s = files
    model_path, pred_path = tmp / "m.json", tmp / "p.csv"
    assert main(["train", "--data", str(d), "--schema", str(s), "--out", str(model_path),
                 "--rules", "3", "--seed", "4"]) == 0
    assert main(["predict", "--model", str(model_path), "--data", str(d), "--schema", str(s),
                 "--out", str(pred_path)]) == 0
    model = CoopModel.load(model_path)
    rows = list(csv.DictReader(open(pred_path)))
    data = load_multiview_csv(d, s)
    acc = np.mean([r["predicted"] == str(y) for r, y in zip(rows, data.labels)])
    assert abs(acc - model.meta["train_accuracy"]) <= 1e-12
    assert list(rows[0]) == ["row", "predicted"] + [f"score_{c}" for c in model.class_list]


def test_in_memory_round_trip_predictions_identical(tmp_path):
    data = latent_two_view(n=50, seed=3)
    model = fit_cvh(data, CoopConfig(rules=3, seed=1), HiddenConfig(3, beta=0.01))
    model.save(tmp_path / "m.json")
    back = CoopModel.load(tmp_path / "m.json")
    np.testing.assert_array_equal(predict_cvh(back, data).scores, predict_cvh(model, data).scores)


def test_missing_view_is_named(files, capsys):
    tmp, d, s = files
    main(["train", "--data", str(d), "--schema", str(s), "--out", str(tmp / "m.json"),
          "--rules", "2", "--no-hidden"])
    bad = tmp / "bad.json"
    schema = json.loads(s.read_text())
    del schema["view_b"]
    bad.write_text(json.dumps(schema))
    assert main(["predict", "--model", str(tmp / "m.json"), "--data", str(d),
                 "--schema", str(bad)]) == 2
    assert "view_b" in capsys.readouterr().err


def test_dimension_mismatch_is_named():
    data = latent_two_view(n=40, seed=0)
    model = fit_cvh(data, CoopConfig(rules=2), None)
    short = MultiViewDataset([data.views[0], data.views[1][:, :3]], None, data.view_names)
    with pytest.raises(ValueError, match="view_b"):
        predict_cvh(model, short)


def test_single_row_input(files, capsys):
    tmp, d, s = files
    main(["train", "--data", str(d), "--schema", str(s), "--out", str(tmp / "m.json"),
          "--rules", "2"])
    lines = d.read_text().splitlines()
    one = tmp / "one.csv"
    one.write_text("\n".join(lines[:2]) + "\n")
    capsys.readouterr()
    assert main(["predict", "--model", str(tmp / "m.json"), "--data", str(one),
                 "--schema", str(s)]) == 0
    out = capsys.readouterr().out.strip().splitlines()
    assert len(out) == 2 and out[1].startswith("1,")


def test_unlabelled_predict(files, capsys):
    tmp, d, s = files
    main(["train", "--data", str(d), "--schema", str(s), "--out", str(tmp / "m.json"),
          "--rules", "2", "--hidden-dim", "2"])
    schema = json.loads(s.read_text())
    del schema["label"]
    (tmp / "nolab.json").write_text(json.dumps(schema))
    capsys.readouterr()
    assert main(["predict", "--model", str(tmp / "m.json"), "--data", str(d),
                 "--schema", str(tmp / "nolab.json")]) == 0
    captured = capsys.readouterr()
    assert len(captured.out.splitlines()) == 71 and "accuracy" not in captured.err


def test_dump_rules(files, capsys):
    tmp, d, s = files
    main(["train", "--data", str(d), "--schema", str(s), "--out", str(tmp / "m.json"),
          "--rules", "2", "--hidden-dim", "2"])
    assert main(["dump-rules", "--model", str(tmp / "m.json"), "--out-dir", str(tmp / "r")]) == 0
    names = sorted(p.name for p in (tmp / "r").iterdir())
    assert names == ["hidden.txt", "view_a.txt", "view_b.txt"]
    assert "IF  h1 is" in (tmp / "r" / "hidden.txt").read_text()
    capsys.readouterr()
    main(["dump-rules", "--model", str(tmp / "m.json")])
    assert capsys.readouterr().out.count("# view=") == 3


def test_experiment_requires_seed(files):
    tmp, d, s = files
    with pytest.raises(SystemExit):
        main(["experiment", "--data", str(d), "--schema", str(s)])


def test_experiment_with_config_file(files):
    tmp, d, s = files
    cfg = {"data_path": str(d), "schema_path": str(s), "folds": 2, "inner_folds": 2,
           "rule_grid": [2], "hidden_fractions": [0.5], "lambda1_grid": [1.0],
           "lambda2_grid": [0.1], "lambda3_grid": [0.1], "beta_grid": [0.01],
           "baselines": []}
    (tmp / "cfg.json").write_text(json.dumps(cfg))
    out = tmp / "out"
    assert main(["experiment", "--config", str(tmp / "cfg.json"), "--seed", "1",
                 "--out", str(out)]) == 0
    report = json.loads((out / "report.json").read_text())
    assert report["config"]["seed"] == 1 and len(report["folds"]) == 2
    assert (out / "timings.csv").exists()


def test_train_with_tuning(files):
    tmp, d, s = files
    assert main(["train", "--data", str(d), "--schema", str(s), "--out", str(tmp / "m.json"),
                 "--tune", "--rule-grid", "2,3", "--lambda1-grid", "1", "--lambda2-grid", "0.1",
                 "--lambda3-grid", "0.1", "--hidden-fractions", "0.5", "--beta-grid", "0.01",
                 "--inner-folds", "2"]) == 0
    assert CoopModel.load(tmp / "m.json").has_hidden


def test_make_synthetic(tmp_path):
    assert main(["make-synthetic", "--kind", "quadrant", "--n", "30", "--out-dir",
                 str(tmp_path)]) == 0
    data = load_multiview_csv(tmp_path / "data.csv", tmp_path / "schema.json")
    assert data.n_samples == 30 and data.view_names == ("x_view", "y_view")
