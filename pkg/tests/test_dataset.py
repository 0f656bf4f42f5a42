import json
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tsk_cvh.dataset import (DataFormatError, MultiViewDataset, SchemaError, accuracy,
                             apply_minmax, decode_argmax, decode_rows, fit_minmax,
                             load_multiview_csv, minmax_transform, one_hot_encode,
                             stratified_kfold, unique_classes, write_multiview_csv)


def _write(tmp_path, text, schema):
    d, s = tmp_path / "d.csv", tmp_path / "s.json"
    d.write_text(text)
    s.write_text(json.dumps(schema))
    return d, s


SCHEMA = {"a": ["a1", "a2"], "b": ["b1"], "label": "y"}


def test_load_two_views(tmp_path):
    d, s = _write(tmp_path, "a1,b1,a2,y\n1,2,3,cat\n4,5,6,dog\n", SCHEMA)
    ds = load_multiview_csv(d, s)
    assert ds.view_names == ("a", "b")
    np.testing.assert_array_equal(ds.views[0], [[1, 3], [4, 6]])
    np.testing.assert_array_equal(ds.views[1], [[2], [5]])
    assert list(ds.labels) == ["cat", "dog"]
    assert ds.dims == (2, 1)


def test_non_numeric_cell_names_row_and_column(tmp_path):
    d, s = _write(tmp_path, "a1,b1,a2,y\n1,2,3,c\n4,oops,6,d\n", SCHEMA)
    with pytest.raises(DataFormatError, match=r"row 2, column 'b1'"):
        load_multiview_csv(d, s)


def test_ragged_row(tmp_path):
    d, s = _write(tmp_path, "a1,b1,a2,y\n1,2,3\n", SCHEMA)
    with pytest.raises(DataFormatError, match="row 1"):
        load_multiview_csv(d, s)


def test_missing_column_names_view(tmp_path):
    d, s = _write(tmp_path, "a1,a2,y\n1,2,c\n", SCHEMA)
    with pytest.raises(SchemaError, match="'b'"):
        load_multiview_csv(d, s)


@pytest.mark.parametrize("schema, msg", [
    ({"a": ["a1"], "b": ["a1"], "label": "y"}, "both"),
    ({"a": [], "label": "y"}, "zero columns"),
    ({"a": ["y"], "label": "y"}, "label"),
])
def test_bad_schemas(tmp_path, schema, msg):
    d, s = _write(tmp_path, "a1,y\n1,c\n", schema)
    with pytest.raises(SchemaError, match=msg):
        load_multiview_csv(d, s)


def test_unlabelled_allowed_when_not_required(tmp_path):
    d, s = _write(tmp_path, "a1,a2,b1\n1,2,3\n", SCHEMA)
    ds = load_multiview_csv(d, s, require_label=False)
    assert ds.labels is None and ds.n_samples == 1


def test_minmax_uses_train_state_and_clamps():
    train = MultiViewDataset([np.array([[0.0, 5.0], [10.0, 5.0]])])
    state = fit_minmax(train)
    out = apply_minmax(MultiViewDataset([np.array([[5.0, 7.0], [20.0, 1.0]])]), state)
    np.testing.assert_allclose(out.views[0], [[0.5, 0.0], [1.0, 0.0]])


def test_minmax_dimension_mismatch():
    state = fit_minmax(MultiViewDataset([np.zeros((2, 2))]))
    with pytest.raises(ValueError):
        apply_minmax(MultiViewDataset([np.zeros((2, 3))]), state)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-1e6, 1e6), min_size=2, max_size=30))
def test_minmax_range(values):
    x = np.array(values)[:, None]
    y = minmax_transform(x, x.min(axis=0), x.max(axis=0))
    assert np.all(y >= 0) and np.all(y <= 1)


def test_decode_example():
    assert decode_argmax([0.6, 0.3, 0.1]) == 0
    assert decode_argmax([0.6, 0.3, 0.1], [1, 2, 3]) == 1
    with pytest.raises(ValueError):
        decode_argmax([])


def test_one_hot_identity_rows():
    enc = one_hot_encode([2, 1, 3, 2])
    assert enc.class_list == [1, 2, 3]
    np.testing.assert_array_equal(enc.one_hot, np.eye(3)[[1, 0, 2, 1]])
    with pytest.raises(ValueError, match="unknown label"):
        one_hot_encode([4], [1, 2, 3])


def test_numeric_class_order():
    assert unique_classes([10, 9, 2]) == [2, 9, 10]
    assert unique_classes(["b", "a"]) == ["a", "b"]


@settings(max_examples=100, deadline=None)
@given(st.lists(st.sampled_from(["x", "y", "z", "w"]), min_size=1, max_size=40))
def test_one_hot_round_trip(labels):
    enc = one_hot_encode(labels)
    assert decode_rows(enc.one_hot, enc.class_list) == labels


def test_kfold_partition_and_stratification():
    labels = np.array([1] * 20 + [2] * 10 + [3] * 5)
    splits = stratified_kfold(labels, 5, seed=3)
    assert len(splits) == 5
    tests = np.concatenate([te for _, te in splits])
    assert sorted(tests.tolist()) == list(range(35))
    for tr, te in splits:
        assert set(tr).isdisjoint(te)
        for c, n in ((1, 20), (2, 10), (3, 5)):
            assert np.sum(labels[te] == c) == n // 5


def test_kfold_deterministic_and_degrades():
    labels = np.array([0, 0, 0, 0, 0, 1])
    with pytest.warns(UserWarning):
        a = stratified_kfold(labels, 3, 1)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        b = stratified_kfold(labels, 3, 1)
    assert all(np.array_equal(x[1], y[1]) for x, y in zip(a, b))
    with pytest.raises(ValueError):
        stratified_kfold(labels, 7, 1)
    with pytest.raises(ValueError):
        stratified_kfold(labels, 1, 1)


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 4), st.integers(1, 10), st.integers(0, 2 ** 31 - 1))
def test_csv_round_trip(k, n, seed):
    import tempfile
    from pathlib import Path
    rng = np.random.default_rng(seed)
    views = [rng.normal(size=(n, int(rng.integers(1, 4)))) for _ in range(k)]
    ds = MultiViewDataset(views, rng.integers(1, 4, size=n))
    with tempfile.TemporaryDirectory() as tmp:
        d, s = Path(tmp) / "d.csv", Path(tmp) / "s.json"
        write_multiview_csv(ds, d, s)
        back = load_multiview_csv(d, s)
    for a, b in zip(ds.views, back.views):
        np.testing.assert_array_equal(a, b)
    assert [str(v) for v in ds.labels] == list(back.labels)


def test_accuracy():
    assert accuracy([1, 2, 3], [1, 2, 2]) == pytest.approx(2 / 3)
    with pytest.raises(ValueError):
        accuracy([1], [1, 2])
