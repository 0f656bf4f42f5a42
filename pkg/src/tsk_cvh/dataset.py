"""Multi-view tabular data: ingestion, min-max scaling, label coding and folds.

Schema files are JSON objects mapping each view name to its list of column
names, plus a ``"label"`` key naming the label column::

    {"image_band": ["b1", "b2", "b3"], "spectrum": ["s1", "s2"], "label": "class"}

Views keep the order in which they appear in the schema.
"""

from __future__ import annotations

import csv
import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

LABEL_KEY = "label"


class DataFormatError(ValueError):
    """Raised for malformed data files (ragged rows, bad cells, ...)."""


class SchemaError(ValueError):
    """Raised for invalid view/label schema definitions."""


@dataclass(frozen=True)
class MultiViewDataset:
    """N samples described by K feature blocks, with optional labels.

    Parameters
    ----------
    views : sequence of ndarray
        View ``k`` has shape ``(n_samples, d_k)``.
    labels : array-like or None
        Length ``n_samples`` class identifiers. ``None`` for unlabeled data.
    view_names, feature_names : optional
        Defaults to ``view1, view2, ...`` and ``x1, x2, ...`` (``v{k}_x{j}``
        with more than one view, so column names stay unique).
    """

    views: tuple
    labels: np.ndarray | None = None
    view_names: tuple = ()
    feature_names: tuple = ()

    def __post_init__(self):
        views = tuple(np.asarray(v, dtype=float) for v in self.views)
        if len(views) < 1:
            raise ValueError("a dataset needs at least one view")
        for k, v in enumerate(views):
            if v.ndim != 2:
                raise ValueError(f"view {k} must be a 2-D matrix, got shape {v.shape}")
            if v.shape[1] < 1:
                raise ValueError(f"view {k} has no feature columns")
        n = views[0].shape[0]
        if n < 1:
            raise ValueError("a dataset needs at least one sample")
        if any(v.shape[0] != n for v in views):
            raise ValueError(f"views have differing row counts {[v.shape[0] for v in views]}")
        labels = self.labels
        if labels is not None:
            labels = np.asarray(labels)
            if labels.shape != (n,):
                raise ValueError(f"labels must have length {n}, got shape {labels.shape}")
        names = tuple(self.view_names) or tuple(f"view{k + 1}" for k in range(len(views)))
        if len(names) != len(views):
            raise ValueError("view_names length does not match the number of views")
        prefix = (lambda k: f"v{k + 1}_") if len(views) > 1 else (lambda k: "")
        fnames = tuple(tuple(f) for f in self.feature_names) or tuple(
            tuple(f"{prefix(k)}x{j + 1}" for j in range(v.shape[1])) for k, v in enumerate(views)
        )
        if len(fnames) != len(views) or any(len(f) != v.shape[1] for f, v in zip(fnames, views)):
            raise ValueError("feature_names do not match the view dimensions")
        object.__setattr__(self, "views", views)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "view_names", names)
        object.__setattr__(self, "feature_names", fnames)

    @property
    def n_samples(self) -> int:
        return self.views[0].shape[0]

    @property
    def n_views(self) -> int:
        return len(self.views)

    @property
    def dims(self) -> tuple:
        return tuple(v.shape[1] for v in self.views)

    def subset(self, index) -> "MultiViewDataset":
        index = np.asarray(index)
        return MultiViewDataset(
            views=tuple(v[index] for v in self.views),
            labels=None if self.labels is None else self.labels[index],
            view_names=self.view_names,
            feature_names=self.feature_names,
        )

    def with_views(self, views) -> "MultiViewDataset":
        return MultiViewDataset(views, self.labels, self.view_names, self.feature_names)


def read_schema(schema_path) -> tuple[dict, str | None]:
    """Parse a schema file into ``(views, label_column)``.

    ``views`` is an ordered ``{view_name: [columns]}`` mapping.
    """
    try:
        raw = json.loads(Path(schema_path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{schema_path}: not valid JSON ({exc})") from exc
    if not isinstance(raw, dict):
        raise SchemaError(f"{schema_path}: schema must be a JSON object")

    label = raw.get(LABEL_KEY)
    if label is not None and not isinstance(label, str):
        raise SchemaError("'label' must name a single column")
    views = {}
    owner = {}
    for name, cols in raw.items():
        if name == LABEL_KEY:
            continue
        if not isinstance(cols, list) or not all(isinstance(c, str) for c in cols):
            raise SchemaError(f"view '{name}' must map to a list of column names")
        if not cols:
            raise SchemaError(f"view '{name}' has zero columns")
        for c in cols:
            if c in owner:
                raise SchemaError(f"column '{c}' is assigned to both '{owner[c]}' and '{name}'")
            if c == label:
                raise SchemaError(f"column '{c}' is both a feature of '{name}' and the label")
            owner[c] = name
        views[name] = list(cols)
    if not views:
        raise SchemaError("schema defines no views")
    return views, label


def load_multiview_csv(data_path, schema_path, delimiter: str = ",",
                       require_label: bool = True) -> MultiViewDataset:
    """Read a delimited table with a header row into a :class:`MultiViewDataset`.

    Raises
    ------
    SchemaError
        Invalid schema, or schema columns absent from the header.
    DataFormatError
        Ragged rows or non-numeric feature cells; messages name the data row
        (1-based, header excluded) and the column.
    """
    views_spec, label_col = read_schema(schema_path)
    if require_label and label_col is None:
        raise SchemaError("schema has no 'label' column")

    with open(data_path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh, delimiter=delimiter)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataFormatError(f"{data_path}: empty file, header row required") from None
        rows = [r for r in reader if r and any(cell.strip() for cell in r)]

    position = {h: j for j, h in enumerate(header)}
    for name, cols in views_spec.items():
        missing = [c for c in cols if c not in position]
        if missing:
            raise SchemaError(f"view '{name}': columns {missing} not found in data header")
    has_label = label_col is not None and label_col in position
    if require_label and not has_label:
        raise SchemaError(f"label column '{label_col}' not found in data header")
    if not rows:
        raise DataFormatError(f"{data_path}: no data rows")

    matrices = {name: np.empty((len(rows), len(cols))) for name, cols in views_spec.items()}
    labels = []
    for i, row in enumerate(rows, start=1):
        if len(row) != len(header):
            raise DataFormatError(
                f"row {i}: expected {len(header)} fields, found {len(row)}")
        for name, cols in views_spec.items():
            target = matrices[name][i - 1]
            for j, c in enumerate(cols):
                cell = row[position[c]].strip()
                try:
                    value = float(cell)
                except ValueError:
                    raise DataFormatError(
                        f"row {i}, column '{c}': non-numeric value {cell!r}") from None
                if not np.isfinite(value):
                    raise DataFormatError(f"row {i}, column '{c}': non-finite value {cell!r}")
                target[j] = value
        if has_label:
            labels.append(row[position[label_col]].strip())

    return MultiViewDataset(
        views=tuple(matrices[name] for name in views_spec),
        labels=np.array(labels) if has_label else None,
        view_names=tuple(views_spec),
        feature_names=tuple(tuple(cols) for cols in views_spec.values()),
    )


def write_multiview_csv(dataset: MultiViewDataset, data_path, schema_path,
                        label_column: str = "label", delimiter: str = ","):
    """Inverse of :func:`load_multiview_csv` (values written with ``repr``)."""
    header = [c for names in dataset.feature_names for c in names]
    if dataset.labels is not None:
        header.append(label_column)
    block = np.hstack(dataset.views)
    with open(data_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, delimiter=delimiter, lineterminator="\n")
        writer.writerow(header)
        for i in range(dataset.n_samples):
            row = [repr(float(v)) for v in block[i]]
            if dataset.labels is not None:
                row.append(str(dataset.labels[i]))
            writer.writerow(row)
    schema = {name: list(cols) for name, cols in zip(dataset.view_names, dataset.feature_names)}
    if dataset.labels is not None:
        schema[LABEL_KEY] = label_column
    Path(schema_path).write_text(json.dumps(schema, indent=2) + "\n", encoding="utf-8")


# --------------------------------------------------------------------------
# min-max scaling

@dataclass
class NormalizationState:
    """Per-view, per-feature training minima and maxima."""

    mins: list = field(default_factory=list)
    maxs: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"mins": [m.tolist() for m in self.mins], "maxs": [m.tolist() for m in self.maxs]}

    @classmethod
    def from_dict(cls, d: dict) -> "NormalizationState":
        return cls([np.asarray(m, dtype=float) for m in d["mins"]],
                   [np.asarray(m, dtype=float) for m in d["maxs"]])


def fit_minmax(train: MultiViewDataset) -> NormalizationState:
    return NormalizationState([v.min(axis=0) for v in train.views],
                              [v.max(axis=0) for v in train.views])


def minmax_transform(x: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    span = hi - lo
    constant = span <= 0
    out = (x - lo) / np.where(constant, 1.0, span)
    out[..., constant] = 0.0
    return np.clip(out, 0.0, 1.0)


def apply_minmax(data: MultiViewDataset, state: NormalizationState) -> MultiViewDataset:
    """Scale every feature into [0, 1] with the training range.

    Values outside the training range are clamped; constant training features
    map to 0.
    """
    if len(state.mins) != data.n_views:
        raise ValueError(f"normalization has {len(state.mins)} views, data has {data.n_views}")
    for k, (v, lo) in enumerate(zip(data.views, state.mins)):
        if v.shape[1] != lo.shape[0]:
            raise ValueError(
                f"view '{data.view_names[k]}' has {v.shape[1]} features, "
                f"normalization expects {lo.shape[0]}")
    return data.with_views(tuple(
        minmax_transform(v, lo, hi) for v, lo, hi in zip(data.views, state.mins, state.maxs)))


# --------------------------------------------------------------------------
# labels

@dataclass
class LabelEncoding:
    class_list: list
    one_hot: np.ndarray


def _class_sort_key(value):
    try:
        return (0, float(value), "")
    except (TypeError, ValueError):
        return (1, 0.0, str(value))


def unique_classes(labels) -> list:
    """Distinct labels, numeric-looking ones in numeric order."""
    return sorted({_to_python(v) for v in np.asarray(labels).tolist()}, key=_class_sort_key)


def _to_python(v):
    return v.item() if isinstance(v, np.generic) else v


def one_hot_encode(labels, class_list=None) -> LabelEncoding:
    """Encode labels as rows of the C x C identity (class ``c`` -> unit vector ``e_c``)."""
    labels = [_to_python(v) for v in np.asarray(labels).tolist()]
    if class_list is None:
        class_list = unique_classes(labels)
    class_list = list(class_list)
    index = {c: j for j, c in enumerate(class_list)}
    if len(index) != len(class_list):
        raise ValueError("class_list contains duplicates")
    one_hot = np.zeros((len(labels), len(class_list)))
    for i, lab in enumerate(labels):
        try:
            one_hot[i, index[lab]] = 1.0
        except KeyError:
            raise ValueError(f"unknown label {lab!r} at position {i}") from None
    return LabelEncoding(class_list, one_hot)


def decode_argmax(output, class_list=None):
    """Class at the position of the largest output; ties go to the lowest index.

    Without ``class_list`` the 0-based position itself is returned.
    """
    output = np.asarray(output, dtype=float)
    if output.size == 0:
        raise ValueError("cannot decode an empty output vector")
    j = int(np.argmax(output))
    return j if class_list is None else class_list[j]


def decode_rows(outputs: np.ndarray, class_list) -> list:
    idx = np.argmax(np.asarray(outputs), axis=1)
    return [class_list[j] for j in idx]


# --------------------------------------------------------------------------
# cross-validation folds

def stratified_kfold(labels, folds: int, seed: int) -> list:
    """Stratified ``folds``-fold split.

    Each class is shuffled and dealt round-robin over the folds, continuing
    where the previous class stopped, so per-class counts and fold sizes
    differ by at most one. If some class has fewer than ``folds`` members the
    split falls back to plain shuffled folds with a warning.

    Returns
    -------
    list of (train_index, test_index)
        Sorted integer arrays; the test sets partition ``0..N-1``.
    """
    if isinstance(labels, MultiViewDataset):
        labels = labels.labels
    labels = np.asarray(labels)
    n = labels.shape[0]
    if folds < 2:
        raise ValueError("folds must be at least 2")
    if folds > n:
        raise ValueError(f"cannot make {folds} folds from {n} samples")
    rng = np.random.default_rng(seed)
    classes = unique_classes(labels)
    members = [np.flatnonzero(labels == c) for c in classes]
    if min(len(m) for m in members) < folds:
        warnings.warn(f"a class has fewer than {folds} members; using unstratified folds",
                      stacklevel=2)
        order = rng.permutation(n)
    else:
        order = np.concatenate([rng.permutation(m) for m in members])
    assign = np.empty(n, dtype=int)
    assign[order] = np.arange(n) % folds
    out = []
    for f in range(folds):
        out.append((np.flatnonzero(assign != f), np.flatnonzero(assign == f)))
    return out


def accuracy(predicted: Sequence, truth: Sequence) -> float:
    predicted = [_to_python(v) for v in np.asarray(predicted, dtype=object).tolist()]
    truth = [_to_python(v) for v in np.asarray(truth, dtype=object).tolist()]
    if len(predicted) != len(truth):
        raise ValueError("prediction and truth lengths differ")
    return sum(p == t for p, t in zip(predicted, truth)) / len(truth)
