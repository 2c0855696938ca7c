"""Labeled datasets and CSV ingestion.

Instances are rows of a float64 feature matrix, labels are plain strings.
The literal label ``UNKNOWN`` is reserved for open-set rejection and may
never appear as a class label in ingested data.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np

UNKNOWN_LABEL = "UNKNOWN"


def _frozen_array(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class LabeledDataset:
    """Immutable (n, d) feature matrix with one string label per row."""

    features: np.ndarray
    labels: np.ndarray

    def __post_init__(self) -> None:
        feats = np.array(self.features, dtype=np.float64)
        if feats.ndim != 2:
            raise ValueError(f"features must be a 2-D matrix, got shape {feats.shape}")
        if feats.shape[0] == 0 or feats.shape[1] == 0:
            raise ValueError("dataset needs at least one instance and one feature")
        if not np.isfinite(feats).all():
            row, col = np.argwhere(~np.isfinite(feats))[0]
            raise ValueError(f"non-finite feature value at row {row}, column {col}")
        labels = np.array([str(l) for l in self.labels], dtype=object)
        if labels.shape[0] != feats.shape[0]:
            raise ValueError(
                f"{feats.shape[0]} instances but {labels.shape[0]} labels"
            )
        if any(l == UNKNOWN_LABEL for l in labels):
            raise ValueError(f"label {UNKNOWN_LABEL!r} is reserved for rejection")
        object.__setattr__(self, "features", _frozen_array(feats))
        object.__setattr__(self, "labels", _frozen_array(labels))

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]

    @cached_property
    def label_set(self) -> tuple[str, ...]:
        return tuple(sorted(set(self.labels)))

    @cached_property
    def indices_by_label(self) -> dict[str, np.ndarray]:
        """Row indices of every class, ascending."""
        out: dict[str, list[int]] = {l: [] for l in self.label_set}
        for i, l in enumerate(self.labels):
            out[l].append(i)
        return {l: np.asarray(ids, dtype=np.int64) for l, ids in out.items()}

    def subset(self, row_ids: np.ndarray) -> "LabeledDataset":
        ids = np.asarray(row_ids, dtype=np.int64)
        return LabeledDataset(self.features[ids], self.labels[ids])

    def restrict_to_labels(self, labels) -> "LabeledDataset":
        wanted = set(labels)
        missing = wanted - set(self.label_set)
        if missing:
            raise ValueError(f"labels not in dataset: {sorted(missing)}")
        mask = np.fromiter((l in wanted for l in self.labels), bool, count=self.n)
        return LabeledDataset(self.features[mask], self.labels[mask])


@dataclass(frozen=True)
class CsvSchema:
    """How to read a labeled CSV.

    label_col: column name (str), index (int), or None for the last column.
    has_header: None auto-detects by trying to parse the first row's
    feature cells as numbers.
    """

    label_col: int | str | None = None
    has_header: bool | None = None


def _read_rows(path) -> list[list[str]]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [row for row in csv.reader(fh) if row]
    if not rows:
        raise ValueError(f"{path}: empty CSV file")
    width = len(rows[0])
    for i, row in enumerate(rows):
        if len(row) != width:
            raise ValueError(f"{path}: row {i} has {len(row)} cells, expected {width}")
    return rows


def _row_is_numeric(row: list[str], skip: int | None) -> bool:
    for j, cell in enumerate(row):
        if j == skip:
            continue
        try:
            float(cell)
        except ValueError:
            return False
    return True


def _resolve_schema(rows: list[list[str]], schema: CsvSchema):
    width = len(rows[0])
    if isinstance(schema.label_col, str):
        if schema.has_header is False:
            raise ValueError("label column given by name requires a header row")
        header = rows[0]
        if schema.label_col not in header:
            raise ValueError(f"unknown label column {schema.label_col!r}; header is {header}")
        return header.index(schema.label_col), True
    idx = width - 1 if schema.label_col is None else schema.label_col
    if idx < 0:
        idx += width
    if not 0 <= idx < width:
        raise ValueError(f"label column index {schema.label_col} out of range for {width} columns")
    has_header = schema.has_header
    if has_header is None:
        has_header = not _row_is_numeric(rows[0], skip=idx)
    return idx, has_header


def load_csv(path, schema: CsvSchema = CsvSchema()) -> LabeledDataset:
    """Read a labeled dataset; labels are kept verbatim as strings."""
    rows = _read_rows(path)
    label_idx, has_header = _resolve_schema(rows, schema)
    names = rows[0] if has_header else None
    data_rows = rows[1:] if has_header else rows
    if not data_rows:
        raise ValueError(f"{path}: no data rows")
    feats = np.empty((len(data_rows), len(rows[0]) - 1), dtype=np.float64)
    labels: list[str] = []
    for i, row in enumerate(data_rows):
        k = 0
        for j, cell in enumerate(row):
            if j == label_idx:
                continue
            try:
                feats[i, k] = float(cell)
            except ValueError:
                col = names[j] if names else j
                raise ValueError(
                    f"{path}: non-numeric feature {cell!r} at data row {i}, column {col}"
                ) from None
            k += 1
        labels.append(row[label_idx])
    return LabeledDataset(feats, labels)


def load_feature_csv(path, has_header: bool | None = None) -> np.ndarray:
    """Read an unlabeled feature matrix (every column numeric)."""
    rows = _read_rows(path)
    if has_header is None:
        has_header = not _row_is_numeric(rows[0], skip=None)
    data_rows = rows[1:] if has_header else rows
    if not data_rows:
        raise ValueError(f"{path}: no data rows")
    feats = np.empty((len(data_rows), len(rows[0])), dtype=np.float64)
    for i, row in enumerate(data_rows):
        for j, cell in enumerate(row):
            try:
                feats[i, j] = float(cell)
            except ValueError:
                raise ValueError(
                    f"{path}: non-numeric feature {cell!r} at data row {i}, column {j}"
                ) from None
    if not np.isfinite(feats).all():
        row, col = np.argwhere(~np.isfinite(feats))[0]
        raise ValueError(f"{path}: non-finite feature value at row {row}, column {col}")
    return feats


def save_csv(data: LabeledDataset, path, header: bool = True) -> None:
    """Write ``data`` with the label in the last column.

    Floats are rendered with repr so a save/load round trip is exact.
    """
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        if header:
            writer.writerow([f"f{j}" for j in range(data.d)] + ["label"])
        for x, label in zip(data.features, data.labels):
            writer.writerow([repr(float(v)) for v in x] + [label])
