"""Labelled feature datasets and the CSV interchange format."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

import numpy as np

from .dsp import FEATURE_NAMES, N_FEATURES

REAL, FAKE = 0, 1
LABEL_NAMES = ("REAL", "FAKE")
LABEL_COLUMN = "LABEL"

# header used by the published DEEP-VOICE feature file
PUBLISHED_ALIASES = {
    "chroma_stft": "chroma_mean",
    "rms": "rms_mean",
    "spectral_centroid": "spectral_centroid_mean",
    "spectral_bandwidth": "spectral_bandwidth_mean",
    "rolloff": "rolloff_mean",
    "zero_crossing_rate": "zcr_mean",
    **{f"mfcc{i}": f"mfcc_{i}" for i in range(1, 21)},
}


class DatasetError(ValueError):
    """Schema or content violation in a dataset file."""

    def __init__(self, message: str, row: int | None = None, column: str | None = None):
        where = []
        if row is not None:
            where.append(f"row {row}")
        if column is not None:
            where.append(f"column {column!r}")
        super().__init__(f"{', '.join(where)}: {message}" if where else message)
        self.row = row
        self.column = column


class EmptyClass(DatasetError):
    pass


@dataclass
class LabeledDataset:
    X: np.ndarray
    y: np.ndarray
    feature_names: tuple[str, ...] = field(default=FEATURE_NAMES)

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=np.float64)
        self.y = np.asarray(self.y, dtype=np.int64)
        if self.X.ndim != 2:
            raise DatasetError(f"feature matrix must be 2-D, got shape {self.X.shape}")
        if self.X.shape[0] != self.y.shape[0]:
            raise DatasetError(f"{self.X.shape[0]} rows but {self.y.shape[0]} labels")
        if self.X.shape[1] != len(self.feature_names):
            raise DatasetError(
                f"{self.X.shape[1]} columns but {len(self.feature_names)} feature names")
        if not np.isfinite(self.X).all():
            bad = int(np.argwhere(~np.isfinite(self.X))[0, 0])
            raise DatasetError("non-finite feature value", row=bad)
        if not np.isin(self.y, (REAL, FAKE)).all():
            raise DatasetError("labels must be 0 (REAL) or 1 (FAKE)")

    def __len__(self) -> int:
        return self.y.shape[0]

    def subset(self, idx) -> "LabeledDataset":
        return LabeledDataset(self.X[idx], self.y[idx], self.feature_names)

    def class_counts(self) -> tuple[int, int]:
        n_fake = int(self.y.sum())
        return len(self) - n_fake, n_fake

    def require_both_classes(self) -> None:
        n_real, n_fake = self.class_counts()
        if n_real == 0 or n_fake == 0:
            missing = "REAL" if n_real == 0 else "FAKE"
            raise EmptyClass(f"dataset has no {missing} rows")


def parse_label(value: str) -> int:
    v = value.strip().upper()
    if v == "REAL":
        return REAL
    if v == "FAKE":
        return FAKE
    raise ValueError(f"label must be REAL or FAKE, got {value!r}")


def _canonical_header(header: list[str]) -> list[str]:
    names = [h.strip() for h in header]
    if names[-1:] != [LABEL_COLUMN]:
        raise DatasetError(f"last column must be {LABEL_COLUMN!r}", row=1)
    feats = [PUBLISHED_ALIASES.get(n, n) for n in names[:-1]]
    if tuple(feats) != FEATURE_NAMES:
        unknown = [n for n, c in zip(names, feats) if c not in FEATURE_NAMES]
        detail = f"unknown columns {unknown}" if unknown else "columns out of order"
        raise DatasetError(f"header does not match the 26 feature columns ({detail})", row=1)
    return feats


def read_dataset(path: str | Path) -> LabeledDataset:
    """Read a dataset CSV. Row numbers in errors count the header as row 1."""
    with open(path, newline="") as f:
        reader = csv.reader(f)
        try:
            header = next(reader)
        except StopIteration:
            raise DatasetError("empty file") from None
        _canonical_header(header)
        rows, labels = [], []
        for lineno, rec in enumerate(reader, start=2):
            if not rec:
                continue
            if len(rec) != N_FEATURES + 1:
                raise DatasetError(f"expected {N_FEATURES + 1} fields, got {len(rec)}", row=lineno)
            values = []
            for name, cell in zip(FEATURE_NAMES, rec):
                try:
                    v = float(cell)
                except ValueError:
                    raise DatasetError(f"not a number: {cell!r}", row=lineno, column=name) from None
                if not math.isfinite(v):
                    raise DatasetError(f"non-finite value {cell!r}", row=lineno, column=name)
                values.append(v)
            try:
                labels.append(parse_label(rec[-1]))
            except ValueError as e:
                raise DatasetError(str(e), row=lineno, column=LABEL_COLUMN) from None
            rows.append(values)
    X = np.array(rows, dtype=np.float64).reshape(-1, N_FEATURES)
    return LabeledDataset(X, np.array(labels, dtype=np.int64))


def write_dataset(path: str | Path, ds: LabeledDataset) -> None:
    with open(path, "w", newline="") as f:
        write_rows(f, ds.X, ds.y, header=True)


def write_rows(f, X: Iterable, y: Iterable[int], header: bool = False) -> None:
    w = csv.writer(f, lineterminator="\n")
    if header:
        w.writerow([*FEATURE_NAMES, LABEL_COLUMN])
    for row, label in zip(X, y):
        w.writerow([repr(float(v)) for v in row] + [LABEL_NAMES[int(label)]])
