"""Class balancing, cross-validation, metrics, sweeps and latency benchmarking."""
from __future__ import annotations

import csv
import hashlib
import math
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .dataset import LabeledDataset
from .models import SWEEP_PARAM, Family, ModelSpec, TrainedModel, fit

METRIC_NAMES = ("accuracy", "precision", "recall", "f1", "mcc", "roc_auc")


class EvaluationError(ValueError):
    pass


class TooFewRows(EvaluationError):
    pass


class SingleClass(EvaluationError):
    pass


@dataclass(frozen=True)
class MetricsRecord:
    accuracy: float
    precision: float
    recall: float
    f1: float
    mcc: float
    roc_auc: float

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass
class CVReport:
    family: str
    hyperparameters: dict
    folds: list[MetricsRecord]
    fold_hash: str = ""
    latency_ms: float | None = None

    @property
    def k(self) -> int:
        return len(self.folds)

    def values(self, metric: str) -> np.ndarray:
        return np.array([getattr(f, metric) for f in self.folds])

    def mean(self, metric: str) -> float:
        return float(self.values(metric).mean())

    def std(self, metric: str) -> float:
        """Population standard deviation over the fold values."""
        return float(self.values(metric).std())

    def summary(self) -> dict:
        out = {}
        for m in METRIC_NAMES:
            out[f"{m}_mean"] = self.mean(m)
            out[f"{m}_std"] = self.std(m)
        return out


@dataclass(frozen=True)
class LatencyReport:
    mean_ms: float
    min_ms: float
    max_ms: float
    n_samples: int
    warmup: int
    indices: np.ndarray = field(repr=False, compare=False, default=None)

    @property
    def real_time_factor(self) -> float:
        """Inference time as a fraction of the 1-second window it classifies."""
        return self.mean_ms / 1000.0


def balance(ds: LabeledDataset, seed: int = 42) -> LabeledDataset:
    """Undersample the majority class to the minority count, then shuffle."""
    ds.require_both_classes()
    rng = np.random.default_rng(seed)
    real = np.flatnonzero(ds.y == 0)
    fake = np.flatnonzero(ds.y == 1)
    n = min(real.size, fake.size)
    if real.size > n:
        real = np.sort(rng.choice(real, size=n, replace=False))
    if fake.size > n:
        fake = np.sort(rng.choice(fake, size=n, replace=False))
    idx = np.concatenate([real, fake])
    return ds.subset(rng.permutation(idx))


def confusion(labels, predictions) -> tuple[int, int, int, int]:
    """``(tp, fp, tn, fn)`` with FAKE (1) as the positive class."""
    labels = np.asarray(labels).astype(bool)
    predictions = np.asarray(predictions).astype(bool)
    tp = int(np.sum(labels & predictions))
    fp = int(np.sum(~labels & predictions))
    tn = int(np.sum(~labels & ~predictions))
    fn = int(np.sum(labels & ~predictions))
    return tp, fp, tn, fn


def _ratio(num, den):
    return num / den if den else 0.0


def metrics(labels, predictions, scores) -> MetricsRecord:
    """Confusion-matrix metrics plus ROC AUC.

    Undefined ratios (for example precision with no predicted positives)
    are reported as 0, and so is MCC when any confusion marginal is empty.
    ROC AUC is 0.5 when only one class is present.
    """
    labels = np.asarray(labels)
    if labels.size == 0 or labels.size != len(predictions) or labels.size != len(scores):
        raise EvaluationError("labels, predictions and scores must be non-empty and equal length")
    tp, fp, tn, fn = confusion(labels, predictions)
    precision = _ratio(tp, tp + fp)
    recall = _ratio(tp, tp + fn)
    f1 = _ratio(2 * precision * recall, precision + recall)
    den = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn)
    mcc = (tp * tn - fp * fn) / math.sqrt(den) if den else 0.0
    try:
        auc = roc_auc(labels, scores)
    except SingleClass:
        auc = 0.5
    return MetricsRecord((tp + tn) / labels.size, precision, recall, f1, mcc, auc)


def _midranks(x: np.ndarray) -> np.ndarray:
    order = np.argsort(x, kind="mergesort")
    xs = x[order]
    starts = np.flatnonzero(np.r_[True, xs[1:] != xs[:-1]])
    ends = np.r_[starts[1:], xs.size]
    avg = (starts + ends + 1) / 2.0  # 1-based average rank of each tie group
    ranks = np.empty(x.size)
    ranks[order] = np.repeat(avg, ends - starts)
    return ranks


def roc_auc(labels, scores) -> float:
    """Area under the ROC curve as the normalised Mann-Whitney U statistic (ties count half)."""
    labels = np.asarray(labels).astype(bool)
    scores = np.asarray(scores, dtype=np.float64)
    n_pos = int(labels.sum())
    n_neg = labels.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise SingleClass("ROC AUC needs both classes")
    ranks = _midranks(scores)
    u = ranks[labels].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def stratified_folds(y, k: int = 10, seed: int = 42) -> np.ndarray:
    """Assign each row a fold in ``0..k-1``.

    Each class is shuffled with the seed and dealt round-robin, so every
    fold's class counts are within one of each other. The deal for the
    second class continues where the first stopped, which keeps fold sizes
    balanced too.
    """
    y = np.asarray(y)
    counts = np.bincount(y, minlength=2)
    if k < 2:
        raise TooFewRows("need at least 2 folds")
    if counts.min() < k:
        raise TooFewRows(f"each class needs at least k={k} rows; class counts are {counts.tolist()}")
    rng = np.random.default_rng(seed)
    folds = np.empty(y.size, dtype=np.int64)
    offset = 0
    for c in (0, 1):
        idx = rng.permutation(np.flatnonzero(y == c))
        folds[idx] = (np.arange(idx.size) + offset) % k
        offset += idx.size
    return folds


def fold_hash(folds: np.ndarray) -> str:
    return hashlib.sha256(np.ascontiguousarray(folds, dtype=np.int64).tobytes()).hexdigest()[:16]


def kfold_cv(ds: LabeledDataset, spec: ModelSpec, k: int = 10, seed: int = 42,
             folds: np.ndarray | None = None) -> CVReport:
    """Stratified k-fold cross-validation; the model for each fold is fitted with ``seed``."""
    if folds is None:
        folds = stratified_folds(ds.y, k, seed)
    records = []
    for i in range(k):
        test = folds == i
        model = fit(spec, ds.subset(~test), seed)
        labels, scores = model.predict_batch(ds.X[test])
        records.append(metrics(ds.y[test], labels, scores))
    return CVReport(spec.family.value, dict(spec.hyperparameters), records, fold_hash(folds))


def sweep(ds: LabeledDataset, family: Family | str, grid: Sequence[int], k: int = 10,
          seed: int = 42, base: dict | None = None, param: str | None = None,
          latency_n: int = 0, progress: Callable[[int, CVReport], None] | None = None,
          ) -> list[tuple[int, CVReport]]:
    """Cross-validate one model per grid value on a single fixed fold assignment.

    With ``latency_n > 0`` a model fitted on all rows is also timed at
    each grid point and its mean latency is stored on the report.
    """
    if len(grid) == 0:
        raise EvaluationError("sweep grid is empty")
    family = Family(family)
    param = param or SWEEP_PARAM.get(family)
    if param is None:
        raise EvaluationError(f"no sweep hyperparameter defined for {family.value}")
    folds = stratified_folds(ds.y, k, seed)
    spec0 = ModelSpec(family, dict(base or {}))
    out = []
    for value in grid:
        spec = spec0.with_params(**{param: value})
        report = kfold_cv(ds, spec, k, seed, folds=folds)
        if latency_n:
            model = fit(spec, ds, seed)
            report.latency_ms = bench_latency(model, ds, n=latency_n, seed=seed).mean_ms
        out.append((value, report))
        if progress:
            progress(value, report)
    return out


def bench_latency(model: TrainedModel, ds: LabeledDataset, n: int = 1000, warmup: int = 100,
                  seed: int = 42) -> LatencyReport:
    """Time single-row ``model.predict`` calls on ``n`` rows drawn with replacement."""
    if len(ds) == 0:
        raise EvaluationError("cannot benchmark on an empty dataset")
    if n < 1:
        raise EvaluationError("n must be at least 1")
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, len(ds), size=n)
    rows = [ds.X[i] for i in idx]
    for i in range(warmup):
        model.predict(rows[i % n])
    clock = time.perf_counter_ns
    times = np.empty(n)
    for j, row in enumerate(rows):
        t0 = clock()
        model.predict(row)
        times[j] = clock() - t0
    # a clock tick of zero would break the positivity invariant
    times = np.maximum(times, 1.0) / 1e6
    return LatencyReport(float(times.mean()), float(times.min()), float(times.max()), n, warmup, idx)


def write_folds_csv(path: str | Path, report: CVReport) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["fold", *METRIC_NAMES])
        for i, rec in enumerate(report.folds):
            w.writerow([i, *(repr(getattr(rec, m)) for m in METRIC_NAMES)])


def write_sweep_csv(path: str | Path, results: list[tuple[int, CVReport]], param: str) -> None:
    cols = [f"{m}_{s}" for m in METRIC_NAMES for s in ("mean", "std")]
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow([param, *cols, "latency_ms"])
        for value, rep in results:
            s = rep.summary()
            lat = "" if rep.latency_ms is None else repr(rep.latency_ms)
            w.writerow([value, *(repr(s[c]) for c in cols), lat])
