"""Descriptive and inferential analysis of a labelled feature dataset."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.special import betainc

from .dataset import FAKE, LABEL_NAMES, REAL, EmptyClass, LabeledDataset
from .evaluation import CVReport, confusion, metrics, stratified_folds

ALPHA = 0.05
P_FLOOR = 1e-300


class InsufficientData(ValueError):
    pass


class ZeroVariance(ValueError):
    pass


@dataclass(frozen=True)
class ClassSummary:
    feature_names: tuple[str, ...]
    mean: np.ndarray    # 2 x features, rows REAL then FAKE
    median: np.ndarray
    std: np.ndarray     # sample standard deviation (n - 1)


def class_summary(ds: LabeledDataset) -> ClassSummary:
    stats = {"mean": [], "median": [], "std": []}
    for c in (REAL, FAKE):
        Xc = ds.X[ds.y == c]
        if Xc.shape[0] == 0:
            raise EmptyClass(f"no {LABEL_NAMES[c]} rows")
        stats["mean"].append(Xc.mean(axis=0))
        stats["median"].append(np.median(Xc, axis=0))
        stats["std"].append(Xc.std(axis=0, ddof=1) if Xc.shape[0] > 1 else np.zeros(Xc.shape[1]))
    return ClassSummary(tuple(ds.feature_names), *(np.vstack(stats[k]) for k in ("mean", "median", "std")))


def student_t_sf(t: float, df: float) -> float:
    """P(T > t) for Student's t with ``df`` degrees of freedom."""
    if df <= 0:
        raise ValueError("degrees of freedom must be positive")
    if math.isinf(t):
        return 0.0 if t > 0 else 1.0
    tail = 0.5 * float(betainc(0.5 * df, 0.5, df / (df + t * t)))
    return tail if t >= 0 else 1.0 - tail


@dataclass(frozen=True)
class TTestResult:
    t_statistic: float
    p_value: float
    degrees_of_freedom: float

    @property
    def significant(self) -> bool:
        return self.p_value < ALPHA


def t_test_unpaired(a, b) -> TTestResult:
    """Two-sample Student's t-test with pooled variance, two-sided.

    A positive statistic means ``a`` has the larger mean. p-values below
    1e-300 are reported as exactly 0.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    na, nb = a.size, b.size
    if na < 2 or nb < 2:
        raise InsufficientData(f"each sample needs at least 2 values (got {na} and {nb})")
    df = na + nb - 2
    diff = a.mean() - b.mean()
    pooled = ((na - 1) * a.var(ddof=1) + (nb - 1) * b.var(ddof=1)) / df
    se = math.sqrt(pooled * (1.0 / na + 1.0 / nb))
    if se == 0.0:
        if diff == 0.0:
            return TTestResult(0.0, 1.0, float(df))
        return TTestResult(math.copysign(math.inf, diff), 0.0, float(df))
    t = diff / se
    p = min(1.0, 2.0 * student_t_sf(abs(t), df))
    if p < P_FLOOR:
        p = 0.0
    return TTestResult(float(t), p, float(df))


def t_tests(ds: LabeledDataset) -> list[TTestResult]:
    """One REAL-versus-FAKE test per feature."""
    real, fake = ds.X[ds.y == REAL], ds.X[ds.y == FAKE]
    return [t_test_unpaired(real[:, j], fake[:, j]) for j in range(ds.X.shape[1])]


def pearson_corr(feature, labels) -> float:
    """Point-biserial correlation of a feature with the label (REAL=0, FAKE=1)."""
    x = np.asarray(feature, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64)
    if x.size < 2 or x.size != y.size:
        raise InsufficientData("need at least 2 paired values")
    xc, yc = x - x.mean(), y - y.mean()
    sx, sy = math.sqrt(xc @ xc), math.sqrt(yc @ yc)
    if sx == 0.0 or sy == 0.0:
        raise ZeroVariance("feature and label must both vary")
    return float(np.clip((xc @ yc) / (sx * sy), -1.0, 1.0))


def _entropy_bits(counts: np.ndarray) -> np.ndarray:
    total = counts.sum(axis=-1, keepdims=True)
    p = np.divide(counts, total, out=np.zeros(counts.shape), where=total > 0)
    logs = np.log2(p, out=np.zeros(p.shape), where=p > 0)
    return -(p * logs).sum(axis=-1)


def relative_entropy(feature, labels, n_bins: int = 10) -> float:
    """Information gain, in bits, of the label given the feature cut into equal-width bins."""
    x = np.asarray(feature, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    if not (np.any(y == 0) and np.any(y == 1)):
        raise InsufficientData("both classes must be present")
    lo, hi = x.min(), x.max()
    if hi == lo:
        return 0.0
    bins = np.minimum(((x - lo) / (hi - lo) * n_bins).astype(np.int64), n_bins - 1)
    table = np.zeros((n_bins, 2))
    np.add.at(table, (bins, y), 1.0)
    h_class = _entropy_bits(table.sum(axis=0))
    weights = table.sum(axis=1) / x.size
    return float(max(0.0, h_class - weights @ _entropy_bits(table)))


@dataclass(frozen=True)
class FeatureRanking:
    feature_names: tuple[str, ...]
    pearson_r: np.ndarray
    relative_entropy: np.ndarray

    def by_abs_pearson(self) -> list[int]:
        return sorted(range(len(self.feature_names)), key=lambda j: -abs(self.pearson_r[j]))


def rank_features(ds: LabeledDataset, n_bins: int = 10) -> FeatureRanking:
    r, h = [], []
    for j in range(ds.X.shape[1]):
        try:
            r.append(pearson_corr(ds.X[:, j], ds.y))
        except ZeroVariance:
            r.append(0.0)
        h.append(relative_entropy(ds.X[:, j], ds.y, n_bins))
    return FeatureRanking(tuple(ds.feature_names), np.array(r), np.array(h))


@dataclass(frozen=True)
class Rule:
    threshold: float
    direction: int  # +1: values above threshold are FAKE; -1: below

    def predict(self, x):
        return (self.direction * (np.asarray(x) - self.threshold) > 0).astype(np.int64)


def fit_rule(x, y) -> Rule:
    """Threshold and direction maximising training accuracy.

    Candidates are midpoints between consecutive distinct sorted values,
    plus a threshold below every value (predict one class throughout).
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    order = np.argsort(x, kind="stable")
    xs, ys = x[order], y[order]
    # fake_below[i] = FAKE count among the first i sorted values
    fake_below = np.r_[0, np.cumsum(ys)]
    n, n_fake = xs.size, int(ys.sum())
    cuts = np.r_[0, np.flatnonzero(xs[1:] > xs[:-1]) + 1]
    below = cuts  # rows strictly below each candidate threshold
    real_below = below - fake_below[below]
    # direction +1: predict FAKE above the cut
    acc_up = real_below + (n_fake - fake_below[below])
    # direction -1: predict FAKE below the cut
    acc_down = fake_below[below] + ((n - n_fake) - real_below)
    i_up, i_down = int(np.argmax(acc_up)), int(np.argmax(acc_down))

    def threshold(i):
        c = cuts[i]
        return -math.inf if c == 0 else 0.5 * (xs[c - 1] + xs[c])

    if acc_up[i_up] >= acc_down[i_down]:
        return Rule(threshold(i_up), 1)
    return Rule(threshold(i_down), -1)


@dataclass
class SingleRuleResult:
    feature: str
    rule: Rule
    fold_rules: list[Rule]
    report: CVReport
    pooled: dict  # per-class precision/recall/f1 over all out-of-fold predictions

    @property
    def threshold(self) -> float:
        return self.rule.threshold


def single_rule(ds: LabeledDataset, feature_index: int, folds: int = 10,
                seed: int = 42) -> SingleRuleResult:
    """Cross-validate a one-feature threshold classifier refitted on every training split."""
    if not 0 <= feature_index < ds.X.shape[1]:
        raise IndexError(f"feature index {feature_index} out of range")
    x, y = ds.X[:, feature_index], ds.y
    assign = stratified_folds(y, folds, seed)
    records, rules = [], []
    oof = np.empty(y.size, dtype=np.int64)
    for i in range(folds):
        test = assign == i
        rule = fit_rule(x[~test], y[~test])
        pred = rule.predict(x[test])
        oof[test] = pred
        records.append(metrics(y[test], pred, rule.direction * x[test]))
        rules.append(rule)
    report = CVReport("single_rule", {"feature": ds.feature_names[feature_index]}, records)
    return SingleRuleResult(ds.feature_names[feature_index], fit_rule(x, y), rules, report,
                            per_class_report(y, oof))


def per_class_report(y, pred) -> dict:
    """Precision, recall and F1 with each class taken in turn as positive, plus support."""
    tp, fp, tn, fn = confusion(y, pred)
    out = {}
    for name, (a, b, c) in {"FAKE": (tp, fp, fn), "REAL": (tn, fn, fp)}.items():
        p = a / (a + b) if a + b else 0.0
        r = a / (a + c) if a + c else 0.0
        f = 2 * p * r / (p + r) if p + r else 0.0
        out[name] = {"precision": p, "recall": r, "f1": f, "support": a + c}
    return out


def write_summary_csv(path: str | Path, summary: ClassSummary) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["feature", "real_mean", "real_median", "real_std",
                    "fake_mean", "fake_median", "fake_std"])
        for j, name in enumerate(summary.feature_names):
            w.writerow([name, *(repr(float(getattr(summary, s)[c, j]))
                                for c in (REAL, FAKE) for s in ("mean", "median", "std"))])


def write_ttests_csv(path: str | Path, names, results: list[TTestResult]) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["feature", "t_statistic", "p_value", "df", "significant"])
        for name, r in zip(names, results):
            w.writerow([name, repr(r.t_statistic), f"{r.p_value:.2E}",
                        repr(r.degrees_of_freedom), "Y" if r.significant else "N"])


def write_ranking_csv(path: str | Path, ranking: FeatureRanking) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["feature", "pearson_r", "abs_pearson_r", "relative_entropy"])
        for j in ranking.by_abs_pearson():
            r = float(ranking.pearson_r[j])
            w.writerow([ranking.feature_names[j], repr(r), repr(abs(r)),
                        repr(float(ranking.relative_entropy[j]))])
