"""Model specifications, the shared standardiser, fitting and persistence."""
from __future__ import annotations

import enum
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from ..dataset import FAKE, REAL, LabeledDataset
from .bayes import BernoulliNB, GaussianNB
from .ensembles import GradientBoostedTrees, RandomForest
from .knn import KNearestNeighbors
from .linear import LinearDiscriminant, QuadraticDiscriminant, RidgeClassifier, SGDLogistic

FORMAT_NAME = "fakespeech-model"
FORMAT_VERSION = 1


class Family(str, enum.Enum):
    GBT = "gbt"
    RANDOM_FOREST = "rf"
    LDA = "lda"
    QDA = "qda"
    RIDGE = "ridge"
    GAUSSIAN_NB = "gnb"
    BERNOULLI_NB = "bnb"
    KNN = "knn"
    SGD_LINEAR = "sgd"


class ModelError(Exception):
    pass


class InvalidHyperparameter(ModelError, ValueError):
    pass


class DegenerateTraining(ModelError, ValueError):
    pass


class CorruptModelFile(ModelError):
    pass


class VersionMismatch(ModelError):
    pass


@dataclass(frozen=True)
class _Param:
    kind: type
    default: Any
    lo: float | None = None
    hi: float | None = None
    lo_open: bool = False

    def check(self, name, value):
        if self.kind is int:
            if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
                if isinstance(value, float) and value.is_integer():
                    value = int(value)
                else:
                    raise InvalidHyperparameter(f"{name} must be an integer, got {value!r}")
            value = int(value)
        else:
            try:
                value = float(value)
            except (TypeError, ValueError):
                raise InvalidHyperparameter(f"{name} must be a number, got {value!r}") from None
        bad = ((self.lo is not None and (value <= self.lo if self.lo_open else value < self.lo))
               or (self.hi is not None and value > self.hi))
        if bad:
            raise InvalidHyperparameter(f"{name}={value!r} is outside {self.describe()}")
        return value

    def describe(self):
        left = "(" if self.lo_open else "["
        lo = "-inf" if self.lo is None else f"{self.lo:g}"
        hi = "inf" if self.hi is None else f"{self.hi:g}"
        return f"{left}{lo}, {hi}]"


_SCHEMA: dict[Family, tuple[type, dict[str, _Param]]] = {
    Family.GBT: (GradientBoostedTrees, {
        "rounds": _Param(int, 100, 1),
        "max_depth": _Param(int, 6, 1, 30),
        "learning_rate": _Param(float, 0.3, 0.0, 1.0, lo_open=True),
        "reg_lambda": _Param(float, 1.0, 0.0),
        "min_child_weight": _Param(float, 1.0, 0.0),
    }),
    Family.RANDOM_FOREST: (RandomForest, {
        "trees": _Param(int, 100, 1),
        "max_features": _Param(int, 0, 0),
    }),
    Family.LDA: (LinearDiscriminant, {"reg": _Param(float, 1e-6, 0.0)}),
    Family.QDA: (QuadraticDiscriminant, {"reg": _Param(float, 1e-6, 0.0)}),
    Family.RIDGE: (RidgeClassifier, {"alpha": _Param(float, 1.0, 0.0, lo_open=True)}),
    Family.GAUSSIAN_NB: (GaussianNB, {"var_smoothing": _Param(float, 1e-9, 0.0)}),
    Family.BERNOULLI_NB: (BernoulliNB, {"alpha": _Param(float, 1.0, 0.0, lo_open=True)}),
    Family.KNN: (KNearestNeighbors, {"k": _Param(int, 5, 1)}),
    Family.SGD_LINEAR: (SGDLogistic, {
        "learning_rate": _Param(float, 0.01, 0.0, lo_open=True),
        "epochs": _Param(int, 100, 1),
        "alpha": _Param(float, 1e-4, 0.0),
    }),
}

# the hyperparameter each family's sweep varies
SWEEP_PARAM = {Family.GBT: "rounds", Family.RANDOM_FOREST: "trees", Family.KNN: "k"}


def hyperparameter_ranges(family: Family) -> dict[str, str]:
    return {k: p.describe() for k, p in _SCHEMA[Family(family)][1].items()}


@dataclass(frozen=True)
class ModelSpec:
    family: Family
    hyperparameters: dict = field(default_factory=dict)

    def __post_init__(self):
        try:
            family = Family(self.family)
        except ValueError:
            names = ", ".join(f.value for f in Family)
            raise InvalidHyperparameter(f"unknown family {self.family!r}; expected one of {names}")
        object.__setattr__(self, "family", family)
        schema = _SCHEMA[family][1]
        unknown = set(self.hyperparameters) - set(schema)
        if unknown:
            raise InvalidHyperparameter(
                f"{family.value} has no hyperparameter(s) {sorted(unknown)}; "
                f"valid: {sorted(schema)}")
        full = {k: p.check(k, self.hyperparameters.get(k, p.default)) for k, p in schema.items()}
        object.__setattr__(self, "hyperparameters", full)

    def with_params(self, **overrides) -> "ModelSpec":
        return ModelSpec(self.family, {**self.hyperparameters, **overrides})

    def build(self):
        cls = _SCHEMA[self.family][0]
        params = dict(self.hyperparameters)
        if self.family is Family.RANDOM_FOREST and params["max_features"] == 0:
            params["max_features"] = None
        return cls(**params)

    def label(self) -> str:
        key = SWEEP_PARAM.get(self.family)
        if key:
            return f"{self.family.value}({self.hyperparameters[key]})"
        return self.family.value


@dataclass(frozen=True)
class Standardizer:
    mean: np.ndarray
    scale: np.ndarray

    @classmethod
    def fit(cls, X) -> "Standardizer":
        mean = X.mean(axis=0)
        std = X.std(axis=0)
        return cls(mean, np.where(std > 0, std, 1.0))

    def transform(self, X):
        return (X - self.mean) / self.scale


@dataclass
class TrainedModel:
    spec: ModelSpec
    standardizer: Standardizer
    estimator: Any
    seed: int = 0
    feature_names: tuple[str, ...] = ()

    @property
    def probabilistic(self) -> bool:
        return self.estimator.probabilistic

    @property
    def cutoff(self) -> float:
        return 0.5 if self.probabilistic else 0.0

    def decision(self, X) -> np.ndarray:
        """FAKE-confidence scores for a batch of raw (unstandardised) rows."""
        Z = self.standardizer.transform(np.asarray(X, dtype=np.float64))
        return self.estimator.decision(np.atleast_2d(Z))

    def predict_batch(self, X) -> tuple[np.ndarray, np.ndarray]:
        Z = np.atleast_2d(self.standardizer.transform(np.asarray(X, dtype=np.float64)))
        scores = self.estimator.decision(Z)
        if hasattr(self.estimator, "predict_labels"):
            labels = self.estimator.predict_labels(Z)
        else:
            labels = (scores >= self.cutoff).astype(np.int64)
        return labels, scores

    def predict(self, row) -> tuple[int, float]:
        """Classify one feature row; returns ``(label, score)`` with FAKE == 1."""
        z = (np.asarray(row, dtype=np.float64) - self.standardizer.mean) / self.standardizer.scale
        if hasattr(self.estimator, "predict_labels"):
            labels, scores = self.predict_batch(np.asarray(row)[None, :])
            return int(labels[0]), float(scores[0])
        score = self.estimator.decision_row(z)
        return (FAKE if score >= self.cutoff else REAL), float(score)


def fit(spec: ModelSpec, train: LabeledDataset, seed: int = 42) -> TrainedModel:
    if len(train) == 0:
        raise DegenerateTraining("training set is empty")
    n_real, n_fake = train.class_counts()
    if n_real == 0 or n_fake == 0:
        raise DegenerateTraining("training set contains a single class")
    std = Standardizer.fit(train.X)
    est = spec.build()
    est.fit(std.transform(train.X), train.y, np.random.default_rng(seed))
    return TrainedModel(spec, std, est, seed, tuple(train.feature_names))


def _canonical(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False)


def to_document(model: TrainedModel) -> dict:
    body = {
        "spec": {"family": model.spec.family.value,
                 "hyperparameters": model.spec.hyperparameters},
        "seed": model.seed,
        "feature_names": list(model.feature_names),
        "standardizer": {"mean": model.standardizer.mean.tolist(),
                         "scale": model.standardizer.scale.tolist()},
        "parameters": model.estimator.get_params(),
    }
    return {"format": FORMAT_NAME, "version": FORMAT_VERSION,
            "sha256": hashlib.sha256(_canonical(body).encode()).hexdigest(), **body}


def save(model: TrainedModel, path: str | Path) -> None:
    with open(path, "w") as f:
        f.write(_canonical(to_document(model)))
        f.write("\n")


def from_document(doc: dict) -> TrainedModel:
    if not isinstance(doc, dict) or doc.get("format") != FORMAT_NAME:
        raise CorruptModelFile("not a fakespeech model file")
    if doc.get("version") != FORMAT_VERSION:
        raise VersionMismatch(
            f"model file version {doc.get('version')!r}; this build reads version {FORMAT_VERSION}")
    try:
        body = {k: doc[k] for k in ("spec", "seed", "feature_names", "standardizer", "parameters")}
    except KeyError as e:
        raise CorruptModelFile(f"missing field {e}") from None
    if hashlib.sha256(_canonical(body).encode()).hexdigest() != doc.get("sha256"):
        raise CorruptModelFile("checksum mismatch")
    try:
        spec = ModelSpec(body["spec"]["family"], body["spec"]["hyperparameters"])
        std = Standardizer(np.asarray(body["standardizer"]["mean"], np.float64),
                           np.asarray(body["standardizer"]["scale"], np.float64))
        est = spec.build().set_params(body["parameters"])
    except (KeyError, TypeError, ValueError) as e:
        raise CorruptModelFile(f"invalid model contents: {e}") from None
    return TrainedModel(spec, std, est, int(body["seed"]), tuple(body["feature_names"]))


def load(path: str | Path) -> TrainedModel:
    try:
        with open(path) as f:
            doc = json.load(f)
    except (json.JSONDecodeError, UnicodeDecodeError) as e:
        raise CorruptModelFile(f"{path}: {e}") from None
    return from_document(doc)
