"""Gradient-boosted trees and random forests."""
from __future__ import annotations

import math

import numpy as np

from . import _trees


def _sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


class _TreeEnsemble:
    """Concatenated node arrays shared by both ensemble families."""

    def __init__(self):
        self.feature = np.empty(0, np.int32)
        self.threshold = np.empty(0)
        self.left = np.empty(0, np.int32)
        self.right = np.empty(0, np.int32)
        self.value = np.empty(0)
        self.roots = np.empty(0, np.int64)

    def _set_trees(self, trees):
        offsets = np.cumsum([0] + [t[0].shape[0] for t in trees])
        self.roots = offsets[:-1].astype(np.int64)
        self.feature = np.concatenate([t[0] for t in trees]).astype(np.int32)
        self.threshold = np.concatenate([t[1] for t in trees])
        lefts, rights = [], []
        for off, t in zip(offsets, trees):
            lefts.append(np.where(t[2] >= 0, t[2] + off, -1))
            rights.append(np.where(t[3] >= 0, t[3] + off, -1))
        self.left = np.concatenate(lefts).astype(np.int32)
        self.right = np.concatenate(rights).astype(np.int32)
        self.value = np.concatenate([t[4] for t in trees])

    @property
    def n_trees(self) -> int:
        return self.roots.shape[0]

    def _sum(self, X):
        X = np.ascontiguousarray(X, dtype=np.float64)
        return _trees.ensemble_sum(X, self.feature, self.threshold, self.left, self.right,
                                   self.value, self.roots)

    def _sum_row(self, x):
        return _trees.ensemble_sum_row(x, self.feature, self.threshold, self.left,
                                       self.right, self.value, self.roots)

    def get_params(self) -> dict:
        return {
            "roots": self.roots.tolist(),
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "value": self.value.tolist(),
        }

    def set_params(self, p: dict):
        self.roots = np.asarray(p["roots"], np.int64)
        self.feature = np.asarray(p["feature"], np.int32)
        self.threshold = np.asarray(p["threshold"], np.float64)
        self.left = np.asarray(p["left"], np.int32)
        self.right = np.asarray(p["right"], np.int32)
        self.value = np.asarray(p["value"], np.float64)
        return self


class GradientBoostedTrees(_TreeEnsemble):
    """Logistic-loss boosting with Newton leaf weights and exact greedy splits.

    The initial margin is 0 (probability 0.5). ``loss_history`` records the
    mean training log-loss after each round; it is not persisted.
    """

    probabilistic = True

    def __init__(self, rounds=100, max_depth=6, learning_rate=0.3, reg_lambda=1.0,
                 min_child_weight=1.0):
        super().__init__()
        self.rounds = rounds
        self.max_depth = max_depth
        self.learning_rate = learning_rate
        self.reg_lambda = reg_lambda
        self.min_child_weight = min_child_weight
        self.loss_history: list[float] = []

    def fit(self, X, y, rng=None):
        X = np.ascontiguousarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        order = np.ascontiguousarray(np.argsort(X, axis=0, kind="stable"))
        margin = np.zeros(X.shape[0])
        trees = []
        self.loss_history = []
        for _ in range(self.rounds):
            p = _sigmoid(margin)
            grad = p - y
            hess = p * (1.0 - p)
            tree = _trees.grow_boosted_tree(
                X, order, grad, hess, self.max_depth, float(self.reg_lambda),
                float(self.min_child_weight), float(self.learning_rate))
            trees.append(tree)
            margin += _trees.ensemble_sum(X, *tree, np.zeros(1, np.int64))
            self.loss_history.append(_log_loss(y, margin))
        self._set_trees(trees)
        return self

    def decision(self, X):
        return _sigmoid(self._sum(X))

    def decision_row(self, x):
        z = self._sum_row(x)
        return 1.0 / (1.0 + math.exp(-z)) if z >= 0 else math.exp(z) / (1.0 + math.exp(z))


def _log_loss(y, margin):
    # log(1 + e^z) - y z, computed stably
    return float(np.mean(np.logaddexp(0.0, margin) - y * margin))


class RandomForest(_TreeEnsemble):
    """Bagged Gini CART trees grown to purity; the score is the fraction of FAKE votes."""

    probabilistic = True

    def __init__(self, trees=100, max_features=None):
        super().__init__()
        self.trees = trees
        self.max_features = max_features

    def fit(self, X, y, rng):
        X = np.ascontiguousarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.int64)
        n, d = X.shape
        mtry = self.max_features or math.ceil(math.sqrt(d))
        seeds = rng.integers(0, 2**31 - 1, size=self.trees)
        grown = []
        for s in seeds:
            boot_rng = np.random.default_rng(int(s))
            rows = boot_rng.integers(0, n, size=n)
            grown.append(_trees.grow_cart(X, y, rows, int(mtry), int(s)))
        self._set_trees(grown)
        self.max_features = int(mtry)
        return self

    def decision(self, X):
        return self._sum(X) / self.n_trees

    def decision_row(self, x):
        return self._sum_row(x) / self.n_trees
