"""Naive Bayes classifiers."""
from __future__ import annotations

import numpy as np


def _posterior_fake(jll0, jll1):
    # normalise two joint log-likelihoods into P(FAKE)
    m = np.maximum(jll0, jll1)
    e0, e1 = np.exp(jll0 - m), np.exp(jll1 - m)
    return e1 / (e0 + e1)


class GaussianNB:
    probabilistic = True

    def __init__(self, var_smoothing=1e-9):
        self.var_smoothing = var_smoothing

    def fit(self, X, y, rng=None):
        eps = self.var_smoothing * X.var(axis=0).max()
        self.means_ = np.vstack([X[y == c].mean(axis=0) for c in (0, 1)])
        self.vars_ = np.vstack([X[y == c].var(axis=0) for c in (0, 1)]) + eps
        self.log_priors_ = np.log(np.array([(y == 0).mean(), (y == 1).mean()]))
        return self

    def joint_log_likelihood(self, X):
        out = []
        for c in (0, 1):
            ll = -0.5 * np.sum(np.log(2.0 * np.pi * self.vars_[c]))
            ll = ll - 0.5 * np.sum((X - self.means_[c]) ** 2 / self.vars_[c], axis=1)
            out.append(ll + self.log_priors_[c])
        return out

    def posterior(self, X):
        """Columns are P(REAL), P(FAKE)."""
        p1 = self.decision(X)
        return np.column_stack([1.0 - p1, p1])

    def decision(self, X):
        return _posterior_fake(*self.joint_log_likelihood(X))

    def decision_row(self, x):
        return float(self.decision(x[None, :])[0])

    def get_params(self):
        return {"means": self.means_.tolist(), "vars": self.vars_.tolist(),
                "log_priors": self.log_priors_.tolist()}

    def set_params(self, p):
        self.means_ = np.asarray(p["means"], np.float64)
        self.vars_ = np.asarray(p["vars"], np.float64)
        self.log_priors_ = np.asarray(p["log_priors"], np.float64)
        return self


class BernoulliNB:
    """Naive Bayes over features binarised at their training medians, Laplace-smoothed."""

    probabilistic = True

    def __init__(self, alpha=1.0):
        self.alpha = alpha

    def fit(self, X, y, rng=None):
        self.thresholds_ = np.median(X, axis=0)
        B = X > self.thresholds_
        a = self.alpha
        probs = []
        for c in (0, 1):
            Bc = B[y == c]
            probs.append((Bc.sum(axis=0) + a) / (Bc.shape[0] + 2.0 * a))
        self.feature_probs_ = np.vstack(probs)
        self.log_priors_ = np.log(np.array([(y == 0).mean(), (y == 1).mean()]))
        return self

    def decision(self, X):
        B = X > self.thresholds_
        jll = []
        for c in (0, 1):
            p = self.feature_probs_[c]
            jll.append(B @ np.log(p) + (~B) @ np.log1p(-p) + self.log_priors_[c])
        return _posterior_fake(*jll)

    def decision_row(self, x):
        return float(self.decision(x[None, :])[0])

    def get_params(self):
        return {"thresholds": self.thresholds_.tolist(),
                "feature_probs": self.feature_probs_.tolist(),
                "log_priors": self.log_priors_.tolist()}

    def set_params(self, p):
        self.thresholds_ = np.asarray(p["thresholds"], np.float64)
        self.feature_probs_ = np.asarray(p["feature_probs"], np.float64)
        self.log_priors_ = np.asarray(p["log_priors"], np.float64)
        return self
