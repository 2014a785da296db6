"""Discriminant analysis, ridge classification and SGD logistic regression."""
from __future__ import annotations

import math

import numpy as np

from . import _trees


def _sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def _regularise(cov, reg):
    d = cov.shape[0]
    return cov + (reg * np.trace(cov) / d + 1e-300) * np.eye(d)


class LinearDiscriminant:
    """Gaussian classes with a shared covariance, giving a linear log-odds."""

    probabilistic = True

    def __init__(self, reg=1e-6):
        self.reg = reg

    def fit(self, X, y, rng=None):
        X0, X1 = X[y == 0], X[y == 1]
        mu0, mu1 = X0.mean(axis=0), X1.mean(axis=0)
        scatter = (X0 - mu0).T @ (X0 - mu0) + (X1 - mu1).T @ (X1 - mu1)
        cov = _regularise(scatter / max(len(y) - 2, 1), self.reg)
        self.coef_ = np.linalg.solve(cov, mu1 - mu0)
        prior = math.log(len(X1) / len(X0))
        self.intercept_ = float(-0.5 * (mu0 + mu1) @ self.coef_ + prior)
        return self

    def log_odds(self, X):
        return X @ self.coef_ + self.intercept_

    def decision(self, X):
        return _sigmoid(self.log_odds(X))

    def decision_row(self, x):
        return float(self.decision(x[None, :])[0])

    def get_params(self):
        return {"coef": self.coef_.tolist(), "intercept": self.intercept_}

    def set_params(self, p):
        self.coef_ = np.asarray(p["coef"], np.float64)
        self.intercept_ = float(p["intercept"])
        return self


class QuadraticDiscriminant:
    """Gaussian classes with their own covariances.

    Each covariance gets ``reg * trace / d`` added to its diagonal.
    """

    probabilistic = True

    def __init__(self, reg=1e-6):
        self.reg = reg

    def fit(self, X, y, rng=None):
        self.means_, self.precisions_, self.logdets_, self.log_priors_ = [], [], [], []
        for c in (0, 1):
            Xc = X[y == c]
            mu = Xc.mean(axis=0)
            cov = _regularise((Xc - mu).T @ (Xc - mu) / max(len(Xc) - 1, 1), self.reg)
            self._set_class(mu, cov, math.log(len(Xc) / len(y)))
        return self

    def _set_class(self, mu, cov, log_prior):
        sign, logdet = np.linalg.slogdet(cov)
        self.means_.append(mu)
        self.precisions_.append(np.linalg.inv(cov))
        self.logdets_.append(float(logdet))
        self.log_priors_.append(float(log_prior))

    def log_odds(self, X):
        ll = []
        for c in (0, 1):
            diff = X - self.means_[c]
            maha = np.einsum("ij,jk,ik->i", diff, self.precisions_[c], diff)
            ll.append(-0.5 * (self.logdets_[c] + maha) + self.log_priors_[c])
        return ll[1] - ll[0]

    def decision(self, X):
        return _sigmoid(self.log_odds(X))

    def decision_row(self, x):
        return float(self.decision(x[None, :])[0])

    def get_params(self):
        return {
            "means": [m.tolist() for m in self.means_],
            "precisions": [p.tolist() for p in self.precisions_],
            "logdets": self.logdets_,
            "log_priors": self.log_priors_,
        }

    def set_params(self, p):
        self.means_ = [np.asarray(m, np.float64) for m in p["means"]]
        self.precisions_ = [np.asarray(m, np.float64) for m in p["precisions"]]
        self.logdets_ = [float(v) for v in p["logdets"]]
        self.log_priors_ = [float(v) for v in p["log_priors"]]
        return self


class RidgeClassifier:
    """Least squares on {-1, +1} targets with an L2 penalty; the intercept is unpenalised."""

    probabilistic = False

    def __init__(self, alpha=1.0):
        self.alpha = alpha

    def fit(self, X, y, rng=None):
        t = np.where(y == 1, 1.0, -1.0)
        xm, tm = X.mean(axis=0), t.mean()
        Xc = X - xm
        A = Xc.T @ Xc + self.alpha * np.eye(X.shape[1])
        self.coef_ = np.linalg.solve(A, Xc.T @ (t - tm))
        self.intercept_ = float(tm - xm @ self.coef_)
        return self

    def decision(self, X):
        return X @ self.coef_ + self.intercept_

    def decision_row(self, x):
        return float(x @ self.coef_ + self.intercept_)

    def get_params(self):
        return {"coef": self.coef_.tolist(), "intercept": self.intercept_}

    def set_params(self, p):
        self.coef_ = np.asarray(p["coef"], np.float64)
        self.intercept_ = float(p["intercept"])
        return self


class SGDLogistic:
    """Logistic regression trained by constant-rate per-sample SGD."""

    probabilistic = True

    def __init__(self, learning_rate=0.01, epochs=100, alpha=1e-4):
        self.learning_rate = learning_rate
        self.epochs = epochs
        self.alpha = alpha

    def fit(self, X, y, rng):
        seed = int(rng.integers(0, 2**31 - 1))
        w, b = _trees.sgd_logistic(np.ascontiguousarray(X, dtype=np.float64),
                                   y.astype(np.float64), np.zeros(X.shape[1]), 0.0,
                                   float(self.learning_rate), float(self.alpha),
                                   int(self.epochs), seed)
        self.coef_, self.intercept_ = w, float(b)
        return self

    def decision(self, X):
        return _sigmoid(X @ self.coef_ + self.intercept_)

    def decision_row(self, x):
        z = float(x @ self.coef_ + self.intercept_)
        return 1.0 / (1.0 + math.exp(-z)) if z >= 0 else math.exp(z) / (1.0 + math.exp(z))

    def get_params(self):
        return {"coef": self.coef_.tolist(), "intercept": self.intercept_}

    def set_params(self, p):
        self.coef_ = np.asarray(p["coef"], np.float64)
        self.intercept_ = float(p["intercept"])
        return self
