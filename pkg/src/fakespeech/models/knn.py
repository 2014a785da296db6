from __future__ import annotations

import numpy as np

_CHUNK = 512


class KNearestNeighbors:
    """Majority vote of the ``k`` nearest stored rows under Euclidean distance.

    The score is the FAKE fraction of the vote. A split vote goes to the
    label of the single nearest neighbour.
    """

    probabilistic = True

    def __init__(self, k=5):
        self.k = k

    def fit(self, X, y, rng=None):
        self.X_ = np.ascontiguousarray(X, dtype=np.float64)
        self.y_ = np.asarray(y, dtype=np.int64)
        self.sq_norms_ = np.einsum("ij,ij->i", self.X_, self.X_)
        return self

    def _sq_dist(self, Q):
        q2 = np.einsum("ij,ij->i", Q, Q)
        return np.maximum(q2[:, None] + self.sq_norms_[None, :] - 2.0 * (Q @ self.X_.T), 0.0)

    def neighbors(self, Q):
        """Indices of the k nearest training rows per query, nearest first."""
        Q = np.atleast_2d(np.asarray(Q, dtype=np.float64))
        k = min(self.k, self.X_.shape[0])
        out = np.empty((Q.shape[0], k), dtype=np.int64)
        for s in range(0, Q.shape[0], _CHUNK):
            dist = self._sq_dist(Q[s:s + _CHUNK])
            if k < dist.shape[1]:
                cand = np.argpartition(dist, k - 1, axis=1)[:, :k]
            else:
                cand = np.broadcast_to(np.arange(dist.shape[1]), dist.shape)
            cd = np.take_along_axis(dist, cand, axis=1)
            # order by distance, then by training index
            order = np.lexsort((cand, cd), axis=1)
            out[s:s + _CHUNK] = np.take_along_axis(cand, order, axis=1)
        return out

    def _vote(self, Q):
        nb = self.neighbors(Q)
        labels = self.y_[nb]
        frac = labels.mean(axis=1)
        pred = np.where(frac > 0.5, 1, 0)
        tie = frac == 0.5
        pred[tie] = labels[tie, 0]
        return frac, pred

    def decision(self, X):
        return self._vote(X)[0]

    def decision_row(self, x):
        return float(self._vote(x[None, :])[0][0])

    def predict_labels(self, X):
        return self._vote(X)[1]

    def get_params(self):
        return {"X": self.X_.tolist(), "y": self.y_.tolist()}

    def set_params(self, p):
        return self.fit(np.asarray(p["X"], np.float64), np.asarray(p["y"], np.int64))
