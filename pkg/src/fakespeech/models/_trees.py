"""Compiled kernels for growing and evaluating binary decision trees.

Trees are stored as parallel node arrays: ``feature`` (-1 marks a leaf),
``threshold``, ``left``, ``right`` and ``value``. A row goes left when
``x[feature] < threshold``. Ensembles concatenate node arrays and keep
the absolute index of each tree's root.
"""
import numpy as np
from numba import njit

SPLIT_EPS = 1e-6


@njit(cache=True)
def _midpoint(lo, hi):
    t = 0.5 * (lo + hi)
    # adjacent floats: the midpoint may round down onto lo
    if t <= lo:
        t = hi
    return t


@njit(cache=True)
def grow_boosted_tree(X, order, grad, hess, max_depth, reg_lambda, min_child_weight, eta):
    """Second-order exact greedy regression tree grown level by level.

    ``order[:, f]`` lists row indices sorted by feature ``f``. Leaf values
    are Newton steps ``-G / (H + lambda)`` already scaled by ``eta``.
    """
    n, d = X.shape
    cap = 2 ** (max_depth + 1) - 1
    feature = np.full(cap, -1, np.int32)
    threshold = np.zeros(cap)
    left = np.full(cap, -1, np.int32)
    right = np.full(cap, -1, np.int32)
    value = np.zeros(cap)

    G = np.zeros(cap)
    H = np.zeros(cap)
    GL = np.zeros(cap)
    HL = np.zeros(cap)
    seen = np.zeros(cap, np.int64)
    last = np.zeros(cap)
    best_gain = np.zeros(cap)
    best_feat = np.full(cap, -1, np.int32)
    best_thr = np.zeros(cap)

    node_of = np.zeros(n, np.int32)
    n_nodes = 1
    lo, hi = 0, 1
    for depth in range(max_depth + 1):
        for nd in range(lo, hi):
            G[nd] = 0.0
            H[nd] = 0.0
            best_gain[nd] = SPLIT_EPS
            best_feat[nd] = -1
        for i in range(n):
            nd = node_of[i]
            if nd >= 0:
                G[nd] += grad[i]
                H[nd] += hess[i]

        if depth < max_depth:
            for f in range(d):
                for nd in range(lo, hi):
                    GL[nd] = 0.0
                    HL[nd] = 0.0
                    seen[nd] = 0
                for j in range(n):
                    i = order[j, f]
                    nd = node_of[i]
                    if nd < 0:
                        continue
                    v = X[i, f]
                    if seen[nd] > 0 and v > last[nd]:
                        gl = GL[nd]
                        hl = HL[nd]
                        gr = G[nd] - gl
                        hr = H[nd] - hl
                        if hl >= min_child_weight and hr >= min_child_weight:
                            gain = (gl * gl / (hl + reg_lambda) + gr * gr / (hr + reg_lambda)
                                    - G[nd] * G[nd] / (H[nd] + reg_lambda))
                            if gain > best_gain[nd]:
                                best_gain[nd] = gain
                                best_feat[nd] = f
                                best_thr[nd] = _midpoint(last[nd], v)
                    GL[nd] += grad[i]
                    HL[nd] += hess[i]
                    seen[nd] += 1
                    last[nd] = v

        next_lo = n_nodes
        for nd in range(lo, hi):
            if depth < max_depth and best_feat[nd] >= 0:
                feature[nd] = best_feat[nd]
                threshold[nd] = best_thr[nd]
                left[nd] = n_nodes
                right[nd] = n_nodes + 1
                n_nodes += 2
            else:
                value[nd] = -G[nd] / (H[nd] + reg_lambda) * eta
        for i in range(n):
            nd = node_of[i]
            if nd < 0:
                continue
            f = feature[nd]
            if f < 0:
                node_of[i] = -1
            elif X[i, f] < threshold[nd]:
                node_of[i] = left[nd]
            else:
                node_of[i] = right[nd]
        lo, hi = next_lo, n_nodes
        if lo == hi:
            break
    return (feature[:n_nodes].copy(), threshold[:n_nodes].copy(), left[:n_nodes].copy(),
            right[:n_nodes].copy(), value[:n_nodes].copy())


@njit(cache=True)
def _gini_sum(n, pos):
    # n * gini impurity of a node with `pos` positives
    if n == 0:
        return 0.0
    p = pos / n
    return n * 2.0 * p * (1.0 - p)


@njit(cache=True)
def grow_cart(X, y, rows, max_features, seed):
    """Gini CART grown to purity on ``rows`` (a bootstrap sample, may repeat).

    Each split examines ``max_features`` randomly drawn features, drawing
    further ones only while none of the examined features can split the
    node. Leaf value is 1.0 when FAKE rows are at least half the leaf.
    """
    np.random.seed(seed)
    n_rows = rows.shape[0]
    d = X.shape[1]
    cap = 2 * n_rows + 1
    feature = np.full(cap, -1, np.int32)
    threshold = np.zeros(cap)
    left = np.full(cap, -1, np.int32)
    right = np.full(cap, -1, np.int32)
    value = np.zeros(cap)

    idx = rows.copy()
    feats = np.arange(d)
    stack = np.empty((cap, 3), np.int64)
    stack[0, 0] = 0
    stack[0, 1] = 0
    stack[0, 2] = n_rows
    top = 1
    n_nodes = 1
    vals = np.empty(n_rows)
    while top > 0:
        top -= 1
        nd = stack[top, 0]
        start = stack[top, 1]
        end = stack[top, 2]
        m = end - start
        pos = 0
        for j in range(start, end):
            pos += y[idx[j]]
        if pos == 0 or pos == m:
            value[nd] = 1.0 if pos > 0 else 0.0
            continue

        parent = _gini_sum(m, pos)
        best_imp = np.inf
        best_f = -1
        best_t = 0.0
        # partial Fisher-Yates draw of the feature order
        for k in range(d):
            r = k + np.random.randint(d - k)
            feats[k], feats[r] = feats[r], feats[k]
            if k >= max_features and best_f >= 0:
                break
            f = feats[k]
            for j in range(m):
                vals[j] = X[idx[start + j], f]
            o = np.argsort(vals[:m])
            lpos = 0
            for p in range(m - 1):
                lpos += y[idx[start + o[p]]]
                a = vals[o[p]]
                b = vals[o[p + 1]]
                if b > a:
                    nl = p + 1
                    imp = _gini_sum(nl, lpos) + _gini_sum(m - nl, pos - lpos)
                    if imp < best_imp:
                        best_imp = imp
                        best_f = f
                        best_t = _midpoint(a, b)
        if best_f < 0 or best_imp > parent + 1e-12:
            value[nd] = 1.0 if 2 * pos >= m else 0.0
            continue

        # partition idx[start:end] on the chosen split
        i = start
        j = end - 1
        while i <= j:
            if X[idx[i], best_f] < best_t:
                i += 1
            else:
                idx[i], idx[j] = idx[j], idx[i]
                j -= 1
        feature[nd] = best_f
        threshold[nd] = best_t
        left[nd] = n_nodes
        right[nd] = n_nodes + 1
        stack[top, 0] = n_nodes + 1
        stack[top, 1] = i
        stack[top, 2] = end
        top += 1
        stack[top, 0] = n_nodes
        stack[top, 1] = start
        stack[top, 2] = i
        top += 1
        n_nodes += 2
    return (feature[:n_nodes].copy(), threshold[:n_nodes].copy(), left[:n_nodes].copy(),
            right[:n_nodes].copy(), value[:n_nodes].copy())


@njit(cache=True)
def ensemble_sum_row(x, feature, threshold, left, right, value, roots):
    s = 0.0
    for t in range(roots.shape[0]):
        nd = roots[t]
        while feature[nd] >= 0:
            if x[feature[nd]] < threshold[nd]:
                nd = left[nd]
            else:
                nd = right[nd]
        s += value[nd]
    return s


@njit(cache=True)
def ensemble_sum(X, feature, threshold, left, right, value, roots):
    out = np.empty(X.shape[0])
    for i in range(X.shape[0]):
        out[i] = ensemble_sum_row(X[i], feature, threshold, left, right, value, roots)
    return out


@njit(cache=True)
def sgd_logistic(X, y, w, b, learning_rate, alpha, epochs, seed):
    """Plain per-sample SGD on the L2-regularised logistic loss, reshuffling each epoch."""
    np.random.seed(seed)
    n, d = X.shape
    order = np.arange(n)
    for _ in range(epochs):
        np.random.shuffle(order)
        for i in order:
            z = b
            for j in range(d):
                z += w[j] * X[i, j]
            if z >= 0:
                p = 1.0 / (1.0 + np.exp(-z))
            else:
                e = np.exp(z)
                p = e / (1.0 + e)
            g = p - y[i]
            for j in range(d):
                w[j] -= learning_rate * (g * X[i, j] + alpha * w[j])
            b -= learning_rate * g
    return w, b
