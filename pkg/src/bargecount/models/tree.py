"""Weighted CART regression trees (MSE criterion), array-backed.

Sample weights are bootstrap multiplicities, so ``min_leaf`` is compared to
the weight mass of a child. Splits are taken even at zero gain as long as the
node is impure, which lets a full-depth tree interpolate unique rows.
"""
from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np


@numba.njit(cache=True)
def _build(X, y, w, mtry, min_leaf, max_depth, keys):
    n, p = X.shape
    cap = 2 * n + 1
    feature = np.full(cap, -1, dtype=np.int64)
    threshold = np.zeros(cap)
    left = np.full(cap, -1, dtype=np.int64)
    right = np.full(cap, -1, dtype=np.int64)
    value = np.zeros(cap)
    importance = np.zeros(p)

    idx = np.arange(n)
    stack = np.empty((cap, 4), dtype=np.int64)  # node, start, end, depth
    stack[0, 0] = 0
    stack[0, 1] = 0
    stack[0, 2] = n
    stack[0, 3] = 0
    top = 1
    n_nodes = 1
    vals = np.empty(n)
    while top > 0:
        top -= 1
        node = stack[top, 0]
        start = stack[top, 1]
        end = stack[top, 2]
        depth = stack[top, 3]

        wsum = 0.0
        ssum = 0.0
        ymin = np.inf
        ymax = -np.inf
        for k in range(start, end):
            i = idx[k]
            wsum += w[i]
            ssum += w[i] * y[i]
            if y[i] < ymin:
                ymin = y[i]
            if y[i] > ymax:
                ymax = y[i]
        value[node] = ssum / wsum
        if ymin == ymax or (max_depth >= 0 and depth >= max_depth) or wsum < 2.0 * min_leaf:
            continue

        parent_term = ssum * ssum / wsum
        best_gain = -np.inf
        best_f = -1
        best_thr = 0.0
        visited = 0
        if mtry >= p:
            order_f = np.arange(p)
        else:
            order_f = np.argsort(keys[node])
        for q in range(p):
            if visited >= mtry:
                break
            f = order_f[q]
            m = end - start
            for k in range(m):
                vals[k] = X[idx[start + k], f]
            order = np.argsort(vals[:m], kind="mergesort")
            if vals[order[0]] == vals[order[m - 1]]:
                continue
            visited += 1
            wl = 0.0
            sl = 0.0
            for k in range(m - 1):
                i = idx[start + order[k]]
                wl += w[i]
                sl += w[i] * y[i]
                v0 = vals[order[k]]
                v1 = vals[order[k + 1]]
                if v0 == v1:
                    continue
                wr = wsum - wl
                if wl < min_leaf or wr < min_leaf:
                    continue
                sr = ssum - sl
                gain = sl * sl / wl + sr * sr / wr - parent_term
                if gain > best_gain or (gain == best_gain and f < best_f):
                    thr = 0.5 * (v0 + v1)
                    if thr >= v1:
                        thr = v0
                    best_gain = gain
                    best_f = f
                    best_thr = thr
        if best_f < 0:
            continue

        # partition idx[start:end] so that rows going left come first
        lo = start
        hi = end - 1
        while lo <= hi:
            if X[idx[lo], best_f] <= best_thr:
                lo += 1
            else:
                tmp = idx[lo]
                idx[lo] = idx[hi]
                idx[hi] = tmp
                hi -= 1
        feature[node] = best_f
        threshold[node] = best_thr
        left[node] = n_nodes
        right[node] = n_nodes + 1
        if best_gain > 0:
            importance[best_f] += best_gain
        stack[top, 0] = n_nodes + 1
        stack[top, 1] = lo
        stack[top, 2] = end
        stack[top, 3] = depth + 1
        stack[top + 1, 0] = n_nodes
        stack[top + 1, 1] = start
        stack[top + 1, 2] = lo
        stack[top + 1, 3] = depth + 1
        top += 2
        n_nodes += 2
    return (feature[:n_nodes], threshold[:n_nodes], left[:n_nodes], right[:n_nodes],
            value[:n_nodes], importance)


@numba.njit(cache=True)
def _predict(feature, threshold, left, right, value, X):
    out = np.empty(X.shape[0])
    for r in range(X.shape[0]):
        node = 0
        while feature[node] >= 0:
            if X[r, feature[node]] <= threshold[node]:
                node = left[node]
            else:
                node = right[node]
        out[r] = value[node]
    return out


@dataclass
class RegressionTree:
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    importance: np.ndarray  # raw weighted-SSE decrease per feature

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = np.ascontiguousarray(X, dtype=np.float64)
        return _predict(self.feature, self.threshold, self.left, self.right, self.value, X)

    def to_dict(self) -> dict:
        def node(i):
            if self.feature[i] < 0:
                return {"leaf_value": float(self.value[i])}
            return {"split_feature": int(self.feature[i]), "threshold": float(self.threshold[i]),
                    "left": node(self.left[i]), "right": node(self.right[i])}
        return {"root": node(0), "importance": [float(v) for v in self.importance]}

    @classmethod
    def from_dict(cls, doc: dict) -> "RegressionTree":
        feature, threshold, left, right, value = [], [], [], [], []

        def add(nd):
            i = len(feature)
            feature.append(-1)
            threshold.append(0.0)
            left.append(-1)
            right.append(-1)
            value.append(0.0)
            if "leaf_value" in nd:
                value[i] = float(nd["leaf_value"])
            else:
                feature[i] = int(nd["split_feature"])
                threshold[i] = float(nd["threshold"])
                left[i] = add(nd["left"])
                right[i] = add(nd["right"])
            return i

        add(doc["root"])
        return cls(np.array(feature, dtype=np.int64), np.array(threshold), np.array(left, dtype=np.int64),
                   np.array(right, dtype=np.int64), np.array(value),
                   np.array(doc["importance"], dtype=float))


def fit_tree(X: np.ndarray, y: np.ndarray, weights: np.ndarray | None = None, *,
             mtry: int | None = None, min_leaf: float = 1.0, max_depth: int | None = None,
             rng: np.random.Generator | None = None) -> RegressionTree:
    """Grow one tree; rows with zero weight are ignored.

    With ``mtry < p`` each node tries features in an order drawn from ``rng``
    until ``mtry`` non-constant ones have been scanned.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n, p = X.shape
    w = np.ones(n) if weights is None else np.asarray(weights, dtype=np.float64)
    keep = w > 0
    Xk = np.ascontiguousarray(X[keep])
    yk, wk = y[keep], w[keep]
    mtry = p if mtry is None else int(min(max(mtry, 1), p))
    if mtry < p:
        if rng is None:
            raise ValueError("feature subsampling requires an rng")
        keys = rng.random((2 * len(yk) + 1, p))
    else:
        keys = np.zeros((1, p))
    depth = -1 if max_depth is None else int(max_depth)
    feature, threshold, left, right, value, importance = _build(
        Xk, yk, wk, mtry, float(min_leaf), depth, keys)
    # copy out of numba-owned slices so trees stay independent
    return RegressionTree(feature.copy(), threshold.copy(), left.copy(), right.copy(),
                          value.copy(), importance)
