"""CART classification tree with Gini impurity splits.

Candidate thresholds are midpoints between consecutive distinct sorted values;
split ties resolve to the lower feature index, then the lower threshold (scan
order guarantees both). Rows with value <= threshold go left.
"""

from __future__ import annotations

import numpy as np
from numba import njit

from ..errors import DegenerateInputError
from .config import TreeParams


@njit(cache=True)
def _build(X, y, n_classes, min_samples_split, max_depth):
    m = X.shape[0]
    p = X.shape[1]
    max_nodes = 2 * m + 1
    feature = np.full(max_nodes, -1, dtype=np.int64)
    threshold = np.zeros(max_nodes)
    left = np.full(max_nodes, -1, dtype=np.int64)
    right = np.full(max_nodes, -1, dtype=np.int64)
    pred = np.zeros(max_nodes, dtype=np.int64)

    idx = np.arange(m)
    scratch = np.empty(m, dtype=np.int64)
    stack_lo = np.empty(max_nodes, dtype=np.int64)
    stack_hi = np.empty(max_nodes, dtype=np.int64)
    stack_node = np.empty(max_nodes, dtype=np.int64)
    stack_depth = np.empty(max_nodes, dtype=np.int64)
    stack_lo[0] = 0
    stack_hi[0] = m
    stack_node[0] = 0
    stack_depth[0] = 0
    top = 1
    n_nodes = 1

    counts = np.zeros(n_classes, dtype=np.int64)
    left_counts = np.zeros(n_classes, dtype=np.int64)
    right_counts = np.zeros(n_classes, dtype=np.int64)

    while top > 0:
        top -= 1
        lo = stack_lo[top]
        hi = stack_hi[top]
        node = stack_node[top]
        depth = stack_depth[top]
        cnt = hi - lo

        counts[:] = 0
        for t in range(lo, hi):
            counts[y[idx[t]]] += 1
        best_c = 0
        for c in range(1, n_classes):
            if counts[c] > counts[best_c]:
                best_c = c
        pred[node] = best_c

        if counts[best_c] == cnt or cnt < min_samples_split:
            continue
        if max_depth >= 0 and depth >= max_depth:
            continue

        parent_sq = 0.0
        for c in range(n_classes):
            parent_sq += counts[c] * counts[c]
        parent_gini = 1.0 - parent_sq / (cnt * cnt)

        best_dec = -1.0
        best_f = -1
        best_thr = 0.0
        vals = np.empty(cnt)
        for f in range(p):
            for t in range(cnt):
                vals[t] = X[idx[lo + t], f]
            order = np.argsort(vals)
            left_counts[:] = 0
            for c in range(n_classes):
                right_counts[c] = counts[c]
            left_sq = 0.0
            right_sq = parent_sq
            for t in range(cnt - 1):
                c = y[idx[lo + order[t]]]
                left_sq += 2.0 * left_counts[c] + 1.0
                left_counts[c] += 1
                right_sq += 1.0 - 2.0 * right_counts[c]
                right_counts[c] -= 1
                v_here = vals[order[t]]
                v_next = vals[order[t + 1]]
                if v_next <= v_here:
                    continue
                nl = t + 1
                nr = cnt - nl
                gini_l = 1.0 - left_sq / (nl * nl)
                gini_r = 1.0 - right_sq / (nr * nr)
                dec = parent_gini - (nl * gini_l + nr * gini_r) / cnt
                if dec > best_dec:
                    thr = 0.5 * (v_here + v_next)
                    if thr >= v_next:  # midpoint rounded up to the right value
                        thr = v_here
                    best_dec = dec
                    best_f = f
                    best_thr = thr

        if best_f < 0:
            continue  # no distinct values anywhere: leaf

        # Stable partition of idx[lo:hi] around the chosen split.
        nl = 0
        nr = 0
        for t in range(lo, hi):
            if X[idx[t], best_f] <= best_thr:
                idx[lo + nl] = idx[t]
                nl += 1
            else:
                scratch[nr] = idx[t]
                nr += 1
        for t in range(nr):
            idx[lo + nl + t] = scratch[t]

        feature[node] = best_f
        threshold[node] = best_thr
        left_id = n_nodes
        right_id = n_nodes + 1
        n_nodes += 2
        left[node] = left_id
        right[node] = right_id
        # Right pushed first so the left child is processed (and numbered) next.
        stack_lo[top] = lo + nl
        stack_hi[top] = hi
        stack_node[top] = right_id
        stack_depth[top] = depth + 1
        top += 1
        stack_lo[top] = lo
        stack_hi[top] = lo + nl
        stack_node[top] = left_id
        stack_depth[top] = depth + 1
        top += 1

    return feature[:n_nodes], threshold[:n_nodes], left[:n_nodes], right[:n_nodes], pred[:n_nodes]


@njit(cache=True)
def _walk(feature, threshold, left, right, pred, X):
    out = np.empty(X.shape[0], dtype=np.int64)
    for i in range(X.shape[0]):
        node = 0
        while feature[node] >= 0:
            if X[i, feature[node]] <= threshold[node]:
                node = left[node]
            else:
                node = right[node]
        out[i] = pred[node]
    return out


class DecisionTree:
    """CART classifier; leaves predict the majority class (ties: lower id)."""

    family = "dtree"

    def __init__(self, params: TreeParams | None = None):
        self.params = params or TreeParams()

    def fit(self, X, y) -> "DecisionTree":
        X = np.ascontiguousarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.int64)
        self.classes_, compact = np.unique(y, return_inverse=True)
        if self.classes_.size < 2:
            raise DegenerateInputError("decision tree needs at least 2 classes")
        self.n_features_ = X.shape[1]
        depth = -1 if self.params.max_depth is None else self.params.max_depth
        (
            self.feature_,
            self.threshold_,
            self.left_,
            self.right_,
            self.pred_,
        ) = _build(X, compact.astype(np.int64), self.classes_.size,
                   self.params.min_samples_split, depth)
        return self

    def predict(self, X) -> np.ndarray:
        X = np.ascontiguousarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.n_features_:
            raise ValueError(f"expected {self.n_features_} features")
        leaf_pred = _walk(self.feature_, self.threshold_, self.left_, self.right_, self.pred_, X)
        return self.classes_[leaf_pred]

    @property
    def n_nodes(self) -> int:
        return int(self.feature_.size)

    @property
    def depth(self) -> int:
        depths = np.zeros(self.feature_.size, dtype=np.int64)
        out = 0
        for node in range(self.feature_.size):
            if self.feature_[node] >= 0:
                for child in (self.left_[node], self.right_[node]):
                    depths[child] = depths[node] + 1
            else:
                out = max(out, int(depths[node]))
        return out
