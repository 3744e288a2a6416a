"""Multiclass kernel SVM on top of the SMO solver.

One-vs-one by default: one binary problem per unordered class pair, combined
by majority vote. Vote ties fall back to the larger sum of signed decision
values, then to the lower class id. One-vs-rest stays available through
SVMParams.multiclass.
"""

from __future__ import annotations

import numpy as np

from ..errors import DegenerateInputError
from .config import SVMParams
from .kernels import kernel_matrix
from .smo import smo_solve

_FAMILY_KIND = {"svm_rbf": "rbf", "svm_poly": "poly", "svm_linear": "linear"}


def resolve_gamma(params: SVMParams, X: np.ndarray) -> float:
    """Explicit gamma, else 1 / (p * mean per-column variance)."""
    if params.gamma is not None:
        return params.gamma
    p = X.shape[1]
    mean_var = float(X.var(axis=0).mean())
    if mean_var <= 0.0:
        return 1.0 / p
    return 1.0 / (p * mean_var)


class KernelSVM:
    """fit/predict wrapper around per-pair (or per-class) SMO problems."""

    def __init__(self, family: str, params: SVMParams | None = None):
        if family not in _FAMILY_KIND:
            raise ValueError(f"not an SVM family: {family!r}")
        self.family = family
        self.kind = _FAMILY_KIND[family]
        self.params = params or SVMParams()

    def fit(self, X, y) -> "KernelSVM":
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.int64)
        self.classes_ = np.unique(y)
        if self.classes_.size < 2:
            raise DegenerateInputError("SVM needs at least 2 classes")
        self.X_train_ = X
        self.n_features_ = X.shape[1]
        self.gamma_ = resolve_gamma(self.params, X)
        gram = kernel_matrix(
            self.kind, X, X, self.gamma_, self.params.degree, self.params.coef0
        )
        self.problems_ = []
        self.n_warnings_ = 0
        if self.params.multiclass == "ovo":
            for ai in range(self.classes_.size):
                for bi in range(ai + 1, self.classes_.size):
                    a, b = self.classes_[ai], self.classes_[bi]
                    idx = np.flatnonzero((y == a) | (y == b))
                    ylocal = np.where(y[idx] == a, 1.0, -1.0)
                    res = smo_solve(
                        gram[np.ix_(idx, idx)],
                        ylocal,
                        C=self.params.C,
                        tol=self.params.tol,
                        max_passes=self.params.max_passes,
                    )
                    self.n_warnings_ += int(res.warning)
                    self.problems_.append((ai, bi, idx, res.alpha * ylocal, res.bias))
        else:
            for ci in range(self.classes_.size):
                ylocal = np.where(y == self.classes_[ci], 1.0, -1.0)
                res = smo_solve(
                    gram,
                    ylocal,
                    C=self.params.C,
                    tol=self.params.tol,
                    max_passes=self.params.max_passes,
                )
                self.n_warnings_ += int(res.warning)
                idx = np.arange(X.shape[0])
                self.problems_.append((ci, -1, idx, res.alpha * ylocal, res.bias))
        return self

    def _check_width(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.n_features_:
            raise ValueError(
                f"expected {self.n_features_} features, got {X.shape[1] if X.ndim == 2 else X.shape}"
            )
        return X

    def decision_values(self, X) -> np.ndarray:
        """Signed decision value of every binary problem, shape (q, n_problems)."""
        X = self._check_width(X)
        ktest = kernel_matrix(
            self.kind, X, self.X_train_, self.gamma_, self.params.degree, self.params.coef0
        )
        out = np.empty((X.shape[0], len(self.problems_)))
        for j, (_, _, idx, dual, bias) in enumerate(self.problems_):
            out[:, j] = ktest[:, idx] @ dual + bias
        return out

    def predict(self, X) -> np.ndarray:
        decisions = self.decision_values(np.asarray(X, dtype=np.float64))
        q = decisions.shape[0]
        nc = self.classes_.size
        if self.params.multiclass == "ovr":
            return self.classes_[np.argmax(decisions, axis=1)]
        votes = np.zeros((q, nc), dtype=np.int64)
        score = np.zeros((q, nc))
        for j, (ai, bi, _, _, _) in enumerate(self.problems_):
            d = decisions[:, j]
            toward_a = d >= 0  # zero decision favors the lower class id
            votes[toward_a, ai] += 1
            votes[~toward_a, bi] += 1
            score[:, ai] += d
            score[:, bi] -= d
        winners = np.empty(q, dtype=np.int64)
        ids = np.arange(nc)
        for r in range(q):
            order = np.lexsort((ids, -score[r], -votes[r]))
            winners[r] = order[0]
        return self.classes_[winners]
