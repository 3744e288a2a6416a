"""KNN, linear discriminant, and Gaussian naive Bayes classifiers."""

from __future__ import annotations

import numpy as np

from ..errors import DegenerateInputError
from .config import GNBParams, KNNParams, LDAParams


def _validated(X, y) -> tuple[np.ndarray, np.ndarray]:
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if X.ndim != 2 or y.shape != (X.shape[0],):
        raise ValueError("need an n x p matrix and a length-n label vector")
    return X, y


class KNNClassifier:
    """Majority vote among the k nearest training rows (Euclidean distance).

    Distance ties keep the lower training-row index; vote ties pick the lower
    class id.
    """

    family = "knn"

    def __init__(self, params: KNNParams | None = None):
        self.params = params or KNNParams()

    def fit(self, X, y) -> "KNNClassifier":
        X, y = _validated(X, y)
        self.classes_, self._compact = np.unique(y, return_inverse=True)
        if self.classes_.size < 2:
            raise DegenerateInputError("KNN needs at least 2 classes")
        self.X_train_ = X
        self.n_features_ = X.shape[1]
        return self

    def predict(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.n_features_:
            raise ValueError(f"expected {self.n_features_} features")
        k = min(self.params.k, self.X_train_.shape[0])
        sq = (
            (X * X).sum(axis=1)[:, None]
            + (self.X_train_ * self.X_train_).sum(axis=1)[None, :]
            - 2.0 * X @ self.X_train_.T
        )
        out = np.empty(X.shape[0], dtype=np.int64)
        for i in range(X.shape[0]):
            nearest = np.argsort(sq[i], kind="stable")[:k]
            votes = np.bincount(self._compact[nearest], minlength=self.classes_.size)
            out[i] = np.argmax(votes)
        return self.classes_[out]


class LinearDiscriminant:
    """LDA with a pooled covariance inverted by SVD pseudo-inverse.

    Singular values below ``svd_tol * s_max`` are dropped, which keeps the
    discriminant defined when p exceeds the per-class sample counts.
    """

    family = "lda"

    def __init__(self, params: LDAParams | None = None):
        self.params = params or LDAParams()

    def fit(self, X, y) -> "LinearDiscriminant":
        X, y = _validated(X, y)
        self.classes_, compact = np.unique(y, return_inverse=True)
        nc = self.classes_.size
        if nc < 2:
            raise DegenerateInputError("LDA needs at least 2 classes")
        n, p = X.shape
        self.n_features_ = p
        means = np.empty((nc, p))
        scatter = np.zeros((p, p))
        counts = np.bincount(compact, minlength=nc)
        for c in range(nc):
            rows = X[compact == c]
            means[c] = rows.mean(axis=0)
            centered = rows - means[c]
            scatter += centered.T @ centered
        pooled = scatter / max(n - nc, 1)

        U, s, Vt = np.linalg.svd(pooled)
        if s[0] > 0:
            inv_s = np.where(s > self.params.svd_tol * s[0], 1.0 / s, 0.0)
        else:
            inv_s = np.zeros_like(s)
        pinv = (Vt.T * inv_s) @ U.T

        self.means_ = means
        self.coef_ = means @ pinv.T  # row c = pinv @ mu_c  (pinv symmetric up to fp noise)
        self.intercept_ = -0.5 * np.einsum("cp,cp->c", means, self.coef_) + np.log(counts / n)
        return self

    def decision_scores(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.n_features_:
            raise ValueError(f"expected {self.n_features_} features")
        return X @ self.coef_.T + self.intercept_

    def predict(self, X) -> np.ndarray:
        return self.classes_[np.argmax(self.decision_scores(X), axis=1)]


class GaussianNaiveBayes:
    """Per-class independent Gaussians with variance smoothing.

    The smoothing constant is ``var_smoothing`` times the largest per-feature
    variance of the training matrix, guarding zero-variance features.
    """

    family = "gnb"

    def __init__(self, params: GNBParams | None = None):
        self.params = params or GNBParams()

    def fit(self, X, y) -> "GaussianNaiveBayes":
        X, y = _validated(X, y)
        self.classes_, compact = np.unique(y, return_inverse=True)
        nc = self.classes_.size
        if nc < 2:
            raise DegenerateInputError("naive Bayes needs at least 2 classes")
        n, p = X.shape
        self.n_features_ = p
        base_var = float(X.var(axis=0).max())
        eps = self.params.var_smoothing * (base_var if base_var > 0 else 1.0)
        self.theta_ = np.empty((nc, p))
        self.var_ = np.empty((nc, p))
        counts = np.bincount(compact, minlength=nc)
        for c in range(nc):
            rows = X[compact == c]
            self.theta_[c] = rows.mean(axis=0)
            self.var_[c] = rows.var(axis=0) + eps
        self.log_prior_ = np.log(counts / n)
        return self

    def log_likelihood(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.n_features_:
            raise ValueError(f"expected {self.n_features_} features")
        scores = np.empty((X.shape[0], self.classes_.size))
        for c in range(self.classes_.size):
            diff = X - self.theta_[c]
            scores[:, c] = self.log_prior_[c] - 0.5 * (
                np.log(2.0 * np.pi * self.var_[c]) + diff**2 / self.var_[c]
            ).sum(axis=1)
        return scores

    def predict(self, X) -> np.ndarray:
        return self.classes_[np.argmax(self.log_likelihood(X), axis=1)]
