"""Feature relevance scoring: Chi2, mutual information, and NCA weights.

All three scorers are pure functions of (features, labels). Chi2 requires raw
non-negative features; MI and NCA expect the standardized matrix the caller
fits elsewhere in the pipeline. ``select_top_k`` turns any score vector into
a column mask.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .data_model import FeatureMask
from .errors import DataError, DegenerateInputError, DomainError

_SCORE_METHODS = ("chi2", "mi", "nca")

# Pairwise |x_ir - x_jr| tensors are stored in fixed-width column chunks; the
# reduction over chunks runs in ascending chunk order with float64 accumulators,
# so results do not depend on any parallel schedule.
_NCA_CHUNK_COLS = 256
# Below this many tensor elements the chunks are kept in float64 (toy and test
# sizes); above it float32 halves memory and bandwidth.
_NCA_F64_MAX_ELEMENTS = 2**25


@dataclass(frozen=True)
class FeatureScores:
    """Per-feature relevance values produced by one scoring method."""

    scores: np.ndarray
    method: str

    def __post_init__(self) -> None:
        scores = np.ascontiguousarray(self.scores, dtype=np.float64)
        object.__setattr__(self, "scores", scores)
        if self.method not in _SCORE_METHODS:
            raise ValueError(f"unknown scoring method {self.method!r}")
        if scores.ndim != 1 or scores.size == 0:
            raise ValueError("scores must be a non-empty vector")
        if not np.isfinite(scores).all():
            raise DataError(f"non-finite {self.method} score")
        if self.method in ("chi2", "mi") and scores.min() < 0:
            raise DataError(f"{self.method} scores must be non-negative")

    @property
    def n_features(self) -> int:
        return int(self.scores.size)


@dataclass(frozen=True)
class MIConfig:
    """Discretization settings for the mutual information estimator."""

    bins: int = 16
    binning: str = "quantile"

    def __post_init__(self) -> None:
        if self.bins < 2:
            raise ValueError("bins must be >= 2")
        if self.binning != "quantile":
            raise ValueError("only quantile binning is implemented")


@dataclass(frozen=True)
class NCAConfig:
    """Hyperparameters for the NCA weight learner.

    ``lam`` is the L2 weight-penalty coefficient; None means 1/n_train,
    resolved at fit time. The optimizer itself is deterministic; ``seed`` is
    reserved for stochastic variants and currently unused.
    """

    sigma: float = 1.0
    lam: float | None = None
    max_iters: int = 100
    initial_step: float = 1e-2
    objective_tol: float = 1e-6
    seed: int = 0

    def __post_init__(self) -> None:
        if self.sigma <= 0:
            raise ValueError("sigma must be > 0")
        if self.lam is not None and self.lam < 0:
            raise ValueError("lam must be >= 0")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.initial_step <= 0:
            raise ValueError("initial_step must be > 0")


@dataclass
class NCAFitResult:
    """Fitted NCA weights plus optimizer diagnostics."""

    scores: FeatureScores
    weights: np.ndarray
    objective_trace: np.ndarray  # accepted objective values, initial point first
    n_iterations: int
    n_accepted: int
    converged: bool


def _as_matrix_and_labels(features, labels) -> tuple[np.ndarray, np.ndarray]:
    X = np.asarray(features, dtype=np.float64)
    y = np.asarray(labels)
    if X.ndim != 2:
        raise ValueError("features must be a 2-d matrix")
    if y.shape != (X.shape[0],):
        raise ValueError("labels must be a length-n vector")
    return X, y.astype(np.int64)


def chi2_scores(features, labels) -> FeatureScores:
    """Chi2 statistic of class-conditional feature mass per column.

    For column r with per-class observed mass ``O_cr`` (sum of the column over
    rows of class c) and expectation ``E_cr = (n_c / n) * total_r`` under class
    independence, the score is ``sum_c (O_cr - E_cr)^2 / E_cr``. Columns whose
    total mass is zero score 0.
    """
    X, y = _as_matrix_and_labels(features, labels)
    negative_cols = np.flatnonzero((X < 0).any(axis=0))
    if negative_cols.size:
        raise DomainError(
            f"chi2 requires non-negative features; column {int(negative_cols[0])} "
            "contains negative values"
        )
    classes, compact = np.unique(y, return_inverse=True)
    if classes.size < 2:
        raise DegenerateInputError("chi2 needs at least 2 classes present")
    n = X.shape[0]
    onehot = np.zeros((n, classes.size))
    onehot[np.arange(n), compact] = 1.0
    observed = onehot.T @ X
    totals = X.sum(axis=0)
    class_prob = onehot.mean(axis=0)
    expected = np.outer(class_prob, totals)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(expected > 0, (observed - expected) ** 2 / expected, 0.0)
    scores = terms.sum(axis=0)
    scores[totals == 0] = 0.0
    return FeatureScores(scores, "chi2")


def _quantile_bin_column(col: np.ndarray, edges: np.ndarray) -> np.ndarray:
    # Inner edges only; duplicates collapse so constant stretches share a bin.
    inner = np.unique(edges[1:-1])
    return np.searchsorted(inner, col, side="right")


def _plugin_mi(joint: np.ndarray) -> float:
    """Plug-in mutual information (natural log) of a 2-d contingency table."""
    total = joint.sum()
    if total == 0:
        return 0.0
    pj = joint / total
    row = pj.sum(axis=1, keepdims=True)
    colm = pj.sum(axis=0, keepdims=True)
    nz = pj > 0
    mi = float(np.sum(pj[nz] * np.log(pj[nz] / (row @ colm)[nz])))
    return max(mi, 0.0)


def mi_scores(features, labels, config: MIConfig | None = None) -> FeatureScores:
    """Mutual information between each quantile-binned column and the labels.

    Each column is discretized by its own quantile edges (duplicates
    collapsed); the score is the plug-in MI of the empirical (bin, class)
    joint, with the convention 0*log(0) = 0.
    """
    config = config or MIConfig()
    X, y = _as_matrix_and_labels(features, labels)
    classes, compact = np.unique(y, return_inverse=True)
    if classes.size < 2:
        raise DegenerateInputError("mutual information needs at least 2 classes present")
    nc = classes.size
    qs = np.linspace(0.0, 1.0, config.bins + 1)
    all_edges = np.quantile(X, qs, axis=0)
    scores = np.empty(X.shape[1])
    for j in range(X.shape[1]):
        bin_idx = _quantile_bin_column(X[:, j], all_edges[:, j])
        n_bins = int(bin_idx.max()) + 1
        joint = np.bincount(bin_idx * nc + compact, minlength=n_bins * nc)
        scores[j] = _plugin_mi(joint.reshape(n_bins, nc).astype(np.float64))
    return FeatureScores(scores, "mi")


class _NCAWorkspace:
    """Precomputed per-pair |x_ir - x_jr| tensor and softmax machinery.

    Only the upper triangle (i < j) is stored; distances and gradients use the
    symmetry of the pair tensor. Chunks are consumed in ascending order with
    float64 accumulation across chunks.
    """

    def __init__(self, X: np.ndarray, labels: np.ndarray, sigma: float, lam: float):
        self.n, self.p = X.shape
        self.sigma = sigma
        self.lam = lam
        self.n_pairs = self.n * (self.n - 1) // 2
        dtype = np.float64 if self.n_pairs * self.p <= _NCA_F64_MAX_ELEMENTS else np.float32
        self.dtype = dtype
        self.iu = np.triu_indices(self.n, 1)
        self.same = labels[:, None] == labels[None, :]
        row_start = np.zeros(self.n, dtype=np.int64)
        s = 0
        for i in range(self.n - 1):
            row_start[i] = s
            s += self.n - 1 - i
        self.chunks: list[np.ndarray] = []
        self.col_slices: list[slice] = []
        for c0 in range(0, self.p, _NCA_CHUNK_COLS):
            cols = slice(c0, min(c0 + _NCA_CHUNK_COLS, self.p))
            Xc = np.ascontiguousarray(X[:, cols], dtype=dtype)
            D = np.empty((self.n_pairs, Xc.shape[1]), dtype=dtype)
            for i in range(self.n - 1):
                block = D[row_start[i] : row_start[i] + self.n - 1 - i]
                np.subtract(Xc[i + 1 :], Xc[i], out=block)
                np.abs(block, out=block)
            self.chunks.append(D)
            self.col_slices.append(cols)

    def pair_distances(self, w2: np.ndarray) -> np.ndarray:
        d = np.zeros(self.n_pairs)
        for D, cols in zip(self.chunks, self.col_slices):
            d += D @ w2[cols].astype(self.dtype)
        return d

    def neighbor_probs(self, d_cond: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Row-normalized softmax of negative distances; self excluded.

        Shifting each row by its off-diagonal minimum keeps exp() in range
        regardless of how large the weighted distances get.
        """
        M = np.full((self.n, self.n), np.inf)
        M[self.iu] = d_cond
        M.T[self.iu] = d_cond
        row_min = M.min(axis=1)
        P = np.exp((row_min[:, None] - M) / self.sigma)
        P /= P.sum(axis=1, keepdims=True)
        p_i = np.where(self.same, P, 0.0).sum(axis=1)
        return P, p_i

    def objective(self, w: np.ndarray) -> tuple[float, np.ndarray, np.ndarray]:
        P, p_i = self.neighbor_probs(self.pair_distances(w * w))
        value = float(p_i.mean() - self.lam * np.dot(w, w))
        return value, P, p_i

    def gradient(self, w: np.ndarray, P: np.ndarray, p_i: np.ndarray) -> np.ndarray:
        A = (p_i[:, None] - self.same) * P
        pair_coef = (A + A.T)[self.iu].astype(self.dtype)
        g = np.empty(self.p)
        for D, cols in zip(self.chunks, self.col_slices):
            g[cols] = pair_coef @ D
        g *= 2.0 * w / (self.sigma * self.n)
        g -= 2.0 * self.lam * w
        return g


def nca_objective_gradient(
    features, labels, weights, sigma: float = 1.0, lam: float = 0.0
) -> tuple[float, np.ndarray]:
    """Objective value and analytic gradient at a given weight vector.

    Reference entry point used by the finite-difference checks; shares the
    implementation with nca_fit.
    """
    X, y = _as_matrix_and_labels(features, labels)
    w = np.asarray(weights, dtype=np.float64)
    ws = _NCAWorkspace(X, y, sigma, lam)
    value, P, p_i = ws.objective(w)
    return value, ws.gradient(w, P, p_i)


def nca_fit_detailed(features, labels, config: NCAConfig | None = None) -> NCAFitResult:
    """Learn per-feature NCA weights by adaptive-step gradient ascent.

    The objective is the mean stochastic leave-one-out same-class neighbor
    probability minus an L2 weight penalty; distances are weighted per-feature
    L1 with squared weights and an exponential kernel of width ``sigma``.
    Starting from all-ones weights, each iteration proposes ``w + step * grad``:
    improvements are accepted and double the step, anything else is rejected
    and halves it. Stops after ``max_iters`` proposals or when the proposed
    objective change falls below ``objective_tol``.
    """
    config = config or NCAConfig()
    X, y = _as_matrix_and_labels(features, labels)
    n, p = X.shape
    if n < 2:
        raise DegenerateInputError("NCA needs at least 2 rows")
    if np.unique(y).size < 2:
        raise DegenerateInputError("NCA needs at least 2 classes present")
    lam = config.lam if config.lam is not None else 1.0 / n

    ws = _NCAWorkspace(X, y, config.sigma, lam)
    w = np.ones(p)
    value, P, p_i = ws.objective(w)
    trace = [value]
    step = config.initial_step
    grad: np.ndarray | None = None
    accepted = 0
    converged = False
    iterations = 0
    for iterations in range(1, config.max_iters + 1):
        if grad is None:
            grad = ws.gradient(w, P, p_i)
        candidate = w + step * grad
        cand_value, cand_P, cand_p_i = ws.objective(candidate)
        delta = cand_value - value
        if cand_value > value:
            w, value, P, p_i = candidate, cand_value, cand_P, cand_p_i
            trace.append(value)
            accepted += 1
            step *= 2.0
            grad = None
        else:
            step *= 0.5
        if abs(delta) < config.objective_tol:
            converged = True
            break
        if step < 1e-20:
            break
    return NCAFitResult(
        scores=FeatureScores(w * w, "nca"),
        weights=w,
        objective_trace=np.asarray(trace),
        n_iterations=iterations,
        n_accepted=accepted,
        converged=converged,
    )


def nca_fit(features, labels, config: NCAConfig | None = None) -> FeatureScores:
    """NCA relevance scores (squared learned weights). See nca_fit_detailed."""
    return nca_fit_detailed(features, labels, config).scores


def select_top_k(scores: FeatureScores, k: int) -> FeatureMask:
    """Mask of the k highest-scoring columns; ties go to the lower index."""
    p = scores.n_features
    if not 1 <= k <= p:
        raise ValueError(f"k must be in [1, {p}], got {k}")
    order = np.argsort(-scores.scores, kind="stable")[:k]
    return FeatureMask(np.sort(order), p)


def save_mask(mask: FeatureMask, path: str | Path) -> None:
    """One selected index per line, ascending."""
    Path(path).write_text("".join(f"{i}\n" for i in mask.selected))


def load_mask(path: str | Path, n_features: int) -> FeatureMask:
    lines = [ln for ln in Path(path).read_text().splitlines() if ln.strip()]
    return FeatureMask(np.array([int(ln) for ln in lines], dtype=np.int64), n_features)
