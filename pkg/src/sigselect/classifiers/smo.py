"""Sequential minimal optimization for the soft-margin SVM dual.

Working-set selection is the deterministic maximal-violating-pair rule with a
second-order refinement: the first index is the worst violator among points
whose alpha*y can increase, the second maximizes the exact pair gain among
points whose alpha*y can decrease (ties keep the lower index). Iteration stops
when the feasible-threshold gap closes below 2*tol, which bounds the post-fit
KKT violation by tol under the returned bias; the dual objective increases at
every accepted pair update.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from ..errors import DegenerateInputError

# Curvature floor for flat pair directions (rank-deficient kernels).
_TAU = 1e-12
# Alphas within this distance of a bound snap to it exactly, so the movable
# sets never contain points with sub-float-resolution room.
_SNAP = 1e-12


@dataclass
class SMOResult:
    alpha: np.ndarray
    bias: float
    n_updates: int
    warning: bool  # hit the update cap or stalled with a KKT violation left
    objective: float
    objective_trace: np.ndarray | None = None
    kkt_violation: float = 0.0


@njit(cache=True)
def _threshold_window(y, alpha, F, C):
    """(lo, hi): feasible bias window implied by the bound pattern.

    lo comes from points whose alpha*y can still increase, hi from points
    whose alpha*y can decrease; lo > hi measures how far the iterate is from
    satisfying the KKT conditions with any single threshold.
    """
    lo = -np.inf
    hi = np.inf
    i_lo = -1
    for t in range(y.shape[0]):
        v = y[t] - F[t]
        if (y[t] > 0.0 and alpha[t] < C) or (y[t] < 0.0 and alpha[t] > 0.0):
            if v > lo:
                lo = v
                i_lo = t
        if (y[t] > 0.0 and alpha[t] > 0.0) or (y[t] < 0.0 and alpha[t] < C):
            if v < hi:
                hi = v
    return lo, hi, i_lo


@njit(cache=True)
def _smo_core(K, y, C, tol, max_updates, trace):
    m = y.shape[0]
    alpha = np.zeros(m)
    F = np.zeros(m)  # bias-free decision values: F_t = sum_j alpha_j y_j K_tj
    obj = 0.0
    n_updates = 0
    hit_cap = False
    stalled = False

    while True:
        lo, hi, i = _threshold_window(y, alpha, F, C)
        if i < 0 or not np.isfinite(hi) or lo - hi < 2.0 * tol:
            break
        if n_updates >= max_updates:
            hit_cap = True
            break

        # Second choice: largest exact gain among down-movable partners.
        vi = lo
        kii = K[i, i]
        j = -1
        best_gain = 0.0
        for t in range(m):
            if not ((y[t] > 0.0 and alpha[t] > 0.0) or (y[t] < 0.0 and alpha[t] < C)):
                continue
            dv = vi - (y[t] - F[t])
            if dv <= 0.0:
                continue
            eta = kii + K[t, t] - 2.0 * K[i, t]
            if eta < _TAU:
                eta = _TAU
            gain = dv * dv / eta
            if gain > best_gain:
                best_gain = gain
                j = t
        if j < 0:
            stalled = True
            break

        yi = y[i]
        yj = y[j]
        ai_old = alpha[i]
        aj_old = alpha[j]
        s = yi * yj
        if s < 0.0:
            L = max(0.0, aj_old - ai_old)
            H = min(C, C + aj_old - ai_old)
        else:
            L = max(0.0, ai_old + aj_old - C)
            H = min(C, ai_old + aj_old)
        if L >= H:
            stalled = True
            break
        eta = K[i, i] + K[j, j] - 2.0 * K[i, j]
        slope = yj * ((F[i] - yi) - (F[j] - yj))  # dW/d(alpha_j) along the constraint
        if eta > _TAU:
            aj = aj_old + slope / eta
            if aj < L:
                aj = L
            elif aj > H:
                aj = H
        else:
            aj = L if slope * (L - aj_old) > slope * (H - aj_old) else H
        ai = ai_old + s * (aj_old - aj)
        snap = _SNAP * C
        if aj < snap:
            aj = 0.0
        elif aj > C - snap:
            aj = C
        if ai < snap:
            ai = 0.0
        elif ai > C - snap:
            ai = C
        dj = aj - aj_old
        di = ai - ai_old
        if dj == 0.0 and di == 0.0:
            stalled = True
            break

        obj += slope * dj - 0.5 * eta * dj * dj
        for t in range(m):
            F[t] += yi * di * K[i, t] + yj * dj * K[j, t]
        alpha[i] = ai
        alpha[j] = aj
        if trace.shape[0] > 0 and n_updates < trace.shape[0]:
            trace[n_updates] = obj
        n_updates += 1

    lo, hi, _ = _threshold_window(y, alpha, F, C)
    if np.isfinite(lo) and np.isfinite(hi):
        b = 0.5 * (lo + hi)
    elif np.isfinite(lo):
        b = lo
    elif np.isfinite(hi):
        b = hi
    else:
        b = 0.0
    return alpha, b, n_updates, hit_cap, stalled, obj


def dual_objective(gram: np.ndarray, y: np.ndarray, alpha: np.ndarray) -> float:
    """W(alpha) = sum(alpha) - 0.5 * (alpha*y)' K (alpha*y)."""
    ay = alpha * y
    return float(alpha.sum() - 0.5 * ay @ gram @ ay)


def kkt_violation(
    gram: np.ndarray, y: np.ndarray, alpha: np.ndarray, bias: float, C: float
) -> float:
    """Largest KKT violation of (alpha, bias) on the given problem."""
    f = gram @ (alpha * y) + bias
    r = y * f - 1.0
    bound_eps = 1e-10 * max(C, 1.0)
    viol = np.zeros_like(alpha)
    np.maximum(viol, np.where(alpha < C - bound_eps, -r, 0.0), out=viol)
    np.maximum(viol, np.where(alpha > bound_eps, r, 0.0), out=viol)
    return float(viol.max())


def smo_solve(
    gram: np.ndarray,
    y: np.ndarray,
    C: float = 1.0,
    tol: float = 1e-3,
    max_passes: int = 200,
    record_objective: bool = False,
) -> SMOResult:
    """Solve the binary soft-margin dual on a precomputed kernel matrix.

    `y` must hold +/-1 with both signs present; `max_passes` caps the work at
    max_passes * m pair updates. Returns the final iterate with a warning flag
    when the cap was hit or a KKT violation above `tol` remains (the objective
    never decreases, so the final iterate is also the best one).
    """
    K = np.ascontiguousarray(gram, dtype=np.float64)
    yv = np.asarray(y, dtype=np.float64)
    m = yv.shape[0]
    if K.shape != (m, m):
        raise ValueError(f"gram must be {m}x{m}, got {K.shape}")
    if not np.isin(yv, (-1.0, 1.0)).all():
        raise ValueError("labels must be +/-1")
    if (yv > 0).all() or (yv < 0).all():
        raise DegenerateInputError("SMO needs both labels present")
    scale = max(1.0, float(np.abs(K).max()))
    if np.abs(K - K.T).max() > 1e-8 * scale:
        raise ValueError("gram matrix is not symmetric within 1e-8")

    max_updates = int(max_passes) * m
    cap = max_updates if record_objective else 0
    trace = np.empty(cap, dtype=np.float64)
    alpha, b, n_updates, hit_cap, stalled, obj = _smo_core(
        K, yv, float(C), float(tol), max_updates, trace
    )
    viol = kkt_violation(K, yv, alpha, b, C)
    return SMOResult(
        alpha=alpha,
        bias=float(b),
        n_updates=int(n_updates),
        warning=bool(hit_cap or stalled or viol > tol),
        objective=float(obj),
        objective_trace=trace[: min(n_updates, cap)] if record_objective else None,
        kkt_violation=viol,
    )
