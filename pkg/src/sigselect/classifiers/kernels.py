"""Kernel functions for the SVM families."""

from __future__ import annotations

import numpy as np

KERNEL_KINDS = ("rbf", "poly", "linear")


def kernel_eval(
    kind: str,
    x: np.ndarray,
    z: np.ndarray,
    gamma: float = 1.0,
    degree: int = 3,
    coef0: float = 0.0,
) -> float:
    """Evaluate one kernel value between two vectors.

    rbf: exp(-gamma * ||x - z||^2); poly: (gamma * <x, z> + coef0)^degree;
    linear: <x, z>.
    """
    x = np.asarray(x, dtype=np.float64)
    z = np.asarray(z, dtype=np.float64)
    if x.shape != z.shape or x.ndim != 1:
        raise ValueError("kernel_eval expects two equal-length vectors")
    if kind == "linear":
        return float(np.dot(x, z))
    if kind == "poly":
        return float((gamma * np.dot(x, z) + coef0) ** degree)
    if kind == "rbf":
        diff = x - z
        return float(np.exp(-gamma * np.dot(diff, diff)))
    raise ValueError(f"unknown kernel kind {kind!r}")


def kernel_matrix(
    kind: str,
    A: np.ndarray,
    B: np.ndarray,
    gamma: float = 1.0,
    degree: int = 3,
    coef0: float = 0.0,
) -> np.ndarray:
    """Kernel values between all rows of A and all rows of B."""
    A = np.asarray(A, dtype=np.float64)
    B = np.asarray(B, dtype=np.float64)
    if kind == "linear":
        return A @ B.T
    if kind == "poly":
        return (gamma * (A @ B.T) + coef0) ** degree
    if kind == "rbf":
        sq = (A * A).sum(axis=1)[:, None] + (B * B).sum(axis=1)[None, :] - 2.0 * (A @ B.T)
        np.maximum(sq, 0.0, out=sq)
        return np.exp(-gamma * sq)
    raise ValueError(f"unknown kernel kind {kind!r}")
