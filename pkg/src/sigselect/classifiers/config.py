"""Classifier family configuration."""

from __future__ import annotations

from dataclasses import dataclass, field

FAMILIES = ("svm_rbf", "svm_poly", "svm_linear", "knn", "dtree", "lda", "gnb")


@dataclass(frozen=True)
class SVMParams:
    """Soft-margin kernel SVM settings shared by the three kernel families.

    gamma=None resolves at fit time to 1 / (p * mean feature variance).
    """

    C: float = 1.0
    tol: float = 1e-3
    max_passes: int = 200
    gamma: float | None = None
    degree: int = 3
    coef0: float = 0.0
    multiclass: str = "ovo"

    def __post_init__(self) -> None:
        if self.C <= 0:
            raise ValueError("C must be > 0")
        if self.tol <= 0:
            raise ValueError("tol must be > 0")
        if self.max_passes < 1:
            raise ValueError("max_passes must be >= 1")
        if self.degree < 1:
            raise ValueError("degree must be >= 1")
        if self.gamma is not None and self.gamma <= 0:
            raise ValueError("gamma must be > 0")
        if self.multiclass not in ("ovo", "ovr"):
            raise ValueError("multiclass must be 'ovo' or 'ovr'")


@dataclass(frozen=True)
class KNNParams:
    k: int = 5  # neighbors; distance metric is fixed Euclidean

    def __post_init__(self) -> None:
        if self.k < 1:
            raise ValueError("k must be >= 1")


@dataclass(frozen=True)
class TreeParams:
    min_samples_split: int = 2
    max_depth: int | None = None  # None: grow until pure / unsplittable

    def __post_init__(self) -> None:
        if self.min_samples_split < 2:
            raise ValueError("min_samples_split must be >= 2")
        if self.max_depth is not None and self.max_depth < 1:
            raise ValueError("max_depth must be >= 1 or None")


@dataclass(frozen=True)
class GNBParams:
    var_smoothing: float = 1e-9  # scaled by the max per-feature variance at fit

    def __post_init__(self) -> None:
        if self.var_smoothing < 0:
            raise ValueError("var_smoothing must be >= 0")


@dataclass(frozen=True)
class LDAParams:
    svd_tol: float = 1e-9  # singular values below svd_tol * s_max are dropped

    def __post_init__(self) -> None:
        if self.svd_tol < 0:
            raise ValueError("svd_tol must be >= 0")


@dataclass(frozen=True)
class ClassifierConfig:
    """Family choice plus per-family hyperparameters."""

    family: str
    svm: SVMParams = field(default_factory=SVMParams)
    knn: KNNParams = field(default_factory=KNNParams)
    dtree: TreeParams = field(default_factory=TreeParams)
    gnb: GNBParams = field(default_factory=GNBParams)
    lda: LDAParams = field(default_factory=LDAParams)

    def __post_init__(self) -> None:
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}; expected one of {FAMILIES}")
