"""Uniform fit/predict entry points and model serialization."""

from __future__ import annotations

import pickle
import struct
from pathlib import Path

import numpy as np

from ..errors import DataError, DegenerateInputError, FormatError
from .config import FAMILIES, ClassifierConfig
from .simple import GaussianNaiveBayes, KNNClassifier, LinearDiscriminant
from .svm import KernelSVM
from .tree import DecisionTree

# Versioned binary blob: magic + version + pickle payload. The format is
# documented but not interchange-stable across package versions.
_MODEL_MAGIC = b"SGVM"
_MODEL_VERSION = 1

TrainedClassifier = KernelSVM | KNNClassifier | DecisionTree | LinearDiscriminant | GaussianNaiveBayes


def fit_classifier(config: ClassifierConfig, features, labels) -> TrainedClassifier:
    """Train one classifier of the configured family."""
    X = np.asarray(features, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    if X.ndim != 2 or y.shape != (X.shape[0],):
        raise ValueError("need an n x p matrix and a length-n label vector")
    if X.shape[0] < 2:
        raise DegenerateInputError("need at least 2 training rows")
    if not np.isfinite(X).all():
        raise DataError("training features must be finite")
    if np.unique(y).size < 2:
        raise DegenerateInputError("need at least 2 classes")

    family = config.family
    if family in ("svm_rbf", "svm_poly", "svm_linear"):
        model = KernelSVM(family, config.svm)
    elif family == "knn":
        model = KNNClassifier(config.knn)
    elif family == "dtree":
        model = DecisionTree(config.dtree)
    elif family == "lda":
        model = LinearDiscriminant(config.lda)
    elif family == "gnb":
        model = GaussianNaiveBayes(config.gnb)
    else:  # unreachable: config validates family
        raise ValueError(f"unknown family {family!r}")
    return model.fit(X, y)


def predict(model: TrainedClassifier, features) -> np.ndarray:
    """Predict class ids; raises ValueError on a feature-width mismatch."""
    return model.predict(np.asarray(features, dtype=np.float64))


def save_model(model: TrainedClassifier, path: str | Path) -> None:
    if model.family not in FAMILIES:
        raise ValueError(f"refusing to serialize unknown family {model.family!r}")
    payload = pickle.dumps(model, protocol=4)
    Path(path).write_bytes(_MODEL_MAGIC + struct.pack("<H", _MODEL_VERSION) + payload)


def load_model(path: str | Path) -> TrainedClassifier:
    data = Path(path).read_bytes()
    if len(data) < 6 or data[:4] != _MODEL_MAGIC:
        raise FormatError("not a sigselect model file")
    (version,) = struct.unpack_from("<H", data, 4)
    if version != _MODEL_VERSION:
        raise FormatError(f"unsupported model version {version}")
    return pickle.loads(data[6:])
