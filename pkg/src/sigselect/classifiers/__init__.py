"""Seven classifier families behind one fit/predict contract."""

from .config import (
    FAMILIES,
    ClassifierConfig,
    GNBParams,
    KNNParams,
    LDAParams,
    SVMParams,
    TreeParams,
)
from .kernels import kernel_eval, kernel_matrix
from .model import TrainedClassifier, fit_classifier, load_model, predict, save_model
from .simple import GaussianNaiveBayes, KNNClassifier, LinearDiscriminant
from .smo import SMOResult, dual_objective, kkt_violation, smo_solve
from .svm import KernelSVM, resolve_gamma
from .tree import DecisionTree
