"""Feature selection and classical-classifier benchmarking for signature embeddings."""

from .data_model import (
    EmbeddingDataset,
    FeatureMask,
    ValidationReport,
    read_embedding_csv,
    read_embedding_file,
    validate_dataset,
    write_embedding_csv,
    write_embedding_file,
)
from .errors import (
    DataError,
    DegenerateInputError,
    DomainError,
    FormatError,
    SigSelectError,
    TruncationError,
)
from .selectors import (
    FeatureScores,
    MIConfig,
    NCAConfig,
    chi2_scores,
    mi_scores,
    nca_fit,
    nca_fit_detailed,
    nca_objective_gradient,
    select_top_k,
)
from .synthdata import SynthConfig, generate_synthetic_dataset

__version__ = "0.1.0"
