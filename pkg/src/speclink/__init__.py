"""speclink: sparse dynamic Gaussian graphical models from time series.

Identify an inverse spectral density close to a prior under covariance
constraints, regularize toward the prior's support, and score candidate
edges by partial coherence.
"""

__version__ = "0.1.0"

from .core import (  # noqa: F401
    ArgumentError,
    CovarianceSequence,
    DomainError,
    FrequencyGrid,
    GenerationError,
    MatrixPseudoPolynomial,
    NumericalError,
    SpectralDensitySamples,
    SpeclinkError,
    StructureError,
    Support,
    evaluate,
    extract_lags,
    inverse_samples,
    norm_P,
    project_support,
)
