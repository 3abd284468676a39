"""Neyman smooth tests for normality of the errors in one-way ANOVA models."""

from .basis import BasisConstants, OrthonormalBasis, compute_constants, pi_k
from .data_driven import SelectionResult, revised_cdf, revised_sf, select_K, test_data_driven
from .errors import (
    ConfigurationError,
    ContractError,
    DataFormatError,
    DegenerateDataError,
    DomainError,
    InsufficientDataError,
    NumericalError,
    SmoothTestError,
)
from .models import Dataset, FittedModel, ModelKind, fit, flatten_two_way, reduce_random_effects
from .smooth_test import (
    K_MAX,
    CovarianceMatrix,
    TestResult,
    omega_mixture_matrix,
    sigma_matrix,
    statistic,
    test_fixed_K,
)

__all__ = [
    "BasisConstants",
    "ConfigurationError",
    "ContractError",
    "CovarianceMatrix",
    "DataFormatError",
    "Dataset",
    "DegenerateDataError",
    "DomainError",
    "FittedModel",
    "InsufficientDataError",
    "K_MAX",
    "ModelKind",
    "NumericalError",
    "OrthonormalBasis",
    "SelectionResult",
    "SmoothTestError",
    "TestResult",
    "compute_constants",
    "fit",
    "flatten_two_way",
    "omega_mixture_matrix",
    "pi_k",
    "reduce_random_effects",
    "revised_cdf",
    "revised_sf",
    "select_K",
    "sigma_matrix",
    "statistic",
    "test_data_driven",
    "test_fixed_K",
]

__version__ = "0.1.0"
