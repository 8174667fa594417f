"""Heteroscedasticity-adjusted ranking and thresholding for multiple testing."""

from .estimation import (Bandwidths, EmpiricalNull, EstimationError, HartOptions,
                         InsufficientDataError, TStatVector, empirical_null,
                         estimate_tstats, storey_pi)
from .kernels import BACKEND
from .model import (DomainError, Fixed, Gaussian, GaussianMixture, MixtureModel,
                    PointMass, StudentT, TwoPointMass, TwoValues, Uniform, Zero)
from .procedures import (DecisionSet, az, bh, hart, oracle_full, oracle_p, oracle_z,
                         pvalue_from_z, step_up)

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "Bandwidths", "DecisionSet", "DomainError", "EmpiricalNull",
    "EstimationError", "Fixed", "Gaussian", "GaussianMixture", "HartOptions",
    "InsufficientDataError", "MixtureModel", "PointMass", "StudentT", "TStatVector",
    "TwoPointMass", "TwoValues", "Uniform", "Zero", "az", "bh", "empirical_null",
    "estimate_tstats", "hart", "oracle_full", "oracle_p", "oracle_z", "pvalue_from_z",
    "step_up", "storey_pi",
]
