"""Eigenvalue-modulus sampling and spectral limits for product random matrices.

Two ensembles are covered: products of complex Ginibre matrices and
products of truncated Haar unitaries. Moduli are drawn exactly from their
Gamma/Beta product representation; a brute-force matrix oracle, limiting
profiles and determinantal-kernel utilities sit alongside for validation.
"""

__version__ = "0.1.0"

from .ensembles import (
    EnsembleKind,
    EnsembleSpec,
    LogRadialSample,
    ScalingKind,
    ScalingRule,
    apply_scaling,
    attach_angles,
    exact_log_mean,
    exact_moment,
    sample_radii,
)
from .rng import RandomStream
from .stats import EmpiricalMeasure, digamma, ecdf, ks_one_sample, ks_two_sample

__all__ = [
    "EmpiricalMeasure",
    "EnsembleKind",
    "EnsembleSpec",
    "LogRadialSample",
    "RandomStream",
    "ScalingKind",
    "ScalingRule",
    "apply_scaling",
    "attach_angles",
    "digamma",
    "ecdf",
    "exact_log_mean",
    "exact_moment",
    "ks_one_sample",
    "ks_two_sample",
    "sample_radii",
]
