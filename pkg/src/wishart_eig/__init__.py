"""Eigenvalue inference for Wishart matrices under block-wise infinite dispersion.

Submodules: :mod:`specfun` (chi-square and normal functions), :mod:`matrix`
(Jacobi eigensolver), :mod:`sampling` (reproducible Wishart draws),
:mod:`inference` (tests and confidence bounds), :mod:`simulation`
(coverage and type I error studies) and :mod:`cli`.
"""

from ._backend import BACKEND
from .inference import (
    ConfidenceBound,
    TestOutcome,
    ci_largest_dispersion,
    ci_largest_large_sample,
    ci_smallest_dispersion,
    ci_smallest_large_sample,
    lr_critical_dispersion,
    lr_critical_large_sample,
    lr_statistic,
    one_sided_critical_point,
    test_eigenvalue,
    test_equality_smallest,
)
from .matrix import ConvergenceError, SpectralDecomposition, SymmetricMatrix, eigenvalues_only, eigh
from .sampling import DispersionModel, StreamKey, sample_wishart, sample_wishart_batch, wishart_eigenvalues
from .specfun import DomainError

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "ConfidenceBound",
    "ConvergenceError",
    "DispersionModel",
    "DomainError",
    "SpectralDecomposition",
    "StreamKey",
    "SymmetricMatrix",
    "TestOutcome",
    "ci_largest_dispersion",
    "ci_largest_large_sample",
    "ci_smallest_dispersion",
    "ci_smallest_large_sample",
    "eigenvalues_only",
    "eigh",
    "lr_critical_dispersion",
    "lr_critical_large_sample",
    "lr_statistic",
    "one_sided_critical_point",
    "sample_wishart",
    "sample_wishart_batch",
    "test_eigenvalue",
    "test_equality_smallest",
    "wishart_eigenvalues",
    "__version__",
]
