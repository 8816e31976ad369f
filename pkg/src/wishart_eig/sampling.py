"""Reproducible Wishart sampling and the block-dispersion population model.

Every replication draws from its own counter-based stream identified by a
:class:`StreamKey`, so a batch of replications gives the same numbers no
matter how it is split across workers or in which order it is evaluated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ._backend import kernels
from .matrix import (
    JACOBI_MAX_SWEEPS,
    JACOBI_TOL,
    ConvergenceError,
    SpectralDecomposition,
    SymmetricMatrix,
)
from .specfun import DomainError

__all__ = [
    "StreamKey",
    "DispersionModel",
    "NotPositiveDefiniteError",
    "cholesky_factor",
    "normal_variates",
    "chisquare_variates",
    "sample_wishart",
    "sample_wishart_batch",
    "wishart_eigenvalues",
    "order_statistic_quantile",
    "sample_smallest_eigenvalue_quantile",
    "normalize",
]

_U64 = 1 << 64
# purposes 0 .. 2**32 are reserved for Wishart (Bartlett) draws
_GENERIC_NORMAL = 1 << 40
_GENERIC_CHI2 = (1 << 40) + 1
_CHUNK = 65536


class NotPositiveDefiniteError(DomainError):
    pass


@dataclass(frozen=True)
class StreamKey:
    """Identifies one replication's random stream.

    Batch functions use replications ``replication, replication + 1, ...``
    of the same ``(seed, cell_id)``.
    """

    seed: int
    cell_id: int = 0
    replication: int = 0

    def __post_init__(self) -> None:
        for name in ("seed", "cell_id", "replication"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or isinstance(v, bool):
                raise TypeError(f"{name} must be an integer, got {v!r}")
            if not 0 <= int(v) < _U64:
                raise DomainError(f"{name} must fit in 64 unsigned bits, got {v!r}")
            object.__setattr__(self, name, int(v))

    def at(self, replication: int) -> "StreamKey":
        return StreamKey(self.seed, self.cell_id, replication)

    def for_cell(self, cell_id: int) -> "StreamKey":
        return StreamKey(self.seed, cell_id, self.replication)


@dataclass(frozen=True)
class DispersionModel:
    """Population eigenvalues ``xi_i * alpha`` (i <= m) and ``xi_i * beta`` (i > m)."""

    p: int
    m: int
    xi: tuple[float, ...]
    alpha: float
    beta: float

    def __post_init__(self) -> None:
        xi = tuple(float(x) for x in np.broadcast_to(np.asarray(self.xi, float), (self.p,)))
        object.__setattr__(self, "xi", xi)
        if self.p < 1 or not 1 <= self.m <= self.p:
            raise DomainError(f"need 1 <= m <= p, got p={self.p}, m={self.m}")
        if any(x <= 0 or not math.isfinite(x) for x in xi):
            raise DomainError("xi must be positive and finite")
        if any(a < b for a, b in zip(xi, xi[1:])):
            raise DomainError("xi must be nonincreasing")
        if not (self.alpha > 0 and self.beta > 0):
            raise DomainError("alpha and beta must be positive")
        lam = self.eigenvalues
        if np.any(np.diff(lam) > 0):
            raise DomainError(f"population eigenvalues {lam.tolist()} are not nonincreasing")

    @property
    def eigenvalues(self) -> np.ndarray:
        scale = np.where(np.arange(self.p) < self.m, self.alpha, self.beta)
        return np.asarray(self.xi) * scale

    def covariance(self) -> SymmetricMatrix:
        return SymmetricMatrix.diagonal(self.eigenvalues)


def _check_dof(n, p: int) -> int:
    if isinstance(n, bool) or not float(n).is_integer():
        raise DomainError(f"degrees of freedom must be an integer, got {n!r}")
    n = int(n)
    if n < 1:
        raise DomainError(f"degrees of freedom must be positive, got {n}")
    if n < p:
        raise DomainError(f"singular Wishart (n={n} < p={p}) is not supported")
    return n


def _check_reps(reps: int) -> int:
    reps = int(reps)
    if reps < 1:
        raise DomainError(f"reps must be positive, got {reps}")
    return reps


def cholesky_factor(sigma: SymmetricMatrix) -> np.ndarray:
    """Lower-triangular ``C`` with ``C C' = sigma``."""
    a = sigma.entries if isinstance(sigma, SymmetricMatrix) else SymmetricMatrix(sigma).entries
    if np.count_nonzero(a - np.diag(np.diagonal(a))) == 0:
        d = np.diagonal(a)
        if np.any(d <= 0):
            raise NotPositiveDefiniteError("covariance matrix is not positive definite")
        return np.diag(np.sqrt(d))
    try:
        return np.linalg.cholesky(a)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefiniteError("covariance matrix is not positive definite") from exc


def normal_variates(key: StreamKey, size: int) -> np.ndarray:
    """``size`` standard normals from the single stream ``key``."""
    return kernels.normal_draws(key.seed, key.cell_id, key.replication, 1, int(size), _GENERIC_NORMAL)[0]


def chisquare_variates(df: float, key: StreamKey, size: int) -> np.ndarray:
    """Chi-square draws, one per replication starting at ``key.replication``."""
    if not df > 0:
        raise DomainError(f"df must be positive, got {df!r}")
    size = int(size)
    return kernels.chi2_draws(key.seed, key.cell_id, key.replication, size, [float(df)], _GENERIC_CHI2)[:, 0]


def sample_wishart_batch(n: int, sigma: SymmetricMatrix, key: StreamKey, reps: int) -> np.ndarray:
    """``(reps, p, p)`` draws from W_p(n, sigma) by the Bartlett decomposition."""
    chol = cholesky_factor(sigma)
    n = _check_dof(n, chol.shape[0])
    return kernels.wishart_matrices(key.seed, key.cell_id, key.replication, _check_reps(reps), n, chol)


def sample_wishart(n: int, sigma: SymmetricMatrix, key: StreamKey) -> SymmetricMatrix:
    return SymmetricMatrix(sample_wishart_batch(n, sigma, key, 1)[0])


def wishart_eigenvalues(n: int, sigma: SymmetricMatrix, key: StreamKey, reps: int) -> np.ndarray:
    """Descending sample eigenvalues of ``reps`` draws, shape ``(reps, p)``."""
    chol = cholesky_factor(sigma)
    n = _check_dof(n, chol.shape[0])
    reps = _check_reps(reps)
    out = np.empty((reps, chol.shape[0]))
    for start in range(0, reps, _CHUNK):
        stop = min(reps, start + _CHUNK)
        vals, conv = kernels.wishart_eigvals(
            key.seed, key.cell_id, key.replication + start, stop - start, n, chol,
            JACOBI_TOL, JACOBI_MAX_SWEEPS,
        )
        if not np.all(conv):
            raise ConvergenceError(f"{int((~conv).sum())} eigen-decompositions did not converge")
        out[start:stop] = vals
    return out


def order_statistic_quantile(values: Sequence[float], gamma: float) -> float:
    """The ``ceil(gamma * N)``-th smallest value (1-based rank)."""
    values = np.asarray(values, dtype=np.float64).reshape(-1)
    if not 0.0 < gamma < 1.0:
        raise DomainError(f"gamma must lie strictly between 0 and 1, got {gamma!r}")
    # round first so that e.g. 0.05 * 200000 is rank 10000, not 10001
    rank = max(1, math.ceil(round(gamma * values.size, 9)))
    return float(np.partition(values, rank - 1)[rank - 1])


def sample_smallest_eigenvalue_quantile(
    mdim: int, n: int, scale: float, gamma: float, reps: int, key: StreamKey
) -> float:
    """Lower ``gamma`` order-statistic quantile of the smallest eigenvalue of
    ``reps`` draws from W_mdim(n, scale * I)."""
    if mdim < 1:
        raise DomainError(f"mdim must be at least 1, got {mdim}")
    if not scale > 0 or not math.isfinite(scale):
        raise DomainError(f"scale must be positive, got {scale!r}")
    if reps < 1000:
        raise DomainError(f"reps must be at least 1000, got {reps}")
    vals = wishart_eigenvalues(n, SymmetricMatrix(np.eye(mdim)), key, reps)
    return scale * order_statistic_quantile(vals[:, -1], gamma)


def normalize(decomp: SpectralDecomposition, model: DispersionModel) -> np.ndarray:
    """``l_i / alpha`` for the leading ``m`` eigenvalues, ``l_i / beta`` after."""
    if decomp.p != model.p:
        raise DomainError(f"decomposition has p={decomp.p}, model has p={model.p}")
    scale = np.where(np.arange(model.p) < model.m, model.alpha, model.beta)
    return decomp.eigenvalues / scale
