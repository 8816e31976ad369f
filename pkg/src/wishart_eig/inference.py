"""Tests and confidence bounds for population eigenvalues of a Wishart matrix.

Three procedures are provided:

* a one-sided test of ``lambda_m >= lambda_star`` based on ``l_m``, calibrated
  at the least favourable configuration (top ``m`` eigenvalues equal to
  ``lambda_star``, the rest tending to zero);
* upper confidence bounds for the largest and smallest population
  eigenvalue, from either the large-sample normal approximation or the
  chi-square limit under infinite dispersion;
* the likelihood-ratio test that the ``p - m`` smallest eigenvalues are
  equal, with the classical chi-square critical point or the one derived
  from the limiting law of the trailing block.

Both tests reject in the lower tail and their rejection regions are closed:
a statistic equal to the critical point rejects.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np

from .matrix import SpectralDecomposition, SymmetricMatrix
from .sampling import StreamKey, order_statistic_quantile, wishart_eigenvalues
from .specfun import (
    DomainError,
    chi2_lower_quantile,
    chi2_upper_quantile,
    normal_cdf_and_pdf,
    normal_quantile,
)

__all__ = [
    "DEFAULT_MC_REPS",
    "DEFAULT_KEY",
    "NonPositiveDenominatorError",
    "DegenerateSpectrumError",
    "TestOutcome",
    "ConfidenceBound",
    "one_sided_critical_point",
    "test_eigenvalue",
    "large_sample_factor",
    "ci_largest_large_sample",
    "ci_largest_dispersion",
    "ci_smallest_large_sample",
    "ci_smallest_dispersion",
    "margin_term",
    "expansion_cdf_largest",
    "expansion_cdf_chisq_sum",
    "lr_statistic",
    "lr_statistic_values",
    "lr_df",
    "lr_critical_large_sample",
    "lr_critical_dispersion",
    "test_equality_smallest",
]

DEFAULT_MC_REPS = 200_000
DEFAULT_KEY = StreamKey(seed=20080101)

Method = Literal["dispersion", "large_sample"]


class NonPositiveDenominatorError(DomainError):
    """``sqrt(2n) z_gamma + n <= 0``: the normal approximation gives no bound."""


class DegenerateSpectrumError(DomainError):
    """The largest eigenvalue is tied with another one."""


@dataclass(frozen=True)
class TestOutcome:
    statistic: float
    critical_point: float
    gamma: float
    reject: bool
    method: Method
    detail: str = ""

    __test__ = False  # not a pytest class

    def to_dict(self) -> dict:
        return {
            "statistic": self.statistic,
            "critical_point": self.critical_point,
            "gamma": self.gamma,
            "reject": self.reject,
            "method": self.method,
            "detail": self.detail,
        }


@dataclass(frozen=True)
class ConfidenceBound:
    """One-sided interval ``lambda <= upper`` at confidence level ``gamma``."""

    upper: float
    gamma: float
    target: Literal["largest", "smallest"]
    method: Method

    def __post_init__(self) -> None:
        if not self.upper > 0:
            raise DomainError(f"confidence bound must be positive, got {self.upper!r}")

    def to_dict(self) -> dict:
        return {"upper": self.upper, "gamma": self.gamma, "target": self.target, "method": self.method}


def _check_gamma(gamma: float) -> float:
    if not 0.0 < gamma < 1.0:
        raise DomainError(f"gamma must lie strictly between 0 and 1, got {gamma!r}")
    return float(gamma)


def _check_int(value, name: str, minimum: int = 1) -> int:
    if isinstance(value, bool) or not float(value).is_integer():
        raise DomainError(f"{name} must be an integer, got {value!r}")
    value = int(value)
    if value < minimum:
        raise DomainError(f"{name} must be at least {minimum}, got {value}")
    return value


def _check_positive(value: float, name: str) -> float:
    if not (value > 0 and math.isfinite(value)):
        raise DomainError(f"{name} must be positive and finite, got {value!r}")
    return float(value)


# ---------------------------------------------------------------------------
# one-sided test on lambda_m


def one_sided_critical_point(
    m: int,
    n: int,
    lambda_star: float,
    gamma: float,
    mc_reps: int = DEFAULT_MC_REPS,
    key: StreamKey = DEFAULT_KEY,
    force_monte_carlo: bool = False,
) -> float:
    """Lower ``gamma`` point of the smallest eigenvalue of W_m(n, lambda_star I).

    For ``m == 1`` this is ``lambda_star`` times the chi-square(n) quantile.
    For ``m > 1`` (or when forced) it is a Monte Carlo order statistic.
    """
    m = _check_int(m, "m")
    n = _check_int(n, "n")
    if m > n:
        raise DomainError(f"need m <= n, got m={m}, n={n}")
    lambda_star = _check_positive(lambda_star, "lambda_star")
    gamma = _check_gamma(gamma)
    if m == 1 and not force_monte_carlo:
        return lambda_star * chi2_lower_quantile(n, gamma)
    # draws at scale 1 then rescale, so the result is exactly equivariant
    vals = wishart_eigenvalues(n, SymmetricMatrix(np.eye(m)), key, _check_int(mc_reps, "mc_reps", 1000))
    return lambda_star * order_statistic_quantile(vals[:, -1], gamma)


def test_eigenvalue(
    decomp: SpectralDecomposition,
    m: int,
    n: int,
    lambda_star: float,
    gamma: float = 0.05,
    mc_reps: int = DEFAULT_MC_REPS,
    key: StreamKey = DEFAULT_KEY,
) -> TestOutcome:
    """Test ``lambda_m >= lambda_star``; reject when ``l_m <= l_m*(gamma)``."""
    m = _check_int(m, "m")
    if decomp.p < m:
        raise DomainError(f"decomposition has only {decomp.p} eigenvalues, m={m}")
    crit = one_sided_critical_point(m, n, lambda_star, gamma, mc_reps, key)
    stat = float(decomp.eigenvalues[m - 1])
    how = "chi-square quantile" if m == 1 else f"Monte Carlo order statistic, {mc_reps} reps"
    return TestOutcome(
        statistic=stat,
        critical_point=crit,
        gamma=gamma,
        reject=stat <= crit,
        method="dispersion",
        detail=f"H0: lambda_{m} >= {lambda_star}; critical point from W_{m}({n}, lambda* I) ({how})",
    )


# ---------------------------------------------------------------------------
# confidence bounds


def large_sample_factor(n: int, gamma: float) -> float:
    """``sqrt(2n) z_gamma + n``, the divisor of the large-sample bound."""
    n = _check_int(n, "n")
    return math.sqrt(2.0 * n) * normal_quantile(_check_gamma(gamma)) + n


def _large_sample_bound(stat: float, n: int, gamma: float, target) -> ConfidenceBound:
    stat = _check_positive(stat, "eigenvalue")
    denom = large_sample_factor(n, gamma)
    if denom <= 0:
        raise NonPositiveDenominatorError(
            f"sqrt(2n) z_gamma + n = {denom:.6g} <= 0 for n={n}, gamma={gamma}; "
            "the large-sample approximation gives no bound here"
        )
    return ConfidenceBound(stat / denom, gamma, target, "large_sample")


def ci_largest_large_sample(l1: float, n: int, gamma: float) -> ConfidenceBound:
    """``lambda_1 <= l_1 / (sqrt(2n) z_gamma + n)``."""
    return _large_sample_bound(l1, n, gamma, "largest")


def ci_smallest_large_sample(lp: float, n: int, gamma: float) -> ConfidenceBound:
    """Large-sample analogue for ``lambda_p`` (same normal limit applies)."""
    return _large_sample_bound(lp, n, gamma, "smallest")


def ci_largest_dispersion(l1: float, n: int, gamma: float) -> ConfidenceBound:
    """``lambda_1 <= l_1 / chi2_upper(n, gamma)``."""
    l1 = _check_positive(l1, "l1")
    n = _check_int(n, "n")
    return ConfidenceBound(l1 / chi2_upper_quantile(n, _check_gamma(gamma)), gamma, "largest", "dispersion")


def ci_smallest_dispersion(lp: float, n: int, p: int, gamma: float) -> ConfidenceBound:
    """``lambda_p <= l_p / chi2_upper(n - p + 1, gamma)``."""
    lp = _check_positive(lp, "lp")
    n = _check_int(n, "n")
    p = _check_int(p, "p")
    df = n - p + 1
    if df < 1:
        raise DomainError(f"need n >= p, got n={n}, p={p}")
    return ConfidenceBound(lp / chi2_upper_quantile(df, _check_gamma(gamma)), gamma, "smallest", "dispersion")


# ---------------------------------------------------------------------------
# asymptotic expansion of the largest eigenvalue


def margin_term(lambdas: Sequence[float]) -> float:
    """``(1/2) sum_{i>=2} lambda_i / (lambda_1 - lambda_i)``."""
    lam = np.asarray(lambdas, dtype=np.float64).reshape(-1)
    if lam.size == 0 or np.any(lam <= 0) or not np.all(np.isfinite(lam)):
        raise DomainError("eigenvalues must be positive and finite")
    rest = lam[1:]
    gap = lam[0] - rest
    if np.any(gap <= 0):
        raise DegenerateSpectrumError("lambda_1 must be strictly larger than every other eigenvalue")
    return 0.5 * float(np.sum(rest / gap))


def expansion_cdf_chisq_sum(t: float, n: int) -> float:
    """Edgeworth approximation to the CDF of a standardized chi-square(n)."""
    n = _check_int(n, "n")
    cdf, pdf = normal_cdf_and_pdf(t)
    return cdf - math.sqrt(2.0) * pdf / (3.0 * math.sqrt(n)) * (t * t - 1.0)


def expansion_cdf_largest(t: float, n: int, lambdas: Sequence[float]) -> float:
    """Order ``n^-1/2`` expansion of the CDF of ``sqrt(n/2) (l_1/(n lambda_1) - 1)``.

    This is an asymptotic expansion, not a distribution function: for
    large ``|t|`` or a large margin it can leave [0, 1].  The value is
    returned as is.
    """
    n = _check_int(n, "n")
    margin = margin_term(lambdas)
    cdf, pdf = normal_cdf_and_pdf(t)
    return cdf - math.sqrt(2.0) * pdf / (3.0 * math.sqrt(n)) * ((t * t - 1.0) + margin)


# ---------------------------------------------------------------------------
# equality of the smallest eigenvalues


def lr_df(p: int, m: int) -> int:
    k = p - m
    return (k + 2) * (k - 1) // 2


def lr_statistic_values(trailing: np.ndarray) -> np.ndarray:
    """Vectorised ``V`` over the rows of ``trailing`` (the ``p - m`` smallest
    eigenvalues); ratio of geometric to arithmetic mean, to the power ``p - m``."""
    trailing = np.asarray(trailing, dtype=np.float64)
    mean = trailing.mean(axis=-1, keepdims=True)
    v = np.prod(trailing / mean, axis=-1)
    equal = np.all(trailing == trailing[..., :1], axis=-1)
    # AM-GM bounds V by 1; clip rounding excursions
    return np.where(equal, 1.0, np.minimum(v, 1.0))


def lr_statistic(decomp: SpectralDecomposition, m: int) -> float:
    p = decomp.p
    m = _check_int(m, "m")
    if m > p - 2:
        raise DomainError(f"the equality test needs at least two trailing eigenvalues (m <= p - 2), got p={p}, m={m}")
    trailing = decomp.eigenvalues[m:]
    if np.any(trailing <= 0):
        raise DomainError("trailing eigenvalues must be positive")
    return float(lr_statistic_values(trailing))


def _check_lr_shape(p: int, m: int, n: int) -> tuple[int, int, int]:
    p = _check_int(p, "p")
    m = _check_int(m, "m")
    n = _check_int(n, "n")
    if p - m < 2:
        raise DomainError(f"the equality test needs p - m >= 2, got p={p}, m={m}")
    if n - m < p - m:
        raise DomainError(f"need n >= p, got n={n}, p={p}")
    return p, m, n


def lr_critical_large_sample(p: int, m: int, n: int, gamma: float) -> float:
    """``exp(-chi2_upper(df, gamma) / n)`` with ``df = (p-m+2)(p-m-1)/2``."""
    p, m, n = _check_lr_shape(p, m, n)
    return math.exp(-chi2_upper_quantile(lr_df(p, m), _check_gamma(gamma)) / n)


def lr_critical_dispersion(
    p: int,
    m: int,
    n: int,
    gamma: float,
    mc_reps: int = DEFAULT_MC_REPS,
    key: StreamKey = DEFAULT_KEY,
    force_monte_carlo: bool = False,
) -> float:
    """Lower ``gamma`` point of ``V`` computed from W_{p-m}(n-m, I).

    Exact for ``p - m == 2``: ``gamma ** (2 / (n - m - 1))``.  Otherwise a
    Monte Carlo order statistic over ``mc_reps`` draws.
    """
    p, m, n = _check_lr_shape(p, m, n)
    gamma = _check_gamma(gamma)
    k = p - m
    if k == 2 and not force_monte_carlo:
        return gamma ** (2.0 / (n - m - 1))
    vals = wishart_eigenvalues(n - m, SymmetricMatrix(np.eye(k)), key, _check_int(mc_reps, "mc_reps", 1000))
    return order_statistic_quantile(lr_statistic_values(vals), gamma)


def test_equality_smallest(
    decomp: SpectralDecomposition,
    p: int,
    m: int,
    n: int,
    gamma: float = 0.05,
    method: Method = "dispersion",
    mc_reps: int = DEFAULT_MC_REPS,
    key: StreamKey = DEFAULT_KEY,
) -> TestOutcome:
    """Likelihood-ratio test of ``lambda_{m+1} = ... = lambda_p``; reject when ``V <= c``."""
    if decomp.p != p:
        raise DomainError(f"decomposition has p={decomp.p}, expected {p}")
    stat = lr_statistic(decomp, m)
    if method == "dispersion":
        crit = lr_critical_dispersion(p, m, n, gamma, mc_reps, key)
        detail = "critical point from the limiting law of the trailing block"
    elif method == "large_sample":
        crit = lr_critical_large_sample(p, m, n, gamma)
        detail = f"-n log V ~ chi2({lr_df(p, m)})"
    else:
        raise DomainError(f"unknown method {method!r}")
    return TestOutcome(stat, crit, gamma, stat <= crit, method, detail)


# keep pytest from collecting these when imported into test modules
test_eigenvalue.__test__ = False
test_equality_smallest.__test__ = False
