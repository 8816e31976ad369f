"""Special functions: incomplete gamma, chi-square and normal distributions.

Everything here is scalar, pure and thread-safe.  Quantiles are found by a
bracketed Newton iteration that falls back to bisection whenever a Newton
step leaves the current bracket.
"""

from __future__ import annotations

import math
from statistics import NormalDist

__all__ = [
    "DomainError",
    "log_gamma",
    "regularized_lower_gamma",
    "regularized_upper_gamma",
    "chi2_cdf",
    "chi2_sf",
    "chi2_pdf",
    "chi2_lower_quantile",
    "chi2_upper_quantile",
    "normal_cdf_and_pdf",
    "normal_cdf",
    "normal_quantile",
]

_EPS = 1e-16
_TINY = 1e-300
_MAX_ITER = 10_000
_SQRT_2PI = math.sqrt(2.0 * math.pi)
_STD_NORMAL = NormalDist()


class DomainError(ValueError):
    """An argument lies outside the domain of a function."""


def _check_finite(**values: float) -> None:
    for name, v in values.items():
        if not math.isfinite(v):
            raise DomainError(f"{name} must be finite, got {v!r}")


def _check_probability(gamma: float, name: str = "gamma") -> None:
    _check_finite(**{name: gamma})
    if not 0.0 < gamma < 1.0:
        raise DomainError(f"{name} must lie strictly between 0 and 1, got {gamma!r}")


def _check_df(df: float) -> None:
    _check_finite(df=df)
    if df <= 0:
        raise DomainError(f"degrees of freedom must be positive, got {df!r}")


def log_gamma(a: float) -> float:
    """Natural log of the gamma function for ``a > 0``."""
    _check_finite(a=a)
    if a <= 0:
        raise DomainError(f"a must be positive, got {a!r}")
    return math.lgamma(a)


def _gamma_prefactor(a: float, x: float) -> float:
    # x**a * exp(-x) / Gamma(a), in log space
    return math.exp(a * math.log(x) - x - math.lgamma(a))


def _lower_series(a: float, x: float) -> float:
    term = 1.0 / a
    total = term
    ap = a
    for _ in range(_MAX_ITER):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * _EPS:
            return total * _gamma_prefactor(a, x)
    raise ArithmeticError(f"incomplete gamma series failed to converge (a={a}, x={x})")


def _upper_continued_fraction(a: float, x: float) -> float:
    # modified Lentz evaluation of the continued fraction for Q(a, x)
    b = x + 1.0 - a
    c = 1.0 / _TINY
    d = 1.0 / b
    h = d
    for i in range(1, _MAX_ITER):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < _TINY:
            d = _TINY
        c = b + an / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            return h * _gamma_prefactor(a, x)
    raise ArithmeticError(f"incomplete gamma continued fraction failed (a={a}, x={x})")


def _validate_gamma_args(a: float, x: float) -> None:
    _check_finite(a=a, x=x)
    if a <= 0:
        raise DomainError(f"a must be positive, got {a!r}")
    if x < 0:
        raise DomainError(f"x must be nonnegative, got {x!r}")


def regularized_lower_gamma(a: float, x: float) -> float:
    """P(a, x) = gamma(a, x) / Gamma(a).

    Uses the power series below ``x = a + 1`` and the continued fraction
    for the complement above it.
    """
    _validate_gamma_args(a, x)
    if x == 0.0:
        return 0.0
    if x < a + 1.0:
        return min(1.0, _lower_series(a, x))
    return max(0.0, 1.0 - _upper_continued_fraction(a, x))


def regularized_upper_gamma(a: float, x: float) -> float:
    """Q(a, x) = 1 - P(a, x), computed without cancellation in the tail."""
    _validate_gamma_args(a, x)
    if x == 0.0:
        return 1.0
    if x < a + 1.0:
        return max(0.0, 1.0 - _lower_series(a, x))
    return min(1.0, _upper_continued_fraction(a, x))


def chi2_cdf(df: float, x: float) -> float:
    """Chi-square distribution function with ``df`` degrees of freedom."""
    _check_df(df)
    _check_finite(x=x)
    if x < 0:
        raise DomainError(f"x must be nonnegative, got {x!r}")
    return regularized_lower_gamma(0.5 * df, 0.5 * x)


def chi2_sf(df: float, x: float) -> float:
    """Chi-square survival function ``1 - chi2_cdf(df, x)``."""
    _check_df(df)
    _check_finite(x=x)
    if x < 0:
        raise DomainError(f"x must be nonnegative, got {x!r}")
    return regularized_upper_gamma(0.5 * df, 0.5 * x)


def chi2_pdf(df: float, x: float) -> float:
    _check_df(df)
    _check_finite(x=x)
    if x < 0:
        raise DomainError(f"x must be nonnegative, got {x!r}")
    k = 0.5 * df
    if x == 0.0:
        if k < 1.0:
            return math.inf
        return 0.5 if k == 1.0 else 0.0
    return math.exp((k - 1.0) * math.log(x) - 0.5 * x - k * math.log(2.0) - math.lgamma(k))


def _wilson_hilferty(df: float, p: float) -> float:
    z = _STD_NORMAL.inv_cdf(p)
    h = 2.0 / (9.0 * df)
    return df * max(1.0 - h + z * math.sqrt(h), 1e-3) ** 3


def _chi2_invert(df: float, p: float, upper: bool) -> float:
    """Solve cdf(q) = p (or sf(q) = p when ``upper``) for q."""
    if upper:
        def resid(q: float) -> float:
            return p - chi2_sf(df, q)
    else:
        def resid(q: float) -> float:
            return chi2_cdf(df, q) - p

    # resid is increasing in q in both cases
    lo, hi = 0.0, max(1.0, df)
    while resid(hi) < 0.0:
        lo, hi = hi, 2.0 * hi
    q = min(max(_wilson_hilferty(df, 1.0 - p if upper else p), lo), hi)
    for _ in range(200):
        r = resid(q)
        if abs(r) <= 1e-15 or hi - lo <= 4e-16 * hi:
            return q
        if r < 0.0:
            lo = q
        else:
            hi = q
        dens = chi2_pdf(df, q) if q > 0.0 else 0.0
        step_ok = False
        if dens > 0.0 and math.isfinite(dens):
            cand = q - r / dens
            if lo < cand < hi:
                q, step_ok = cand, True
        if not step_ok:
            q = 0.5 * (lo + hi)
    return q


def chi2_lower_quantile(df: float, gamma: float) -> float:
    """Lower 100*gamma% point: ``q`` with ``chi2_cdf(df, q) == gamma``."""
    _check_df(df)
    _check_probability(gamma)
    if df == 2:
        return -2.0 * math.log1p(-gamma)
    return _chi2_invert(df, gamma, upper=False)


def chi2_upper_quantile(df: float, gamma: float) -> float:
    """Upper 100*gamma% point: ``q`` with ``chi2_sf(df, q) == gamma``."""
    _check_df(df)
    _check_probability(gamma)
    if df == 2:
        return -2.0 * math.log(gamma)
    return _chi2_invert(df, gamma, upper=True)


def normal_cdf(t: float) -> float:
    _check_finite(t=t)
    return 0.5 * math.erfc(-t / math.sqrt(2.0))


def normal_cdf_and_pdf(t: float) -> tuple[float, float]:
    """Return ``(Phi(t), phi(t))`` for the standard normal."""
    _check_finite(t=t)
    return 0.5 * math.erfc(-t / math.sqrt(2.0)), math.exp(-0.5 * t * t) / _SQRT_2PI


def normal_quantile(gamma: float) -> float:
    """Upper 100*gamma percentile z with ``Phi(z) = 1 - gamma``."""
    _check_probability(gamma)
    if gamma == 0.5:
        return 0.0
    if gamma > 0.5:
        # 1 - gamma is exact here
        return _STD_NORMAL.inv_cdf(1.0 - gamma)
    return -_STD_NORMAL.inv_cdf(gamma)
