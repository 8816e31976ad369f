import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from wishart_eig import specfun as sf


def test_lower_gamma_examples():
    assert sf.regularized_lower_gamma(2.5, 0.0) == 0.0
    assert sf.regularized_lower_gamma(1.0, 1.0) == pytest.approx(1 - math.exp(-1), abs=1e-14)
    assert abs(sf.regularized_lower_gamma(0.5, 50.0) - 1.0) <= 1e-12


@pytest.mark.parametrize("a", [0.1, 0.5, 1.0, 2.5, 7.0, 30.0, 250.0, 2000.0])
@pytest.mark.parametrize("ratio", [0.01, 0.3, 0.9, 1.0, 1.1, 2.0, 5.0])
def test_incomplete_gamma_matches_mpmath(a, ratio):
    x = a * ratio
    ref = float(mpmath.gammainc(a, 0, x, regularized=True))
    assert abs(sf.regularized_lower_gamma(a, x) - ref) <= 1e-12
    assert abs(sf.regularized_upper_gamma(a, x) - (1 - ref)) <= 1e-12


@pytest.mark.parametrize("bad", [(0.0, 1.0), (-1.0, 1.0), (1.0, -0.1), (math.nan, 1.0), (1.0, math.inf)])
def test_incomplete_gamma_domain(bad):
    with pytest.raises(sf.DomainError):
        sf.regularized_lower_gamma(*bad)


def test_chi2_cdf_examples():
    assert sf.chi2_cdf(2, 0.0) == 0.0
    assert sf.chi2_cdf(2, 5.9915) == pytest.approx(0.95, abs=1e-6)
    assert sf.chi2_cdf(5, 1.1455) == pytest.approx(0.05, abs=1e-4)
    with pytest.raises(sf.DomainError):
        sf.chi2_cdf(3, -1.0)


@pytest.mark.parametrize("df", [1, 2, 3, 10, 57, 400])
def test_chi2_against_scipy(df):
    xs = stats.chi2.ppf([0.001, 0.2, 0.5, 0.8, 0.999], df)
    for x in xs:
        assert sf.chi2_cdf(df, x) == pytest.approx(stats.chi2.cdf(x, df), abs=1e-12)
        assert sf.chi2_sf(df, x) == pytest.approx(stats.chi2.sf(x, df), abs=1e-12)
        assert sf.chi2_pdf(df, x) == pytest.approx(stats.chi2.pdf(x, df), rel=1e-10)


def test_quantile_examples():
    assert sf.chi2_lower_quantile(2, 0.05) == pytest.approx(-2 * math.log(0.95), abs=1e-10)
    assert sf.chi2_upper_quantile(2, 0.05) == pytest.approx(-2 * math.log(0.05), abs=1e-10)
    assert sf.chi2_lower_quantile(5, 0.05) == pytest.approx(1.1455, abs=1e-4)
    assert sf.chi2_upper_quantile(100, 0.05) == pytest.approx(124.342, abs=1e-3)
    assert sf.chi2_upper_quantile(17, 0.3) == pytest.approx(sf.chi2_lower_quantile(17, 0.7), rel=1e-13)


@pytest.mark.parametrize("gamma", [0.0, 1.0, -0.1, 1.5, math.nan])
def test_quantile_domain(gamma):
    with pytest.raises(sf.DomainError):
        sf.chi2_lower_quantile(3, gamma)
    with pytest.raises(sf.DomainError):
        sf.normal_quantile(gamma)


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 1000), st.floats(0.001, 0.999))
def test_quantile_round_trip(df, gamma):
    q = sf.chi2_lower_quantile(df, gamma)
    assert abs(sf.chi2_cdf(df, q) - gamma) <= 1e-9
    assert q == pytest.approx(stats.chi2.ppf(gamma, df), rel=1e-8)


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 500), st.floats(0.001, 0.99), st.floats(1e-3, 0.009))
def test_quantile_monotone(df, gamma, step):
    q = sf.chi2_lower_quantile(df, gamma)
    assert sf.chi2_lower_quantile(df, gamma + step) > q
    assert sf.chi2_lower_quantile(df + 1, gamma) > q


def test_normal_examples():
    assert sf.normal_quantile(0.5) == 0.0
    assert sf.normal_quantile(0.05) == pytest.approx(1.6448536, abs=1e-7)
    cdf, pdf = sf.normal_cdf_and_pdf(0.0)
    assert cdf == 0.5
    assert pdf == pytest.approx(1 / math.sqrt(2 * math.pi), abs=1e-15)
    assert sf.normal_cdf_and_pdf(1.6448536)[0] == pytest.approx(0.95, abs=1e-7)


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 2**30 - 1))
def test_normal_quantile_symmetry_and_inverse(k):
    # dyadic gamma so that 1 - gamma is exact
    gamma = k / 2**30
    z = sf.normal_quantile(gamma)
    assert abs(z + sf.normal_quantile(1 - gamma)) <= 1e-12 * max(1.0, abs(z))
    assert abs(sf.normal_cdf(z) - (1 - gamma)) <= 1e-10


@settings(max_examples=200, deadline=None)
@given(st.floats(-8, 8))
def test_normal_cdf_against_scipy(t):
    cdf, pdf = sf.normal_cdf_and_pdf(t)
    assert abs(cdf - stats.norm.cdf(t)) <= 1e-12
    assert abs(pdf - stats.norm.pdf(t)) <= 1e-12
    assert abs(cdf + sf.normal_cdf(-t) - 1) <= 1e-15


@pytest.mark.parametrize("t", np.linspace(-4, 4, 17))
def test_normal_finite_difference(t):
    # central difference error is h^2 |phi''| / 6 and |phi''| <= 0.8
    for h in (1e-2, 1e-3):
        fd = (sf.normal_cdf(t + h) - sf.normal_cdf(t - h)) / (2 * h)
        assert abs(fd - sf.normal_cdf_and_pdf(t)[1]) <= 0.2 * h * h + 1e-12 / h
