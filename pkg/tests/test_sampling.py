import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from wishart_eig.matrix import SpectralDecomposition, SymmetricMatrix
from wishart_eig.sampling import (
    DispersionModel,
    NotPositiveDefiniteError,
    StreamKey,
    chisquare_variates,
    cholesky_factor,
    normal_variates,
    normalize,
    order_statistic_quantile,
    sample_smallest_eigenvalue_quantile,
    sample_wishart,
    sample_wishart_batch,
    wishart_eigenvalues,
)
from wishart_eig.specfun import DomainError


def test_stream_key_validation():
    with pytest.raises(DomainError):
        StreamKey(-1)
    with pytest.raises(DomainError):
        StreamKey(2**64)
    with pytest.raises(TypeError):
        StreamKey(1.5)
    k = StreamKey(3, 4, 5)
    assert k.at(9) == StreamKey(3, 4, 9)
    assert k.for_cell(1) == StreamKey(3, 1, 5)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**64 - 1), st.integers(0, 2**32), st.integers(0, 2**40), st.integers(1, 40))
def test_same_key_same_draws(seed, cell, rep, split):
    sigma = SymmetricMatrix(np.array([[1.0, 0.2], [0.2, 0.5]]))
    key = StreamKey(seed, cell, rep)
    a = sample_wishart_batch(4, sigma, key, 41)
    b = np.concatenate([sample_wishart_batch(4, sigma, key, split),
                        sample_wishart_batch(4, sigma, key.at(rep + split), 41 - split)])
    np.testing.assert_array_equal(a, b)
    np.testing.assert_array_equal(sample_wishart(4, sigma, key.at(rep + 3)).entries, a[3])


def test_distinct_keys_differ():
    sigma = SymmetricMatrix(np.eye(2))
    a = sample_wishart_batch(3, sigma, StreamKey(1), 10)
    for other in (StreamKey(2), StreamKey(1, cell_id=1), StreamKey(1, replication=10)):
        assert not np.any(np.isclose(a, sample_wishart_batch(3, sigma, other, 10)))


def test_generic_variates():
    z = normal_variates(StreamKey(5), 50000)
    assert stats.kstest(z, "norm").pvalue > 1e-3
    x = chisquare_variates(3.5, StreamKey(5), 50000)
    assert stats.kstest(x, "chi2", args=(3.5,)).pvalue > 1e-3
    with pytest.raises(DomainError):
        chisquare_variates(0.0, StreamKey(5), 10)


def test_scalar_wishart_is_scaled_chi2():
    draws = sample_wishart_batch(5, SymmetricMatrix(np.array([[4.0]])), StreamKey(8), 100000)[:, 0, 0]
    assert abs(draws.mean() / 4 - 5) <= 3 * math.sqrt(10 / 100000)
    assert stats.kstest(draws / 4, "chi2", args=(5,)).pvalue > 1e-3


def test_wishart_first_and_second_moments():
    sigma = np.array([[1.0, 0.4, 0.1], [0.4, 2.0, -0.3], [0.1, -0.3, 0.5]])
    n, reps = 7, 100000
    draws = sample_wishart_batch(n, SymmetricMatrix(sigma), StreamKey(77), reps)
    var = n * (sigma**2 + np.outer(np.diag(sigma), np.diag(sigma)))
    se = np.sqrt(var / reps)
    assert np.all(np.abs(draws.mean(axis=0) - n * sigma) <= 4 * se)
    assert np.allclose(draws.var(axis=0), var, rtol=0.05)


def test_draws_positive_definite_and_symmetric():
    sigma = SymmetricMatrix(0.9 * np.ones((4, 4)) + 0.1 * np.eye(4))
    draws = sample_wishart_batch(4, sigma, StreamKey(2), 2000)
    assert np.array_equal(draws, np.swapaxes(draws, 1, 2))
    assert np.all(np.linalg.eigvalsh(draws)[:, 0] > 0)


def test_wishart_errors():
    with pytest.raises(NotPositiveDefiniteError):
        sample_wishart(5, SymmetricMatrix(np.array([[1.0, 2.0], [2.0, 1.0]])), StreamKey(0))
    with pytest.raises(NotPositiveDefiniteError):
        cholesky_factor(SymmetricMatrix.diagonal([1.0, 0.0]))
    with pytest.raises(DomainError):
        sample_wishart(2, SymmetricMatrix(np.eye(3)), StreamKey(0))
    with pytest.raises(DomainError):
        sample_wishart(3.5, SymmetricMatrix(np.eye(3)), StreamKey(0))


def test_dispersion_model():
    model = DispersionModel(3, 1, (1.0,), 1.0, 0.001)
    np.testing.assert_array_equal(model.eigenvalues, [1.0, 0.001, 0.001])
    np.testing.assert_array_equal(model.covariance().entries, np.diag([1.0, 0.001, 0.001]))
    with pytest.raises(DomainError):
        DispersionModel(3, 1, (1.0,), 1.0, 2.0)
    with pytest.raises(DomainError):
        DispersionModel(3, 4, (1.0,), 1.0, 0.5)
    with pytest.raises(DomainError):
        DispersionModel(2, 1, (1.0, 2.0), 1.0, 0.5)


def test_normalize():
    dec = SpectralDecomposition(np.array([10.0, 0.02, 0.01]))
    np.testing.assert_allclose(normalize(dec, DispersionModel(3, 1, 1.0, 1.0, 0.01)), [10, 2, 1])
    np.testing.assert_array_equal(normalize(dec, DispersionModel(3, 1, 1.0, 1.0, 1.0)), dec.eigenvalues)
    with pytest.raises(DomainError):
        normalize(dec, DispersionModel(2, 1, 1.0, 1.0, 1.0))


def test_order_statistic_rank():
    v = np.arange(1, 201, dtype=float)[::-1]
    assert order_statistic_quantile(v, 0.05) == 10.0
    assert order_statistic_quantile(v, 0.051) == 11.0
    assert order_statistic_quantile(v, 1e-9) == 1.0


def test_smallest_quantile_scalar_case():
    q = sample_smallest_eigenvalue_quantile(1, 5, 1.0, 0.05, 10**6, StreamKey(4))
    assert q == pytest.approx(stats.chi2.ppf(0.05, 5), abs=0.02)


def test_smallest_quantile_scale_exact():
    key = StreamKey(9)
    q1 = sample_smallest_eigenvalue_quantile(2, 6, 1.0, 0.1, 5000, key)
    q2 = sample_smallest_eigenvalue_quantile(2, 6, 2.0, 0.1, 5000, key)
    assert q2 == 2 * q1


def test_smallest_quantile_two_seed():
    q = sample_smallest_eigenvalue_quantile(2, 10, 1.0, 0.05, 200000, StreamKey(100))
    ref = wishart_eigenvalues(10, SymmetricMatrix(np.eye(2)), StreamKey(200), 200000)[:, -1]
    frac = np.mean(ref <= q)
    assert abs(frac - 0.05) <= 4 * math.sqrt(0.05 * 0.95 / 200000) * math.sqrt(2)


def test_smallest_quantile_domain():
    with pytest.raises(DomainError):
        sample_smallest_eigenvalue_quantile(2, 10, 1.0, 0.05, 999, StreamKey(0))
    with pytest.raises(DomainError):
        sample_smallest_eigenvalue_quantile(0, 10, 1.0, 0.05, 1000, StreamKey(0))
    with pytest.raises(DomainError):
        sample_smallest_eigenvalue_quantile(2, 10, -1.0, 0.05, 1000, StreamKey(0))


@pytest.mark.parametrize("m,bump", [(1, (0, 0.5)), (2, (2, 0.3)), (2, (0, 1.0))])
def test_monotone_in_population_eigenvalues(m, bump):
    # with common random numbers P(l_m <= c) cannot increase when any lambda_i grows
    base = np.array([1.0, 0.8, 0.2])
    bigger = base.copy()
    bigger[bump[0]] += bump[1]
    key, reps, n = StreamKey(31), 50000, 6
    la = wishart_eigenvalues(n, SymmetricMatrix.diagonal(base), key, reps)[:, m - 1]
    lb = wishart_eigenvalues(n, SymmetricMatrix.diagonal(bigger), key, reps)[:, m - 1]
    c = np.quantile(la, 0.2)
    pa, pb = np.mean(la <= c), np.mean(lb <= c)
    assert pb <= pa + 3 * math.sqrt(pa * (1 - pa) / reps)
