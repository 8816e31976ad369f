"""Backend checks: Philox against numpy's bit generator, and agreement of
the compiled and numpy kernels."""

import numpy as np
import pytest
from scipy import stats

from wishart_eig import _kernels_py

try:
    from wishart_eig import _kernels as _kernels_c
except ImportError:  # extension not built
    _kernels_c = None

BACKENDS = [_kernels_py] + ([_kernels_c] if _kernels_c is not None else [])
needs_ext = pytest.mark.skipif(_kernels_c is None, reason="compiled extension not built")


def _numpy_philox(seed, c0, c1, c2, c3):
    # numpy increments the counter before the first block
    bg = np.random.Philox(key=np.array([seed, 0], dtype=np.uint64),
                          counter=np.array([c0 - 1, c1, c2, c3], dtype=np.uint64))
    return bg.random_raw(4)


@pytest.mark.parametrize("seed", [0, 1, 42, 2**63 + 5, 2**64 - 1])
@pytest.mark.parametrize("counter", [(1, 0, 0, 0), (7, 3, 9, 1), (2**40, 2**33, 2**32 + 1, (1 << 40) + 1)])
def test_philox_matches_numpy(seed, counter):
    ref = _numpy_philox(seed, *counter)
    ours = np.array(_kernels_py.philox4x64(*counter, seed, 0)).reshape(-1)
    np.testing.assert_array_equal(ours, ref)
    if _kernels_c is not None:
        u = _kernels_c.block_uniforms(seed, *counter)
        np.testing.assert_array_equal(np.asarray(u).reshape(-1), (ref >> np.uint64(11)) * 2.0**-53)


@pytest.mark.parametrize("kern", BACKENDS, ids=lambda k: k.NAME)
def test_normals_distribution(kern):
    z = kern.normal_draws(11, 0, 0, 20000, 5)
    assert z.shape == (20000, 5)
    assert stats.kstest(z[:, 0], "norm").pvalue > 1e-3
    assert stats.kstest(z[:, 4], "norm").pvalue > 1e-3
    assert abs(np.corrcoef(z[:, 0], z[:, 1])[0, 1]) < 0.04


@pytest.mark.parametrize("kern", BACKENDS, ids=lambda k: k.NAME)
@pytest.mark.parametrize("df", [0.3, 1.0, 2.5, 9.0, 100.0])
def test_chi2_distribution(kern, df):
    x = kern.chi2_draws(5, 1, 0, 20000, [df])[:, 0]
    assert np.all(x > 0)
    assert stats.kstest(x, "chi2", args=(df,)).pvalue > 1e-3


@pytest.mark.parametrize("kern", BACKENDS, ids=lambda k: k.NAME)
def test_batches_split_consistently(kern):
    chol = np.linalg.cholesky(np.array([[2.0, 0.5, 0], [0.5, 1.0, 0.1], [0, 0.1, 0.7]]))
    whole = kern.wishart_matrices(3, 9, 0, 50, 6.0, chol)
    parts = np.concatenate([kern.wishart_matrices(3, 9, 0, 20, 6.0, chol),
                            kern.wishart_matrices(3, 9, 20, 30, 6.0, chol)])
    np.testing.assert_array_equal(whole, parts)
    assert np.array_equal(whole, np.swapaxes(whole, 1, 2))


@needs_ext
def test_backends_agree():
    chol = np.linalg.cholesky(np.array([[1.0, 0.3, 0.1], [0.3, 0.5, 0.0], [0.1, 0.0, 0.2]]))
    for rep0 in (0, 123456):
        a = _kernels_py.wishart_matrices(17, 4, rep0, 300, 7.0, chol)
        b = _kernels_c.wishart_matrices(17, 4, rep0, 300, 7.0, chol)
        np.testing.assert_allclose(a, b, rtol=1e-13, atol=0)
        va, ca = _kernels_py.wishart_eigvals(17, 4, rep0, 300, 7.0, chol, 1e-13, 50)
        vb, cb = _kernels_c.wishart_eigvals(17, 4, rep0, 300, 7.0, chol, 1e-13, 50)
        assert ca.all() and cb.all()
        np.testing.assert_allclose(va, vb, rtol=1e-12, atol=0)
    za = _kernels_py.normal_draws(1, 2, 3, 100, 9, 1 << 40)
    zb = _kernels_c.normal_draws(1, 2, 3, 100, 9, 1 << 40)
    np.testing.assert_allclose(za, zb, rtol=1e-14, atol=1e-15)
    xa = _kernels_py.chi2_draws(1, 2, 3, 500, [0.7, 4.0], (1 << 40) + 1)
    xb = _kernels_c.chi2_draws(1, 2, 3, 500, [0.7, 4.0], (1 << 40) + 1)
    np.testing.assert_allclose(xa, xb, rtol=1e-12)


@needs_ext
def test_jacobi_backends_identical():
    a = np.random.default_rng(0).standard_normal((200, 5, 5))
    a = a + np.swapaxes(a, 1, 2)
    la, qa, ca = _kernels_py.jacobi_eigh(a)
    lb, qb, cb = _kernels_c.jacobi_eigh(a)
    assert ca.all() and cb.all()
    np.testing.assert_array_equal(la, lb)
    np.testing.assert_array_equal(qa, qb)


@pytest.mark.parametrize("kern", BACKENDS, ids=lambda k: k.NAME)
def test_jacobi_nonconvergence_reported(kern):
    a = np.random.default_rng(1).standard_normal((3, 6, 6))
    a = a + np.swapaxes(a, 1, 2)
    _, _, conv = kern.jacobi_eigh(a, max_sweeps=1)
    assert not conv.all()
