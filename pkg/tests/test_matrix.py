import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from wishart_eig.matrix import (
    NotSymmetricError,
    SpectralDecomposition,
    SymmetricMatrix,
    batch_eigenvalues,
    eigenvalues_only,
    eigh,
)
from wishart_eig.sampling import StreamKey, sample_wishart_batch


def _check(s, dec):
    a = s.entries
    q = dec.eigenvectors
    assert np.all(np.diff(dec.eigenvalues) <= 0)
    assert np.abs(q.T @ q - np.eye(s.p)).max() <= 1e-10
    recon = q @ np.diag(dec.eigenvalues) @ q.T
    assert np.abs(recon - a).max() <= 1e-8 * max(1.0, np.abs(a).max())
    for col in q.T:
        assert col[np.argmax(np.abs(col))] >= 0


def test_symmetric_matrix_validation():
    with pytest.raises(NotSymmetricError):
        SymmetricMatrix(np.array([[1.0, 2.0], [2.0 + 1e-15, 1.0]]))
    with pytest.raises(ValueError):
        SymmetricMatrix(np.array([[1.0, np.nan], [np.nan, 1.0]]))
    with pytest.raises(ValueError):
        SymmetricMatrix(np.ones((2, 3)))
    s = SymmetricMatrix.from_array([[1.0, 2.0], [2.0 * (1 + 1e-10), 1.0]])
    assert s.entries[0, 1] == s.entries[1, 0]
    with pytest.raises(NotSymmetricError):
        SymmetricMatrix.from_array([[1.0, 2.0], [2.1, 1.0]])
    with pytest.raises(ValueError):
        s.entries[0, 0] = 5.0


def test_decomposition_descending_required():
    with pytest.raises(ValueError):
        SpectralDecomposition(np.array([1.0, 2.0]))


def test_eigh_examples():
    dec = eigh(SymmetricMatrix(np.eye(3)))
    np.testing.assert_allclose(dec.eigenvalues, [1, 1, 1], atol=1e-15)
    dec = eigh(SymmetricMatrix.diagonal([3.0, 2.0, 1.0]))
    np.testing.assert_array_equal(dec.eigenvalues, [3, 2, 1])
    np.testing.assert_array_equal(dec.eigenvectors, np.eye(3))
    dec = eigh(SymmetricMatrix(np.array([[2.0, 1.0], [1.0, 2.0]])))
    np.testing.assert_allclose(dec.eigenvalues, [3, 1], atol=1e-14)
    np.testing.assert_array_equal(eigenvalues_only(SymmetricMatrix.diagonal([5, 0.1, 0.1])), [5, 0.1, 0.1])


def test_diagonal_unsorted():
    dec = eigh(SymmetricMatrix.diagonal([1.0, 3.0, 2.0]))
    np.testing.assert_array_equal(dec.eigenvalues, [3, 2, 1])
    _check(SymmetricMatrix.diagonal([1.0, 3.0, 2.0]), dec)


def _symmetric(p):
    return hnp.arrays(np.float64, (p, p), elements=st.floats(-1e3, 1e3, allow_subnormal=False)).map(
        lambda a: SymmetricMatrix(np.triu(a) + np.triu(a, 1).T)
    )


@settings(max_examples=300, deadline=None)
@given(st.integers(1, 8).flatmap(_symmetric))
def test_eigh_properties_vs_numpy(s):
    dec = eigh(s)
    _check(s, dec)
    ref = np.linalg.eigvalsh(s.entries)[::-1]
    scale = max(1.0, np.abs(s.entries).max())
    assert np.abs(dec.eigenvalues - ref).max() <= 1e-10 * scale
    assert np.abs(eigenvalues_only(s) - dec.eigenvalues).max() <= 1e-9 * scale
    assert abs(dec.eigenvalues.sum() - np.trace(s.entries)) <= 1e-9 * max(1.0, np.abs(s.entries).sum())


@pytest.mark.parametrize("p", [1, 2, 3, 6, 10])
def test_wishart_draws_trace_det_psd(p):
    sigma = SymmetricMatrix(0.3 * np.ones((p, p)) + 0.7 * np.eye(p))
    draws = sample_wishart_batch(p + 2, sigma, StreamKey(7, cell_id=p), 200)
    vals = batch_eigenvalues(draws)
    for s, l in zip(draws, vals):
        sm = SymmetricMatrix(s)
        dec = eigh(sm)
        _check(sm, dec)
        np.testing.assert_allclose(dec.eigenvalues, l, rtol=0, atol=1e-12 * l[0])
        assert l.sum() == pytest.approx(np.trace(s), rel=1e-9)
        assert np.prod(l) == pytest.approx(np.linalg.det(s), rel=1e-7)
        assert l.min() >= -1e-10


def test_psd_rank_deficient():
    x = np.random.default_rng(3).standard_normal((2, 5))
    s = SymmetricMatrix.from_array(x.T @ x)
    vals = eigh(s).eigenvalues
    assert vals[2:].min() >= -1e-10


def test_reconstruct():
    s = SymmetricMatrix(np.array([[4.0, 1.0, 0.5], [1.0, 3.0, 0.2], [0.5, 0.2, 1.0]]))
    np.testing.assert_allclose(eigh(s).reconstruct(), s.entries, atol=1e-13)
