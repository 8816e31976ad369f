"""Vectorised numpy implementation of the hot kernels.

This is the reference path and the fallback used when the compiled
``_kernels`` extension is unavailable.  Both modules expose the same
functions with the same variate layout, so a given stream key yields the
same draws (up to last-ulp differences in ``log``/``cos``) on either path.

Variate layout
--------------
Each replication owns a Philox4x64-10 stream keyed by ``(seed, 0)`` with
counter ``(block, replication, cell_id, purpose)``.  A block yields four
uniforms in [0, 1).

* purpose 0: standard normals, Box-Muller on uniform pairs, four per block.
* purpose ``base + i``: chi-square draw number ``i`` by Marsaglia-Tsang;
  rejection attempt ``j`` consumes block ``j``.
"""

from __future__ import annotations

import numpy as np

NAME = "python"

_M0 = np.uint64(0xD2E7470EE14C6C93)
_M1 = np.uint64(0xCA5A826395121157)
_W0 = np.uint64(0x9E3779B97F4A7C15)
_W1 = np.uint64(0xBB67AE8584CAA73B)
_MASK32 = np.uint64(0xFFFFFFFF)
_S32 = np.uint64(32)
_S11 = np.uint64(11)
_TWO_PI = 2.0 * np.pi

CHI2_PURPOSE_BASE = 1


def _mulhilo(a: np.ndarray, m: np.uint64) -> tuple[np.ndarray, np.ndarray]:
    a_lo = a & _MASK32
    a_hi = a >> _S32
    m_lo = m & _MASK32
    m_hi = m >> _S32
    lo_lo = a_lo * m_lo
    hi_lo = a_hi * m_lo
    lo_hi = a_lo * m_hi
    hi_hi = a_hi * m_hi
    cross = (lo_lo >> _S32) + (hi_lo & _MASK32) + (lo_hi & _MASK32)
    hi = hi_hi + (hi_lo >> _S32) + (lo_hi >> _S32) + (cross >> _S32)
    return hi, a * m


def philox4x64(c0, c1, c2, c3, k0, k1):
    """Philox4x64 with ten rounds, vectorised over the counter words."""
    with np.errstate(over="ignore"):
        c0, c1, c2, c3 = (np.asarray(c, dtype=np.uint64) for c in (c0, c1, c2, c3))
        c0, c1, c2, c3 = np.broadcast_arrays(c0, c1, c2, c3)
        k0 = np.uint64(k0)
        k1 = np.uint64(k1)
        for r in range(10):
            if r:
                k0 = k0 + _W0
                k1 = k1 + _W1
            hi0, lo0 = _mulhilo(c0, _M0)
            hi1, lo1 = _mulhilo(c2, _M1)
            c0, c1, c2, c3 = hi1 ^ c1 ^ k0, lo1, hi0 ^ c3 ^ k1, lo0
    return c0, c1, c2, c3


def _to_unit(x: np.ndarray) -> np.ndarray:
    return (x >> _S11).astype(np.float64) * (1.0 / 9007199254740992.0)


def block_uniforms(seed, block, rep, cell_id, purpose) -> np.ndarray:
    """Four uniforms in [0, 1) per counter; trailing axis of length 4."""
    words = philox4x64(block, rep, cell_id, purpose, seed, 0)
    return np.stack([_to_unit(w) for w in words], axis=-1)


def _box_muller(u0, u1):
    r = np.sqrt(-2.0 * np.log(1.0 - u0))
    theta = _TWO_PI * u1
    return r * np.cos(theta), r * np.sin(theta)


def normal_draws(seed, cell_id, rep0, reps, count, purpose=0) -> np.ndarray:
    """``(reps, count)`` standard normals."""
    reps = int(reps)
    count = int(count)
    nblocks = (count + 3) // 4
    if reps == 0 or count == 0:
        return np.zeros((reps, count))
    rep = np.arange(reps, dtype=np.uint64) + np.uint64(rep0)
    block = np.arange(nblocks, dtype=np.uint64)
    u = block_uniforms(seed, block[None, :], rep[:, None], cell_id, purpose)
    z0, z1 = _box_muller(u[..., 0], u[..., 1])
    z2, z3 = _box_muller(u[..., 2], u[..., 3])
    z = np.stack([z0, z1, z2, z3], axis=-1).reshape(reps, nblocks * 4)
    return np.ascontiguousarray(z[:, :count])


def chi2_draws(seed, cell_id, rep0, reps, dfs, purpose0=CHI2_PURPOSE_BASE) -> np.ndarray:
    """``(reps, len(dfs))`` chi-square draws; column ``i`` has ``dfs[i]`` dof."""
    reps = int(reps)
    dfs = np.asarray(dfs, dtype=np.float64).reshape(-1)
    out = np.empty((reps, dfs.size))
    rep_all = np.arange(reps, dtype=np.uint64) + np.uint64(rep0)
    for i, df in enumerate(dfs):
        a = 0.5 * df
        boost = a < 1.0
        a1 = a + 1.0 if boost else a
        d = a1 - 1.0 / 3.0
        c = 1.0 / np.sqrt(9.0 * d)
        purpose = np.uint64(purpose0 + i)
        result = np.empty(reps)
        pending = np.arange(reps)
        attempt = 0
        while pending.size:
            u = block_uniforms(seed, np.uint64(attempt), rep_all[pending], cell_id, purpose)
            x, _ = _box_muller(u[:, 0], u[:, 1])
            v = 1.0 + c * x
            ok = v > 0.0
            v3 = np.where(ok, v, 1.0) ** 3
            with np.errstate(divide="ignore", invalid="ignore"):
                accept = ok & (np.log(1.0 - u[:, 2]) < 0.5 * x * x + d - d * v3 + d * np.log(v3))
            g = d * v3[accept]
            if boost:
                g = g * (1.0 - u[accept, 3]) ** (1.0 / a)
            result[pending[accept]] = 2.0 * g
            pending = pending[~accept]
            attempt += 1
        out[:, i] = result
    return out


def _tril_fill(chi2, normals, p):
    reps = chi2.shape[0]
    a = np.zeros((reps, p, p))
    idx = np.arange(p)
    a[:, idx, idx] = np.sqrt(chi2)
    rows, cols = np.tril_indices(p, -1)
    a[:, rows, cols] = normals
    return a


def _bartlett_dfs(n, p):
    return n - np.arange(p, dtype=np.float64)


def wishart_matrices(seed, cell_id, rep0, reps, n, chol) -> np.ndarray:
    """``(reps, p, p)`` Wishart draws ``C A A' C'`` via Bartlett factors."""
    chol = np.ascontiguousarray(chol, dtype=np.float64)
    p = chol.shape[0]
    chi2 = chi2_draws(seed, cell_id, rep0, reps, _bartlett_dfs(n, p))
    normals = normal_draws(seed, cell_id, rep0, reps, p * (p - 1) // 2, 0)
    a = _tril_fill(chi2, normals, p)
    b = np.matmul(chol, a)
    s = np.matmul(b, np.swapaxes(b, 1, 2))
    rows, cols = np.triu_indices(p, 1)
    s[:, rows, cols] = s[:, cols, rows]
    return s


def jacobi_eigh(a, want_vectors=True, tol=1e-13, max_sweeps=50):
    """Cyclic Jacobi on a stack of symmetric matrices.

    Returns ``(values, vectors, converged)`` with values sorted descending
    (stable), vectors as columns (``None`` unless requested) and a boolean
    convergence flag per matrix.
    """
    a = np.array(a, dtype=np.float64, copy=True)
    if a.ndim == 2:
        a = a[None]
    nmat, p, _ = a.shape
    v = np.broadcast_to(np.eye(p), (nmat, p, p)).copy() if want_vectors else None
    thresh = tol * np.sqrt(np.einsum("kij,kij->k", a, a))
    offmask = ~np.eye(p, dtype=bool)
    converged = np.zeros(nmat, dtype=bool)
    for sweep in range(max_sweeps + 1):
        off = np.sqrt(np.sum(np.where(offmask, a, 0.0) ** 2, axis=(1, 2)))
        converged = off <= thresh
        active = np.flatnonzero(~converged)
        if active.size == 0:
            break
        if sweep == max_sweeps:
            break
        sub = a[active]
        vsub = v[active] if want_vectors else None
        for i in range(p - 1):
            for j in range(i + 1, p):
                aij = sub[:, i, j]
                nz = aij != 0.0
                with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
                    theta = (sub[:, j, j] - sub[:, i, i]) / (2.0 * aij)
                    big = np.abs(theta) > 1e150
                    t = np.where(
                        big,
                        0.5 / theta,
                        np.where(theta >= 0.0, 1.0, -1.0) / (np.abs(theta) + np.sqrt(theta * theta + 1.0)),
                    )
                t = np.where(nz, t, 0.0)
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                cc = c[:, None]
                ss = s[:, None]
                col_i = sub[:, :, i].copy()
                col_j = sub[:, :, j].copy()
                sub[:, :, i] = cc * col_i - ss * col_j
                sub[:, :, j] = ss * col_i + cc * col_j
                row_i = sub[:, i, :].copy()
                row_j = sub[:, j, :].copy()
                sub[:, i, :] = cc * row_i - ss * row_j
                sub[:, j, :] = ss * row_i + cc * row_j
                sub[nz, i, j] = 0.0
                sub[nz, j, i] = 0.0
                if want_vectors:
                    vi = vsub[:, :, i].copy()
                    vj = vsub[:, :, j].copy()
                    vsub[:, :, i] = cc * vi - ss * vj
                    vsub[:, :, j] = ss * vi + cc * vj
        a[active] = sub
        if want_vectors:
            v[active] = vsub
    vals = np.diagonal(a, axis1=1, axis2=2).copy()
    order = np.argsort(-vals, axis=1, kind="stable")
    vals = np.take_along_axis(vals, order, axis=1)
    if want_vectors:
        v = np.take_along_axis(v, order[:, None, :], axis=2)
    return vals, v, converged


def wishart_eigvals(seed, cell_id, rep0, reps, n, chol, tol=1e-13, max_sweeps=50):
    """Eigenvalues (descending) of ``reps`` Wishart draws, plus convergence flags."""
    s = wishart_matrices(seed, cell_id, rep0, reps, n, chol)
    vals, _, converged = jacobi_eigh(s, want_vectors=False, tol=tol, max_sweeps=max_sweeps)
    return vals, converged
