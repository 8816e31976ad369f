# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels: counter-based variates, Bartlett Wishart draws and
cyclic Jacobi.  Mirrors ``_kernels_py`` function for function."""

import numpy as np

from libc.math cimport sqrt, log, cos, sin, fabs, pow
from libc.stdint cimport uint64_t
from libc.stdlib cimport malloc, free

cdef extern from *:
    """
    #include <stdint.h>
    static inline void wse_philox4x64_10(const uint64_t *ctr_in, uint64_t k0, uint64_t k1, uint64_t *out) {
        uint64_t c0 = ctr_in[0], c1 = ctr_in[1], c2 = ctr_in[2], c3 = ctr_in[3];
        int r;
        for (r = 0; r < 10; r++) {
            if (r) { k0 += 0x9E3779B97F4A7C15ULL; k1 += 0xBB67AE8584CAA73BULL; }
            __uint128_t p0 = (__uint128_t)0xD2E7470EE14C6C93ULL * c0;
            __uint128_t p1 = (__uint128_t)0xCA5A826395121157ULL * c2;
            uint64_t hi0 = (uint64_t)(p0 >> 64), lo0 = (uint64_t)p0;
            uint64_t hi1 = (uint64_t)(p1 >> 64), lo1 = (uint64_t)p1;
            c0 = hi1 ^ c1 ^ k0; c1 = lo1; c2 = hi0 ^ c3 ^ k1; c3 = lo0;
        }
        out[0] = c0; out[1] = c1; out[2] = c2; out[3] = c3;
    }
    """
    void wse_philox4x64_10(const uint64_t *ctr, uint64_t k0, uint64_t k1, uint64_t *out) nogil

NAME = "cython"
CHI2_PURPOSE_BASE = 1
cdef uint64_t _CHI2_BASE = 1

cdef double TWO_PI = 6.283185307179586
cdef double INV_2_53 = 1.0 / 9007199254740992.0


cdef inline void _uniforms(uint64_t seed, uint64_t block, uint64_t rep, uint64_t cell,
                           uint64_t purpose, double *u) noexcept nogil:
    cdef uint64_t ctr[4]
    cdef uint64_t out[4]
    ctr[0] = block
    ctr[1] = rep
    ctr[2] = cell
    ctr[3] = purpose
    wse_philox4x64_10(ctr, seed, 0, out)
    u[0] = <double>(out[0] >> 11) * INV_2_53
    u[1] = <double>(out[1] >> 11) * INV_2_53
    u[2] = <double>(out[2] >> 11) * INV_2_53
    u[3] = <double>(out[3] >> 11) * INV_2_53


cdef inline void _normals(uint64_t seed, uint64_t rep, uint64_t cell, uint64_t purpose,
                          Py_ssize_t count, double *z) noexcept nogil:
    cdef double u[4]
    cdef double r, th
    cdef Py_ssize_t b, k, nblocks = (count + 3) // 4
    cdef double tmp[4]
    for b in range(nblocks):
        _uniforms(seed, b, rep, cell, purpose, u)
        r = sqrt(-2.0 * log(1.0 - u[0]))
        th = TWO_PI * u[1]
        tmp[0] = r * cos(th)
        tmp[1] = r * sin(th)
        r = sqrt(-2.0 * log(1.0 - u[2]))
        th = TWO_PI * u[3]
        tmp[2] = r * cos(th)
        tmp[3] = r * sin(th)
        for k in range(4):
            if 4 * b + k < count:
                z[4 * b + k] = tmp[k]


cdef inline double _chi2(uint64_t seed, uint64_t rep, uint64_t cell, uint64_t purpose,
                         double df) noexcept nogil:
    cdef double a = 0.5 * df
    cdef bint boost = a < 1.0
    cdef double a1 = a + 1.0 if boost else a
    cdef double d = a1 - 1.0 / 3.0
    cdef double c = 1.0 / sqrt(9.0 * d)
    cdef double u[4]
    cdef double x, v, v3, g
    cdef uint64_t attempt = 0
    while True:
        _uniforms(seed, attempt, rep, cell, purpose, u)
        attempt += 1
        x = sqrt(-2.0 * log(1.0 - u[0])) * cos(TWO_PI * u[1])
        v = 1.0 + c * x
        if v <= 0.0:
            continue
        v3 = v * v * v
        if log(1.0 - u[2]) < 0.5 * x * x + d - d * v3 + d * log(v3):
            g = d * v3
            if boost:
                g = g * pow(1.0 - u[3], 1.0 / a)
            return 2.0 * g


cdef int _jacobi(double *a, double *v, Py_ssize_t p, double tol, int max_sweeps) noexcept nogil:
    """In-place cyclic Jacobi on a p x p row-major matrix; 1 on convergence."""
    cdef Py_ssize_t i, j, k
    cdef double fro = 0.0, off, thresh, aij, theta, t, c, s, x, y
    cdef int sweep
    for i in range(p * p):
        fro += a[i] * a[i]
    thresh = tol * sqrt(fro)
    if v != NULL:
        for i in range(p):
            for j in range(p):
                v[i * p + j] = 1.0 if i == j else 0.0
    sweep = 0
    while True:
        off = 0.0
        for i in range(p):
            for j in range(p):
                if i != j:
                    off += a[i * p + j] * a[i * p + j]
        if sqrt(off) <= thresh:
            return 1
        if sweep == max_sweeps:
            return 0
        sweep += 1
        for i in range(p - 1):
            for j in range(i + 1, p):
                aij = a[i * p + j]
                if aij == 0.0:
                    continue
                theta = (a[j * p + j] - a[i * p + i]) / (2.0 * aij)
                if fabs(theta) > 1e150:
                    t = 0.5 / theta
                else:
                    t = (1.0 if theta >= 0.0 else -1.0) / (fabs(theta) + sqrt(theta * theta + 1.0))
                c = 1.0 / sqrt(t * t + 1.0)
                s = t * c
                for k in range(p):
                    x = a[k * p + i]
                    y = a[k * p + j]
                    a[k * p + i] = c * x - s * y
                    a[k * p + j] = s * x + c * y
                for k in range(p):
                    x = a[i * p + k]
                    y = a[j * p + k]
                    a[i * p + k] = c * x - s * y
                    a[j * p + k] = s * x + c * y
                a[i * p + j] = 0.0
                a[j * p + i] = 0.0
                if v != NULL:
                    for k in range(p):
                        x = v[k * p + i]
                        y = v[k * p + j]
                        v[k * p + i] = c * x - s * y
                        v[k * p + j] = s * x + c * y


cdef void _sorted_diag(double *a, double *v, Py_ssize_t p, double *vals, double *vecs,
                       Py_ssize_t *order) noexcept nogil:
    # stable insertion sort, descending
    cdef Py_ssize_t i, j, k, tmp
    for i in range(p):
        order[i] = i
    for i in range(1, p):
        tmp = order[i]
        j = i
        while j > 0 and a[order[j - 1] * p + order[j - 1]] < a[tmp * p + tmp]:
            order[j] = order[j - 1]
            j -= 1
        order[j] = tmp
    for i in range(p):
        vals[i] = a[order[i] * p + order[i]]
    if v != NULL and vecs != NULL:
        for k in range(p):
            for i in range(p):
                vecs[k * p + i] = v[k * p + order[i]]


cdef void _bartlett(uint64_t seed, uint64_t cell, uint64_t rep, double n, const double *chol,
                    Py_ssize_t p, double *amat, double *bmat, double *z, double *s) noexcept nogil:
    cdef Py_ssize_t i, j, k, idx
    cdef double acc
    _normals(seed, rep, cell, 0, p * (p - 1) // 2, z)
    for i in range(p * p):
        amat[i] = 0.0
    idx = 0
    for i in range(p):
        amat[i * p + i] = sqrt(_chi2(seed, rep, cell, _CHI2_BASE + i, n - i))
    # row-major lower-triangle order matches numpy.tril_indices(p, -1)
    for i in range(1, p):
        for j in range(i):
            amat[i * p + j] = z[idx]
            idx += 1
    for i in range(p):
        for j in range(p):
            acc = 0.0
            for k in range(j, i + 1):
                acc += chol[i * p + k] * amat[k * p + j]
            bmat[i * p + j] = acc
    for i in range(p):
        for j in range(i + 1):
            acc = 0.0
            for k in range(p):
                acc += bmat[i * p + k] * bmat[j * p + k]
            s[i * p + j] = acc
            s[j * p + i] = acc


def block_uniforms(seed, block, rep, cell_id, purpose):
    cdef double u[4]
    _uniforms(<uint64_t>seed, <uint64_t>block, <uint64_t>rep, <uint64_t>cell_id, <uint64_t>purpose, u)
    return np.array([u[0], u[1], u[2], u[3]])


def normal_draws(seed, cell_id, rep0, Py_ssize_t reps, Py_ssize_t count, purpose=0):
    out = np.zeros((reps, count))
    cdef double[:, ::1] o = out
    cdef uint64_t s = <uint64_t>seed, cell = <uint64_t>cell_id, r0 = <uint64_t>rep0
    cdef uint64_t pur = <uint64_t>purpose
    cdef Py_ssize_t r
    if count == 0:
        return out
    with nogil:
        for r in range(reps):
            _normals(s, r0 + r, cell, pur, count, &o[r, 0])
    return out


def chi2_draws(seed, cell_id, rep0, Py_ssize_t reps, dfs, purpose0=CHI2_PURPOSE_BASE):
    cdef double[::1] df = np.ascontiguousarray(np.asarray(dfs, dtype=np.float64).reshape(-1))
    cdef Py_ssize_t m = df.shape[0], r, i
    out = np.empty((reps, m))
    cdef double[:, ::1] o = out
    cdef uint64_t s = <uint64_t>seed, cell = <uint64_t>cell_id, r0 = <uint64_t>rep0
    cdef uint64_t p0 = <uint64_t>purpose0
    with nogil:
        for r in range(reps):
            for i in range(m):
                o[r, i] = _chi2(s, r0 + r, cell, p0 + i, df[i])
    return out


def jacobi_eigh(a, want_vectors=True, double tol=1e-13, int max_sweeps=50):
    arr = np.array(a, dtype=np.float64, copy=True, order="C")
    if arr.ndim == 2:
        arr = arr[None]
    cdef double[:, :, ::1] A = arr
    cdef Py_ssize_t nmat = A.shape[0], p = A.shape[1], k
    vals = np.empty((nmat, p))
    conv = np.empty(nmat, dtype=bool)
    cdef double[:, ::1] V = vals
    cdef unsigned char[::1] C = conv.view(np.uint8)
    cdef bint wv = bool(want_vectors)
    vecs = np.empty((nmat, p, p)) if wv else None
    cdef double[:, :, ::1] Q
    cdef double *work = <double *>malloc(p * p * sizeof(double))
    cdef Py_ssize_t *order = <Py_ssize_t *>malloc(p * sizeof(Py_ssize_t))
    if wv:
        Q = vecs
    try:
        with nogil:
            for k in range(nmat):
                if wv:
                    C[k] = _jacobi(&A[k, 0, 0], work, p, tol, max_sweeps)
                    _sorted_diag(&A[k, 0, 0], work, p, &V[k, 0], &Q[k, 0, 0], order)
                else:
                    C[k] = _jacobi(&A[k, 0, 0], NULL, p, tol, max_sweeps)
                    _sorted_diag(&A[k, 0, 0], NULL, p, &V[k, 0], NULL, order)
    finally:
        free(work)
        free(order)
    return vals, vecs, conv


def wishart_matrices(seed, cell_id, rep0, Py_ssize_t reps, double n, chol):
    cdef double[:, ::1] L = np.ascontiguousarray(chol, dtype=np.float64)
    cdef Py_ssize_t p = L.shape[0], r
    out = np.empty((reps, p, p))
    cdef double[:, :, ::1] o = out
    cdef uint64_t s = <uint64_t>seed, cell = <uint64_t>cell_id, r0 = <uint64_t>rep0
    cdef double *buf = <double *>malloc((2 * p * p + p * p + 4) * sizeof(double))
    try:
        with nogil:
            for r in range(reps):
                _bartlett(s, cell, r0 + r, n, &L[0, 0], p, buf, buf + p * p,
                          buf + 2 * p * p, &o[r, 0, 0])
    finally:
        free(buf)
    return out


def wishart_eigvals(seed, cell_id, rep0, Py_ssize_t reps, double n, chol,
                    double tol=1e-13, int max_sweeps=50):
    cdef double[:, ::1] L = np.ascontiguousarray(chol, dtype=np.float64)
    cdef Py_ssize_t p = L.shape[0], r
    vals = np.empty((reps, p))
    conv = np.empty(reps, dtype=bool)
    cdef double[:, ::1] V = vals
    cdef unsigned char[::1] C = conv.view(np.uint8)
    cdef uint64_t s = <uint64_t>seed, cell = <uint64_t>cell_id, r0 = <uint64_t>rep0
    cdef double *buf = <double *>malloc((4 * p * p + 4) * sizeof(double))
    cdef Py_ssize_t *order = <Py_ssize_t *>malloc(p * sizeof(Py_ssize_t))
    try:
        with nogil:
            for r in range(reps):
                _bartlett(s, cell, r0 + r, n, &L[0, 0], p, buf, buf + p * p,
                          buf + 2 * p * p, buf + 3 * p * p)
                C[r] = _jacobi(buf + 3 * p * p, NULL, p, tol, max_sweeps)
                _sorted_diag(buf + 3 * p * p, NULL, p, &V[r, 0], NULL, order)
    finally:
        free(buf)
        free(order)
    return vals, conv
