# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled penalized eigen-step.

Mirrors ``cise._pure.penalized_step`` with direct LAPACK calls and hand-rolled
small-matrix products; the problem sizes here (p up to a few dozen) make
numpy's per-call overhead the dominant cost of the pure path. Only the top-d
eigenpairs are computed (dsyevr index range), which is the other substantial
saving over a full decomposition.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport sqrt
from scipy.linalg.cython_lapack cimport dlamch, dsyevd, dsyevr

cnp.import_array()

NAME = "compiled"


cdef int _top_eigpairs(double[:, ::1] a, double[::1] w_out,
                       double[:, ::1] z_rows, int p, int d) except -1:
    # Top-d eigenpairs of a symmetric matrix, ascending within the selection.
    # The row-major buffer doubles as column-major (symmetric input); on
    # exit eigenvector j occupies row j of `z_rows`.
    cdef int n = p, lda = p, ldz = p, m = 0, info = 0
    cdef int il = p - d + 1, iu = p
    cdef int lwork = 26 * p
    cdef int liwork = 10 * p
    cdef char jobz = b"V"
    cdef char rng = b"I"
    cdef char uplo = b"L"
    cdef char cmach = b"S"
    cdef double vl = 0.0, vu = 0.0
    cdef double abstol = 2.0 * dlamch(&cmach)
    cdef cnp.ndarray work = np.empty(lwork, dtype=np.float64)
    cdef cnp.ndarray iwork = np.empty(liwork, dtype=np.int32)
    cdef cnp.ndarray isuppz = np.empty(2 * max(1, d), dtype=np.int32)
    cdef cnp.ndarray wfull = np.empty(p, dtype=np.float64)
    cdef double[::1] wv = work
    cdef int[::1] iv = iwork
    cdef int[::1] sz = isuppz
    cdef double[::1] wf = wfull
    dsyevr(&jobz, &rng, &uplo, &n, &a[0, 0], &lda, &vl, &vu, &il, &iu,
           &abstol, &m, &wf[0], &z_rows[0, 0], &ldz, &sz[0], &wv[0], &lwork,
           &iv[0], &liwork, &info)
    if info != 0 or m != d:
        raise np.linalg.LinAlgError(f"dsyevr failed: info={info}, m={m}")
    cdef int c
    for c in range(d):
        w_out[c] = wf[c]
    return 0


cdef double _lam_max(double[:, ::1] a, int d) except -1.0:
    # Largest eigenvalue of a tiny symmetric PSD matrix (jobz='N').
    cdef int n = d, lda = d, info = 0
    cdef int lwork = 1 + 2 * d
    cdef int liwork = 1
    cdef char jobz = b"N"
    cdef char uplo = b"L"
    cdef cnp.ndarray w = np.empty(d, dtype=np.float64)
    cdef cnp.ndarray work = np.empty(lwork, dtype=np.float64)
    cdef cnp.ndarray iwork = np.empty(liwork, dtype=np.int32)
    cdef double[::1] wv = w
    cdef double[::1] wk = work
    cdef int[::1] iv = iwork
    dsyevd(&jobz, &uplo, &n, &a[0, 0], &lda, &wv[0], &wk[0], &lwork,
           &iv[0], &liwork, &info)
    if info != 0:
        raise np.linalg.LinAlgError(f"dsyevd failed with info={info}")
    return wv[d - 1]


def penalized_step(double[:, ::1] g, double[:, ::1] w_half, double[::1] hdiag,
                   int d, gamma_prev=None):
    """See ``cise._pure.penalized_step`` for the contract."""
    cdef int p = g.shape[0]
    cdef int i, j, k, c
    cdef double acc

    cdef cnp.ndarray a_arr = np.empty((p, p), dtype=np.float64)
    cdef double[:, ::1] a = a_arr
    # a = g - 0.5 * w_half @ diag(hdiag) @ w_half (symmetric, fill both halves)
    for i in range(p):
        for j in range(i, p):
            acc = 0.0
            for k in range(p):
                acc += w_half[i, k] * hdiag[k] * w_half[j, k]
            a[i, j] = g[i, j] - 0.5 * acc
            a[j, i] = a[i, j]

    cdef cnp.ndarray lam_asc = np.empty(d, dtype=np.float64)
    cdef double[::1] la = lam_asc
    cdef cnp.ndarray z_arr = np.empty((d, p), dtype=np.float64)
    cdef double[:, ::1] z = z_arr
    _top_eigpairs(a, la, z, p, d)

    cdef cnp.ndarray gamma_arr = np.empty((p, d), dtype=np.float64)
    cdef double[:, ::1] gamma = gamma_arr
    cdef cnp.ndarray lam_arr = np.empty(d, dtype=np.float64)
    cdef double[::1] lam = lam_arr
    for c in range(d):
        lam[c] = la[d - 1 - c]
        for i in range(p):
            gamma[i, c] = z[d - 1 - c, i]

    cdef cnp.ndarray v_arr = np.empty((p, d), dtype=np.float64)
    cdef double[:, ::1] v = v_arr
    cdef cnp.ndarray rn_arr = np.empty(p, dtype=np.float64)
    cdef double[::1] rn = rn_arr
    for i in range(p):
        acc = 0.0
        for c in range(d):
            v[i, c] = 0.0
        for k in range(p):
            for c in range(d):
                v[i, c] += w_half[i, k] * gamma[k, c]
        for c in range(d):
            acc += v[i, c] * v[i, c]
        rn[i] = sqrt(acc)

    cdef double dist
    cdef double[:, ::1] gp
    cdef cnp.ndarray ct_arr, r_arr
    cdef double[:, ::1] ct, r
    if gamma_prev is None:
        dist = float("nan")
    else:
        gp = gamma_prev
        # resid = gamma - gp @ (gp.T @ gamma); dist = sqrt(lam_max(resid.T resid))
        ct_arr = np.empty((d, d), dtype=np.float64)
        ct = ct_arr
        for i in range(d):
            for j in range(d):
                acc = 0.0
                for k in range(p):
                    acc += gp[k, i] * gamma[k, j]
                ct[i, j] = acc
        r_arr = np.empty((p, d), dtype=np.float64)
        r = r_arr
        for i in range(p):
            for j in range(d):
                acc = gamma[i, j]
                for k in range(d):
                    acc -= gp[i, k] * ct[k, j]
                r[i, j] = acc
        ct_arr = np.empty((d, d), dtype=np.float64)
        ct = ct_arr
        for i in range(d):
            for j in range(i, d):
                acc = 0.0
                for k in range(p):
                    acc += r[k, i] * r[k, j]
                ct[i, j] = acc
                ct[j, i] = acc
        dist = sqrt(max(_lam_max(ct, d), 0.0))

    return gamma_arr, v_arr, rn_arr, lam_arr, dist
