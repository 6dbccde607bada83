# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled ADMM iteration kernels (same contract as ``_fallback``)."""

from libc.stdlib cimport malloc, free


cdef inline double _soft(double t, double tau) noexcept nogil:
    cdef double hi = t - tau
    cdef double lo = -t - tau
    if hi < 0.0:
        hi = 0.0
    if lo < 0.0:
        lo = 0.0
    return hi - lo


def endmember_iteration(const double[:, ::1] C, const double[:, ::1] Ginv,
                        double[:, ::1] M, double[:, ::1] U, double rho,
                        double[:, ::1] S):
    cdef Py_ssize_t L = C.shape[0], P = C.shape[1]
    cdef Py_ssize_t l, p, q
    cdef double acc, s, m_old, m, u
    cdef double r2 = 0.0, dm2 = 0.0, nS2 = 0.0, nM2 = 0.0, nU2 = 0.0
    cdef double *row = <double *> malloc(P * sizeof(double))
    if row == NULL:
        raise MemoryError()
    try:
        with nogil:
            for l in range(L):
                for q in range(P):
                    row[q] = C[l, q] + rho * (M[l, q] - U[l, q])
                for p in range(P):
                    acc = 0.0
                    for q in range(P):
                        acc = acc + row[q] * Ginv[q, p]
                    S[l, p] = acc
                for p in range(P):
                    s = S[l, p]
                    u = U[l, p]
                    m_old = M[l, p]
                    m = s + u
                    if m < 0.0:
                        m = 0.0
                    M[l, p] = m
                    u = u + (s - m)
                    U[l, p] = u
                    r2 += (s - m) * (s - m)
                    dm2 += (m - m_old) * (m - m_old)
                    nS2 += s * s
                    nM2 += m * m
                    nU2 += u * u
    finally:
        free(row)
    return r2, dm2, nS2, nM2, nU2


def abundance_iteration(const double[:, :, ::1] StX, const double[:, :, ::1] Cinv,
                        double[:, :, ::1] Q, double[:, :, ::1] D, double[:, :, ::1] W,
                        double[:, :, ::1] Z, double rho, double thresh,
                        double[:, :, ::1] A_new):
    cdef Py_ssize_t K = Q.shape[0], P = Q.shape[1], N = Q.shape[2]
    cdef Py_ssize_t k, p, q, n
    cdef double acc, a, qn, qo, w, diff, dn, do, z, dd, sd, aty, c
    cdef double r2 = 0.0, s2 = 0.0, nAx2 = 0.0, nBz2 = 0.0, nAty2 = 0.0
    cdef Py_ssize_t PN = P * N
    # y holds the right-hand side, then the forward-eliminated system, (K, P, N)
    cdef double *y = <double *> malloc(K * PN * sizeof(double))
    # per-entry carry between consecutive frames: previous dD and new Z
    cdef double *dd_prev = <double *> malloc(PN * sizeof(double))
    cdef double *z_prev = <double *> malloc(PN * sizeof(double))
    if y == NULL or dd_prev == NULL or z_prev == NULL:
        free(y)
        free(dd_prev)
        free(z_prev)
        raise MemoryError()
    try:
        with nogil:
            for k in range(K):
                for q in range(P):
                    for n in range(N):
                        acc = StX[k, q, n] + rho * (Q[k, q, n] - W[k, q, n])
                        if k > 0:
                            acc = acc + rho * (D[k - 1, q, n] - Z[k - 1, q, n])
                        if k < K - 1:
                            acc = acc + rho * (Z[k, q, n] - D[k, q, n])
                        y[k * PN + q * N + n] = acc
            # block LU solve of the coupled system, shared by every pixel
            for k in range(1, K):
                for p in range(P):
                    for q in range(P):
                        c = rho * Cinv[k - 1, p, q]
                        for n in range(N):
                            y[k * PN + p * N + n] += c * y[(k - 1) * PN + q * N + n]
            for p in range(P):
                for n in range(N):
                    A_new[K - 1, p, n] = 0.0
                for q in range(P):
                    c = Cinv[K - 1, p, q]
                    for n in range(N):
                        A_new[K - 1, p, n] += c * y[(K - 1) * PN + q * N + n]
            for k in range(K - 2, -1, -1):
                for q in range(P):
                    for n in range(N):
                        y[k * PN + q * N + n] += rho * A_new[k + 1, q, n]
                for p in range(P):
                    for n in range(N):
                        A_new[k, p, n] = 0.0
                    for q in range(P):
                        c = Cinv[k, p, q]
                        for n in range(N):
                            A_new[k, p, n] += c * y[k * PN + q * N + n]

            for k in range(K):
                for p in range(P):
                    for n in range(N):
                        a = A_new[k, p, n]
                        w = W[k, p, n]
                        qo = Q[k, p, n]
                        qn = a + w
                        if qn < 0.0:
                            qn = 0.0
                        Q[k, p, n] = qn
                        w = w + (a - qn)
                        W[k, p, n] = w
                        r2 += (a - qn) * (a - qn)
                        nAx2 += a * a
                        nBz2 += qn * qn
                        sd = qn - qo
                        aty = w
                        if k > 0:
                            sd = sd + dd_prev[p * N + n]
                            aty = aty + z_prev[p * N + n]
                        if k < K - 1:
                            diff = A_new[k + 1, p, n] - a
                            z = Z[k, p, n]
                            do = D[k, p, n]
                            dn = _soft(diff + z, thresh)
                            D[k, p, n] = dn
                            z = z + (diff - dn)
                            Z[k, p, n] = z
                            dd = dn - do
                            r2 += (diff - dn) * (diff - dn)
                            nAx2 += diff * diff
                            nBz2 += dn * dn
                            sd = sd - dd
                            aty = aty - z
                            dd_prev[p * N + n] = dd
                            z_prev[p * N + n] = z
                        s2 += sd * sd
                        nAty2 += aty * aty
    finally:
        free(y)
        free(dd_prev)
        free(z_prev)
    return r2, s2, nAx2, nBz2, nAty2
