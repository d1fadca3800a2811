# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loop of the SNP-inclusion updates.

The expected factor load is recomputed in full for every SNP, matching the
method's published quadratic-in-Q per-sweep cost; within that budget the loop
is plain C. The NumPy fallback `_kernels_py` implements the identical contract.
"""

from libc.math cimport exp, isfinite

import numpy as np


cdef inline double _sigmoid(double x) nogil:
    cdef double e
    if x >= 0.0:
        return 1.0 / (1.0 + exp(-x))
    e = exp(x)
    return e / (1.0 + e)


def eta_factor_sweep(const double[:, ::1] XT, const double[::1] x2sum,
                     double[::1] eta_k, const double[::1] u,
                     double prior_logit, double sa2, double inv_sigma2):
    """Sequential update of eta_k[q] for q = 0..Q-1; eta_k is modified in place.

    Returns 0 on success or -(q + 1) if the logit for SNP q came out
    non-finite.
    """
    cdef Py_ssize_t Q = XT.shape[0]
    cdef Py_ssize_t N = XT.shape[1]
    cdef double[::1] m_full = np.empty(N, dtype=np.float64)
    cdef Py_ssize_t q, qp, n
    cdef double e, dot_xm, dot_xu, zeta
    cdef double half_pen = 0.5 * sa2 * inv_sigma2
    cdef int status = 0

    with nogil:
        for q in range(Q):
            for n in range(N):
                m_full[n] = 0.0
            for qp in range(Q):
                e = eta_k[qp]
                for n in range(N):
                    m_full[n] += XT[qp, n] * e
            dot_xm = 0.0
            dot_xu = 0.0
            for n in range(N):
                dot_xm += XT[q, n] * m_full[n]
                dot_xu += XT[q, n] * u[n]
            dot_xm -= eta_k[q] * x2sum[q]
            zeta = (prior_logit - half_pen * x2sum[q]
                    - sa2 * inv_sigma2 * dot_xm + inv_sigma2 * dot_xu)
            if not isfinite(zeta):
                status = -(<int> q + 1)
                break
            eta_k[q] = _sigmoid(zeta)
    return status
