# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled fixed-step RK4 kernels; same contract as ``_pykernels``."""

import numpy as np
cimport numpy as cnp
from libc.math cimport tanh, fabs, isfinite
from libc.stdlib cimport malloc, free

cnp.import_array()

BACKEND = "cython"

cdef enum:
    NETWORK = 0
    UNIFORM = 1
    GENERAL = 2


cdef struct Model:
    int kind
    int n
    const double* A
    const double* d
    const double* gain
    const double* beta
    double eps
    double yth2
    double* work


cdef void deriv(Model* m, const double* z, double* out) noexcept nogil:
    cdef int n = m.n
    cdef int i, j
    cdef double acc, acc2, y
    cdef double* s = m.work
    for j in range(n):
        s[j] = tanh(z[j])
    if m.kind == NETWORK:
        for i in range(n):
            acc = 0.0
            for j in range(n):
                acc += m.A[i * n + j] * s[j]
            out[i] = -m.d[i] * z[i] + m.gain[i] * acc + m.beta[i]
    elif m.kind == UNIFORM:
        y = 0.0
        for i in range(n):
            acc = 0.0
            for j in range(n):
                acc += m.A[i * n + j] * s[j]
            out[i] = -m.d[i] * z[i] + z[n] * acc
            y += z[i]
        y /= n
        out[n] = m.eps * (m.yth2 - y * y)
    else:
        for i in range(n):
            acc = 0.0
            acc2 = 0.0
            for j in range(n):
                acc += m.A[i * n + j] * s[j]
                acc2 += m.A[i * n + j] * z[n + j]
            out[i] = -m.d[i] * z[i] + z[2 * n + i] * acc
            out[n + i] = -m.d[i] * z[n + i] + acc2 + out[i]
            out[2 * n + i] = m.eps * (m.yth2 - z[n + i] * z[n + i])


cdef tuple drive(Model* m, cnp.ndarray[cnp.double_t, ndim=1] z0, double dt, long nsteps,
                 long stride, double guard, int u_lo, int u_hi, double u_max):
    cdef int dim = z0.shape[0]
    cdef int nrec_max = <int>(nsteps // stride + 2)
    cdef cnp.ndarray[cnp.double_t, ndim=2] rec = np.empty((nrec_max, dim))
    cdef cnp.ndarray[cnp.int64_t, ndim=1] steps = np.empty(nrec_max, dtype=np.int64)
    cdef double* z = <double*>malloc(dim * sizeof(double))
    cdef double* zt = <double*>malloc(dim * sizeof(double))
    cdef double* zn = <double*>malloc(dim * sizeof(double))
    cdef double* k1 = <double*>malloc(dim * sizeof(double))
    cdef double* k2 = <double*>malloc(dim * sizeof(double))
    cdef double* k3 = <double*>malloc(dim * sizeof(double))
    cdef double* k4 = <double*>malloc(dim * sizeof(double))
    cdef int i, nrec = 0, status = 0
    cdef long k = 0
    cdef double h2 = 0.5 * dt, h6 = dt / 6.0, umax_seen
    cdef bint bad
    try:
        for i in range(dim):
            z[i] = z0[i]
            rec[0, i] = z[i]
        steps[0] = 0
        nrec = 1
        with nogil:
            while k < nsteps:
                deriv(m, z, k1)
                for i in range(dim):
                    zt[i] = z[i] + h2 * k1[i]
                deriv(m, zt, k2)
                for i in range(dim):
                    zt[i] = z[i] + h2 * k2[i]
                deriv(m, zt, k3)
                for i in range(dim):
                    zt[i] = z[i] + dt * k3[i]
                deriv(m, zt, k4)
                bad = False
                for i in range(dim):
                    zn[i] = z[i] + h6 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
                    if not isfinite(zn[i]) or fabs(zn[i]) > guard:
                        bad = True
                if bad:
                    status = 1
                    break
                for i in range(dim):
                    z[i] = zn[i]
                k += 1
                if u_hi > u_lo:
                    umax_seen = z[u_lo]
                    for i in range(u_lo, u_hi):
                        if z[i] > umax_seen:
                            umax_seen = z[i]
                    if umax_seen > u_max:
                        status = 2
                        with gil:
                            steps[nrec] = k
                            for i in range(dim):
                                rec[nrec, i] = z[i]
                        nrec += 1
                        break
                if k % stride == 0 or k == nsteps:
                    with gil:
                        steps[nrec] = k
                        for i in range(dim):
                            rec[nrec, i] = z[i]
                    nrec += 1
        last = np.empty(dim)
        for i in range(dim):
            last[i] = z[i]
    finally:
        free(z); free(zt); free(zn); free(k1); free(k2); free(k3); free(k4)
    return steps[:nrec].copy(), rec[:nrec].copy(), status, k, last


cdef Model make_model(int kind, cnp.ndarray[cnp.double_t, ndim=2] A,
                      cnp.ndarray[cnp.double_t, ndim=1] d, double* work):
    cdef Model m
    m.kind = kind
    m.n = d.shape[0]
    m.A = &A[0, 0]
    m.d = &d[0]
    m.gain = NULL
    m.beta = NULL
    m.eps = 0.0
    m.yth2 = 0.0
    m.work = work
    return m


def rk4_network(A, d, gain, beta, x0, double dt, long nsteps, long stride=1, double guard=1e6):
    cdef cnp.ndarray[cnp.double_t, ndim=2] A_ = np.ascontiguousarray(A, dtype=np.float64)
    cdef cnp.ndarray[cnp.double_t, ndim=1] d_ = np.ascontiguousarray(d, dtype=np.float64)
    cdef cnp.ndarray[cnp.double_t, ndim=1] g_ = np.ascontiguousarray(gain, dtype=np.float64)
    cdef cnp.ndarray[cnp.double_t, ndim=1] b_ = np.ascontiguousarray(beta, dtype=np.float64)
    cdef cnp.ndarray[cnp.double_t, ndim=1] z0 = np.array(x0, dtype=np.float64)
    cdef cnp.ndarray[cnp.double_t, ndim=1] work = np.empty(d_.shape[0])
    cdef Model m = make_model(NETWORK, A_, d_, &work[0])
    m.gain = &g_[0]
    m.beta = &b_[0]
    return drive(&m, z0, dt, nsteps, stride, guard, 0, 0, 0.0)


def rk4_closed_loop_uniform(A, d, z0, double eps, double yth, double dt, long nsteps,
                            long stride=1, double guard=1e6, double u_max=np.inf):
    cdef cnp.ndarray[cnp.double_t, ndim=2] A_ = np.ascontiguousarray(A, dtype=np.float64)
    cdef cnp.ndarray[cnp.double_t, ndim=1] d_ = np.ascontiguousarray(d, dtype=np.float64)
    cdef cnp.ndarray[cnp.double_t, ndim=1] z = np.array(z0, dtype=np.float64)
    cdef cnp.ndarray[cnp.double_t, ndim=1] work = np.empty(d_.shape[0])
    cdef int n = d_.shape[0]
    cdef Model m = make_model(UNIFORM, A_, d_, &work[0])
    m.eps = eps
    m.yth2 = yth * yth
    return drive(&m, z, dt, nsteps, stride, guard, n, n + 1, u_max)


def rk4_closed_loop_general(A, d, z0, double eps, double yth, double dt, long nsteps,
                            long stride=1, double guard=1e6, double u_max=np.inf):
    cdef cnp.ndarray[cnp.double_t, ndim=2] A_ = np.ascontiguousarray(A, dtype=np.float64)
    cdef cnp.ndarray[cnp.double_t, ndim=1] d_ = np.ascontiguousarray(d, dtype=np.float64)
    cdef cnp.ndarray[cnp.double_t, ndim=1] z = np.array(z0, dtype=np.float64)
    cdef cnp.ndarray[cnp.double_t, ndim=1] work = np.empty(d_.shape[0])
    cdef int n = d_.shape[0]
    cdef Model m = make_model(GENERAL, A_, d_, &work[0])
    m.eps = eps
    m.yth2 = yth * yth
    return drive(&m, z, dt, nsteps, stride, guard, 2 * n, 3 * n, u_max)
