# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels (numpy twin: _kernels_py.py).

pairwise_sum / bracket_fill serve the rank-1 two-photon hierarchy;
n3_stage evaluates the full three-photon family block with shared
per-stage brackets and fixed row-streaming accumulation order.
"""

import numpy as np

from libc.math cimport sqrt


cdef double complex _pairwise(const double complex* a, Py_ssize_t n) noexcept nogil:
    cdef double complex s = 0
    cdef Py_ssize_t i, h
    if n <= 8:
        for i in range(n):
            s = s + a[i]
        return s
    h = n // 2
    return _pairwise(a, h) + _pairwise(a + h, n - h)


def pairwise_sum(const double complex[::1] x):
    """Deterministic pairwise reduction of a complex vector."""
    if x.shape[0] == 0:
        return 0j
    return complex(_pairwise(&x[0], x.shape[0]))


def bracket_fill(double complex[::1] out, const double complex[::1] integrand):
    """Per-element feedback bracket: out[i] = sum(integrand) for every i.

    The bracket is evaluated once per matrix element (the element-graph cost
    model of the two-photon family); each evaluation is the same pairwise
    reduction, so hoisting it is bit-identical and this loop is the honest
    O(N^2)-per-step path.
    """
    cdef Py_ssize_t i, n = out.shape[0], m = integrand.shape[0]
    if m == 0:
        out[:] = 0j
        return
    with nogil:
        for i in range(n):
            out[i] = _pairwise(&integrand[0], m)


def n3_stage(double gamma, double complex eiphi, int theta, double complex ftau,
             double complex ce, double complex ce2,
             const double[::1] w, const double[::1] wpair,
             const double complex[::1] fpair,
             const double complex[::1] cg, const double complex[::1] cgq,
             const double complex[::1] h2,
             const double complex[::1] EE, const double complex[:, ::1] CE,
             const double complex[::1] A, const double complex[:, ::1] B,
             const double complex[::1] E3, const double complex[::1] G3,
             const double complex[::1] EE_d, const double complex[:, ::1] CE_d,
             const double complex[::1] A_d, const float complex[:, ::1] B_d,
             const double complex[::1] E3_d, const double complex[::1] G3_d,
             double complex[::1] dEE, double complex[:, ::1] dCE,
             double complex[::1] dA, double complex[:, ::1] dB,
             double complex[::1] dE3, double complex[::1] dG3):
    """One RHS evaluation of the three-photon family block (see numpy twin)."""
    cdef Py_ssize_t n = w.shape[0]
    cdef Py_ssize_t npair = wpair.shape[0]
    cdef Py_ssize_t a, b, p
    cdef double g = gamma
    cdef double rt3g = sqrt(3.0 * g)
    cdef double complex fb = 0
    cdef double complex U = 0
    cdef double complex c, acc, drv, cgc2, cc2, rr

    scratch = np.empty((5, n), dtype=np.complex128)
    qbuf = np.empty(npair, dtype=np.complex128)
    cdef double complex[:, ::1] sc = scratch
    cdef double complex[::1] Q = qbuf
    cdef double complex[::1] V = sc[0]
    cdef double complex[::1] Wg = sc[1]
    cdef double complex[::1] colh = sc[2]
    cdef double complex[::1] colw = sc[3]
    cdef double complex[::1] R = sc[4]

    if theta:
        fb = g * eiphi
    drv = 2.0 * rt3g * ftau
    cc2 = 2.0 * ce.conjugate()

    with nogil:
        if theta:
            # V[b] = ce EE_d[b] + int dt1 cg[t1] CE_d[t1, b]
            for b in range(n):
                V[b] = ce * EE_d[b]
            for a in range(n):
                c = w[a] * cgq[a]
                for b in range(n):
                    V[b] = V[b] + c * CE_d[a, b]
            # Q[p] = ce A_d[p] + int dt1 cg[t1] B_d[t1, p]
            for p in range(npair):
                Q[p] = ce * A_d[p]
            for a in range(n):
                c = w[a] * cgq[a]
                for p in range(npair):
                    Q[p] = Q[p] + c * B_d[a, p]
            # U = int dt2 EE E3_d + (1/2) iint A G3_d
            U = 0
            for b in range(n):
                U = U + w[b] * EE[b] * E3_d[b]
            for p in range(npair):
                U = U + wpair[p] * A[p] * G3_d[p]
            # Wg[a] = int dt2 CE[a,:] E3_d + (1/2) iint B[a,:] G3_d
            for a in range(n):
                acc = 0
                for b in range(n):
                    acc = acc + CE[a, b] * (w[b] * E3_d[b])
                for p in range(npair):
                    acc = acc + B[a, p] * (wpair[p] * G3_d[p])
                Wg[a] = acc

        # lower couplings
        for b in range(n):
            dEE[b] = -g * EE[b]
        if theta:
            for b in range(n):
                dEE[b] = dEE[b] + fb * (EE_d[b] - cc2 * V[b])
        for a in range(n):
            if theta:
                cgc2 = 2.0 * cg[a].conjugate()
                for b in range(n):
                    dCE[a, b] = -g * CE[a, b] + fb * (CE_d[a, b] - cgc2 * V[b])
            else:
                for b in range(n):
                    dCE[a, b] = -g * CE[a, b]
        for p in range(npair):
            dA[p] = -g * A[p]
        if theta:
            for p in range(npair):
                dA[p] = dA[p] + fb * (A_d[p] - cc2 * Q[p])
        for a in range(n):
            if theta:
                cgc2 = 2.0 * cg[a].conjugate()
                for p in range(npair):
                    dB[a, p] = -g * B[a, p] + fb * (B_d[a, p] - cgc2 * Q[p])
            else:
                for p in range(npair):
                    dB[a, p] = -g * B[a, p]

        # e-branch element: columns of conj(CE) against h2 and Wg
        for b in range(n):
            colh[b] = 0
            colw[b] = 0
        for a in range(n):
            c = w[a] * h2[a]
            for b in range(n):
                colh[b] = colh[b] + CE[a, b].conjugate() * c
        if theta:
            for a in range(n):
                c = w[a] * Wg[a]
                for b in range(n):
                    colw[b] = colw[b] + CE[a, b].conjugate() * c
        for b in range(n):
            dE3[b] = -g * E3[b] + drv * (EE[b].conjugate() * ce2 + colh[b])
        if theta:
            for b in range(n):
                dE3[b] = dE3[b] + fb * (E3_d[b] - 2.0 * (EE[b].conjugate() * U + colw[b]))

        # g-branch element
        for p in range(npair):
            dG3[p] = (-g * G3[p] - rt3g * ftau * fpair[p]
                      + drv * ce2 * A[p].conjugate())
        if theta:
            for p in range(npair):
                dG3[p] = dG3[p] + fb * (G3_d[p] - 2.0 * U * A[p].conjugate())
        for a in range(n):
            R[a] = drv * (w[a] * h2[a])
        if theta:
            for a in range(n):
                R[a] = R[a] - 2.0 * fb * (w[a] * Wg[a])
        for a in range(n):
            rr = R[a]
            for p in range(npair):
                dG3[p] = dG3[p] + B[a, p].conjugate() * rr
