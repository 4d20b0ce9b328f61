# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot loops; see ``_fallback`` for the reference semantics."""

import numpy as np

from libc.math cimport cos, exp, log, sin, sqrt, INFINITY


def weak_walk(double[:, ::1] logw, const double[::1] eigenvalues, double delta_p,
              const double[:, ::1] u, const double[:, ::1] z, double[:, ::1] outcomes,
              const long long[::1] snap_steps, double[:, :, ::1] snaps):
    cdef Py_ssize_t n = u.shape[0], m = u.shape[1], d = eigenvalues.shape[0]
    cdef Py_ssize_t nsnap = snap_steps.shape[0]
    cdef Py_ssize_t t, j, i, k, last, snap
    cdef double width = delta_p * sqrt(0.5)
    cdef double inv_var = 1.0 / (delta_p * delta_p)
    cdef double cum, p, top, total, diff
    with nogil:
        for t in range(n):
            last = d - 1
            while last > 0 and logw[t, last] == -INFINITY:
                last -= 1
            snap = 0
            for j in range(m):
                k = last
                cum = 0.0
                for i in range(d):
                    cum = cum + exp(logw[t, i])
                    if u[t, j] < cum:
                        k = i
                        break
                p = eigenvalues[k] + z[t, j] * width
                outcomes[t, j] = p
                top = -INFINITY
                for i in range(d):
                    diff = p - eigenvalues[i]
                    logw[t, i] = logw[t, i] - diff * diff * inv_var
                    if logw[t, i] > top:
                        top = logw[t, i]
                total = 0.0
                for i in range(d):
                    total = total + exp(logw[t, i] - top)
                total = top + log(total)
                for i in range(d):
                    logw[t, i] = logw[t, i] - total
                while snap < nsnap and snap_steps[snap] == j + 1:
                    for i in range(d):
                        snaps[t, snap, i] = logw[t, i]
                    snap += 1


def propagate_two_level(h0, v, g, double dt, psi):
    cdef double complex[:, ::1] hm = np.ascontiguousarray(h0, dtype=complex)
    cdef double complex[:, ::1] vm = np.ascontiguousarray(v, dtype=complex)
    cdef double[::1] gm = np.ascontiguousarray(g, dtype=float)
    cdef double complex[::1] state = np.array(psi, dtype=complex)
    cdef Py_ssize_t k, steps = gm.shape[0]
    cdef double a, bz, b, c, s, gk
    cdef double complex h01, phase, u00, u01, u10, u11, x0, x1
    with nogil:
        for k in range(steps):
            gk = gm[k]
            a = 0.5 * ((hm[0, 0].real + gk * vm[0, 0].real) + (hm[1, 1].real + gk * vm[1, 1].real))
            bz = 0.5 * ((hm[0, 0].real + gk * vm[0, 0].real) - (hm[1, 1].real + gk * vm[1, 1].real))
            h01 = hm[0, 1] + gk * vm[0, 1]
            b = sqrt(bz * bz + h01.real * h01.real + h01.imag * h01.imag)
            c = cos(b * dt)
            if b > 0:
                s = sin(b * dt) / b
            else:
                s = dt
            phase = cos(a * dt) - 1j * sin(a * dt)
            u00 = phase * (c - 1j * s * bz)
            u11 = phase * (c + 1j * s * bz)
            u01 = phase * (-1j * s * h01)
            u10 = phase * (-1j * s * h01.conjugate())
            x0 = u00 * state[0] + u01 * state[1]
            x1 = u10 * state[0] + u11 * state[1]
            state[0] = x0
            state[1] = x1
    return np.asarray(state)
