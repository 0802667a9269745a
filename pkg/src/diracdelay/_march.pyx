# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled marching kernel.  Same contract as ``_march_py.march``."""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, cos, sin

cnp.import_array()


cdef inline double complex _eix(double complex lam, double h) nogil:
    # exp(i * lam * h)
    cdef double r = exp(-lam.imag * h)
    return r * cos(lam.real * h) + 1j * (r * sin(lam.real * h))


cdef inline double complex _herm(double complex y0, double complex dy0,
                                 double complex y1, double complex dy1,
                                 double h, double t) nogil:
    cdef double t2 = t * t
    cdef double t3 = t2 * t
    return ((2 * t3 - 3 * t2 + 1) * y0 + (t3 - 2 * t2 + t) * h * dy0
            + (-2 * t3 + 3 * t2) * y1 + (t3 - t2) * h * dy1)


cdef void _march_one(double complex lam, Py_ssize_t m, double d, double frac,
                     const double complex[:, ::1] qm, const double complex[:, ::1] qp,
                     double complex[::1] sz, double complex[::1] sw,
                     double complex[::1] sdzs, double complex[::1] sdze,
                     double complex[::1] sdws, double complex[::1] sdwe,
                     double complex[::1] z, double complex[::1] w,
                     double complex[::1] dzs, double complex[::1] dze,
                     double complex[::1] dws, double complex[::1] dwe,
                     bint closed_start) noexcept nogil:
    cdef Py_ssize_t C = qm.shape[0]
    cdef Py_ssize_t k, j
    cdef double complex il = 1j * lam
    cdef double complex E, Eh, Ei, Eih, Ef, Ehf, Eif, Eihf
    cdef double complex zm, wm, ze, we, gzs, gzm, gze, gws, gwm, gwe
    cdef double h
    cdef bint partial

    if closed_start:
        for k in range(m + 1):
            z[k] = -1j * _eix(lam, k * d)
            w[k] = 1j * _eix(lam, -k * d)
        for k in range(m):
            dzs[k] = il * z[k]
            dze[k] = il * z[k + 1]
            dws[k] = -il * w[k]
            dwe[k] = -il * w[k + 1]
    else:
        for k in range(m + 1):
            z[k] = 0
            w[k] = 0
        for k in range(m):
            dzs[k] = 0
            dze[k] = 0
            dws[k] = 0
            dwe[k] = 0

    Ef = _eix(lam, d)
    Ehf = _eix(lam, 0.5 * d)
    Eif = _eix(lam, -d)
    Eihf = _eix(lam, -0.5 * d)
    for k in range(m, C):
        partial = frac > 0.0 and k == C - 1
        j = k - m
        if partial:
            h = frac * d
            E = _eix(lam, h)
            Eh = _eix(lam, 0.5 * h)
            Ei = _eix(lam, -h)
            Eih = _eix(lam, -0.5 * h)
            zm = _herm(sz[j], sdzs[j], sz[j + 1], sdze[j], d, 0.5 * frac)
            wm = _herm(sw[j], sdws[j], sw[j + 1], sdwe[j], d, 0.5 * frac)
            ze = _herm(sz[j], sdzs[j], sz[j + 1], sdze[j], d, frac)
            we = _herm(sw[j], sdws[j], sw[j + 1], sdwe[j], d, frac)
        else:
            h = d
            E = Ef
            Eh = Ehf
            Ei = Eif
            Eih = Eihf
            zm = 0.5 * (sz[j] + sz[j + 1]) + 0.125 * d * (sdzs[j] - sdze[j])
            wm = 0.5 * (sw[j] + sw[j + 1]) + 0.125 * d * (sdws[j] - sdwe[j])
            ze = sz[j + 1]
            we = sw[j + 1]
        gzs = qm[k, 0] * sw[j]
        gzm = qm[k, 1] * wm
        gze = qm[k, 2] * we
        gws = qp[k, 0] * sz[j]
        gwm = qp[k, 1] * zm
        gwe = qp[k, 2] * ze
        z[k + 1] = E * z[k] + (h / 6.0) * (E * gzs + 4.0 * Eh * gzm + gze)
        w[k + 1] = Ei * w[k] + (h / 6.0) * (Ei * gws + 4.0 * Eih * gwm + gwe)
        dzs[k] = il * z[k] + gzs
        dze[k] = il * z[k + 1] + gze
        dws[k] = -il * w[k] + gws
        dwe[k] = -il * w[k + 1] + gwe


def march(lam, Py_ssize_t m, double d, double frac, qm, qp, src=None,
          bint closed_start=True, bint store=False):
    cdef double complex[::1] lv = np.ascontiguousarray(lam, dtype=np.complex128)
    cdef const double complex[:, ::1] qmv = np.ascontiguousarray(qm, dtype=np.complex128)
    cdef const double complex[:, ::1] qpv = np.ascontiguousarray(qp, dtype=np.complex128)
    cdef Py_ssize_t nl = lv.shape[0]
    cdef Py_ssize_t C = qmv.shape[0]
    cdef Py_ssize_t i
    cdef double complex[:, ::1] Z, W, DZS, DZE, DWS, DWE
    cdef double complex[:, ::1] SZ, SW, SDZS, SDZE, SDWS, SDWE
    cdef double complex[::1] z, w, dzs, dze, dws, dwe
    cdef double complex[::1] zend, wend

    if store or src is not None:
        arrays = [np.zeros((nl, C + 1), dtype=np.complex128) for _ in range(2)]
        arrays += [np.zeros((nl, C), dtype=np.complex128) for _ in range(4)]
        Z, W, DZS, DZE, DWS, DWE = arrays
        if src is None:
            SZ, SW, SDZS, SDZE, SDWS, SDWE = Z, W, DZS, DZE, DWS, DWE
        else:
            s = [np.ascontiguousarray(x, dtype=np.complex128) for x in src]
            SZ, SW, SDZS, SDZE, SDWS, SDWE = s
        with nogil:
            for i in range(nl):
                _march_one(lv[i], m, d, frac, qmv, qpv,
                           SZ[i], SW[i], SDZS[i], SDZE[i], SDWS[i], SDWE[i],
                           Z[i], W[i], DZS[i], DZE[i], DWS[i], DWE[i], closed_start)
        if store:
            return tuple(arrays)
        return arrays[0][:, C].copy(), arrays[1][:, C].copy()

    z = np.zeros(C + 1, dtype=np.complex128)
    w = np.zeros(C + 1, dtype=np.complex128)
    dzs = np.zeros(C, dtype=np.complex128)
    dze = np.zeros(C, dtype=np.complex128)
    dws = np.zeros(C, dtype=np.complex128)
    dwe = np.zeros(C, dtype=np.complex128)
    zend_a = np.zeros(nl, dtype=np.complex128)
    wend_a = np.zeros(nl, dtype=np.complex128)
    zend = zend_a
    wend = wend_a
    with nogil:
        for i in range(nl):
            _march_one(lv[i], m, d, frac, qmv, qpv, z, w, dzs, dze, dws, dwe,
                       z, w, dzs, dze, dws, dwe, closed_start)
            zend[i] = z[C]
            wend[i] = w[C]
    return zend_a, wend_a
