# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled transfer-matrix kernels (see _kernels_py for the reference
and the coupling parametrisation)."""

import numpy as np
cimport numpy as cnp
from libc.math cimport cos, sin

cnp.import_array()

ctypedef double complex cplx


cdef extern from "<complex.h>" nogil:
    double complex conj(double complex)


cdef inline cplx _expi(double phi) noexcept nogil:
    return cos(phi) + 1j * sin(phi)


cdef inline cplx _recip(cplx a) noexcept nogil:
    # operands here are far from overflow, so skip the scaled C99 division
    return conj(a) / (a.real * a.real + a.imag * a.imag)


def chain_product(b, gaps):
    cdef const cplx[:, ::1] bv = np.ascontiguousarray(b, dtype=np.complex128)
    cdef const double[:, ::1] gv = np.ascontiguousarray(gaps, dtype=np.float64)
    cdef Py_ssize_t n_cfg = bv.shape[0], n_atoms = bv.shape[1]
    out = np.empty((n_cfg, 4), dtype=np.complex128)
    cdef cplx[:, ::1] ov = out
    cdef Py_ssize_t c, j
    cdef cplx m11, m12, m21, m22, bj, ph, phc, s1, s2
    with nogil:
        for c in range(n_cfg):
            m11 = 1.0
            m12 = 0.0
            m21 = 0.0
            m22 = 1.0
            for j in range(n_atoms):
                if j > 0:
                    ph = _expi(gv[c, j - 1])
                    phc = conj(ph)
                    m11 = m11 * ph
                    m12 = m12 * ph
                    m21 = m21 * phc
                    m22 = m22 * phc
                bj = bv[c, j]
                s1 = bj * (m11 + m21)
                s2 = bj * (m12 + m22)
                m11 = m11 - s1
                m12 = m12 - s2
                m21 = m21 + s1
                m22 = m22 + s2
            ov[c, 0] = m11
            ov[c, 1] = m12
            ov[c, 2] = m21
            ov[c, 3] = m22
    return out


def mirror_response(m, kx):
    cdef const cplx[:, ::1] mv = np.ascontiguousarray(m, dtype=np.complex128)
    cdef const double[:, ::1] kv = np.ascontiguousarray(kx, dtype=np.float64)
    cdef Py_ssize_t n_cfg = kv.shape[0], n_pts = kv.shape[1]
    refl = np.empty((n_cfg, n_pts), dtype=np.complex128)
    d_refl = np.empty((n_cfg, n_pts), dtype=np.complex128)
    den_out = np.empty((n_cfg, n_pts), dtype=np.complex128)
    cdef cplx[:, ::1] rv = refl
    cdef cplx[:, ::1] dv = d_refl
    cdef cplx[:, ::1] ev = den_out
    cdef Py_ssize_t c, p
    cdef cplx z, num, den, det, inv
    with nogil:
        for c in range(n_cfg):
            det = mv[c, 0] * mv[c, 3] - mv[c, 2] * mv[c, 1]
            for p in range(n_pts):
                z = _expi(2.0 * kv[c, p])
                num = mv[c, 2] + z * mv[c, 0]
                den = mv[c, 3] + z * mv[c, 1]
                inv = _recip(den)
                rv[c, p] = -num * inv
                dv[c, p] = -2j * z * det * inv * inv
                ev[c, p] = den
    return refl, d_refl, den_out
