"""Pure-NumPy implementation of the transfer-matrix kernels.

Same signatures and conventions as the compiled ``_kernels`` module. Also
used directly, in extended precision, by the finite-difference oracle.

Each atom enters through its coupling ``b = (gamma/2) / (i detuning + gamma'/2)``.
In terms of the single-atom amplitudes (``r = -b t``, ``t = 1 + r``) the
transfer matrix ``(1/t) [[t^2 - r^2, r], [-r, 1]]`` is exactly
``[[1 - b, -b], [b, 1 + b]]``. For a lossless atom ``b`` is purely imaginary,
so every factor has the form ``[[a, c], [conj c, conj a]]``; that form
survives rounding in complex products, which keeps ``|R| = 1`` to machine
precision even where the chain entries are large.
"""

import numpy as np


def _recip(a):
    return np.conj(a) / (a.real * a.real + a.imag * a.imag)


def chain_product(b, gaps):
    """Multiply per-atom transfer matrices along the array.

    Parameters
    ----------
    b : complex array, shape (n_cfg, n_atoms)
        Per-atom coupling ``(gamma/2) / (i detuning + gamma'/2)``.
    gaps : real array, shape (n_cfg, n_atoms - 1)
        Propagation phases between neighbouring atoms.

    Returns
    -------
    complex array, shape (n_cfg, 4)
        ``(m11, m12, m21, m22)`` of ``M_N P_{N-1} ... P_1 M_1``.
    """
    b = np.asarray(b)
    gaps = np.asarray(gaps)
    ctype = np.result_type(b.dtype, np.complex128)
    n_cfg, n_atoms = b.shape
    m11 = np.ones(n_cfg, dtype=ctype)
    m12 = np.zeros(n_cfg, dtype=ctype)
    m21 = np.zeros(n_cfg, dtype=ctype)
    m22 = np.ones(n_cfg, dtype=ctype)
    for j in range(n_atoms):
        if j > 0:
            ph = np.exp(1j * gaps[:, j - 1].astype(ctype))
            phc = np.conj(ph)
            m11, m12 = m11 * ph, m12 * ph
            m21, m22 = m21 * phc, m22 * phc
        bj = b[:, j]
        m11, m12, m21, m22 = (
            m11 - bj * (m11 + m21),
            m12 - bj * (m12 + m22),
            m21 + bj * (m11 + m21),
            m22 + bj * (m12 + m22),
        )
    return np.stack([m11, m12, m21, m22], axis=1)


def mirror_response(m, kx):
    """Reflection off the array closed by a mirror, and its kx-derivative.

    ``m`` has shape (n_cfg, 4); ``kx`` has shape (n_cfg, n_pts). Returns
    ``(R, dR/dkx, denominator)``, each of shape (n_cfg, n_pts).
    """
    m = np.asarray(m)
    kx = np.asarray(kx)
    ctype = np.result_type(m.dtype, np.complex128)
    z = np.exp(2j * kx.astype(ctype))
    m11, m12, m21, m22 = (m[:, i : i + 1] for i in range(4))
    num = m21 + z * m11
    den = m22 + z * m12
    inv = _recip(den)
    refl = -num * inv
    d_refl = -2j * z * (m11 * m22 - m21 * m12) * inv * inv
    return refl, d_refl, den
