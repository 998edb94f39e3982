import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ceam import _kernels_py, kernels
from ceam.scattering import coupling


def naive_chain(r, t, gaps):
    """Explicit 2x2 products of (1/t) [[t^2 - r^2, r], [-r, 1]], one configuration at a time."""
    out = []
    for rc, tc, gc in zip(r, t, gaps):
        m = np.eye(2, dtype=complex)
        for j, (rj, tj) in enumerate(zip(rc, tc)):
            if j:
                m = np.diag([np.exp(1j * gc[j - 1]), np.exp(-1j * gc[j - 1])]) @ m
            a = np.array([[tj * tj - rj * rj, rj], [-rj, 1]]) / tj
            m = a @ m
        out.append(m.reshape(-1))
    return np.array(out)


def random_chain(seed, n_cfg, n_atoms, lossless=False):
    rng = np.random.default_rng(seed)
    det = rng.uniform(-4, 4, (n_cfg, n_atoms))
    g = rng.uniform(0.5, 2, (n_cfg, n_atoms))
    gp = np.zeros_like(g) if lossless else rng.uniform(0, 0.1, (n_cfg, n_atoms))
    r = -(g / 2) / (1j * det + (g + gp) / 2)
    gaps = rng.uniform(0, 10, (n_cfg, max(n_atoms - 1, 0)))
    return coupling(det, g, gp), r, 1 + r, gaps


@pytest.mark.parametrize("n_atoms", [1, 2, 7, 40])
def test_chain_product_matches_naive(backend, n_atoms):
    b, r, t, gaps = random_chain(n_atoms, 6, n_atoms)
    np.testing.assert_allclose(kernels.chain_product(b, gaps), naive_chain(r, t, gaps), rtol=1e-11, atol=1e-11)


def test_lossless_chain_keeps_conjugate_symmetry(backend):
    b, _, _, gaps = random_chain(11, 5, 64, lossless=True)
    m = kernels.chain_product(b, gaps)
    # exact, not approximate: the structure survives rounding
    np.testing.assert_array_equal(m[:, 3], np.conj(m[:, 0]))
    np.testing.assert_array_equal(m[:, 2], np.conj(m[:, 1]))


def test_mirror_response_formula(backend):
    b, _, _, gaps = random_chain(3, 4, 5)
    m = kernels.chain_product(b, gaps)
    kx = np.linspace(0.1, 3.0, 9)[None, :].repeat(4, axis=0)
    refl, d_refl, den = kernels.mirror_response(m, kx)
    z = np.exp(2j * kx)
    expect = -(m[:, 2:3] + z * m[:, 0:1]) / (m[:, 3:4] + z * m[:, 1:2])
    np.testing.assert_allclose(refl, expect, rtol=1e-13)
    np.testing.assert_allclose(den, m[:, 3:4] + z * m[:, 1:2], rtol=1e-13)
    h = 1e-6
    fd = (kernels.mirror_response(m, kx + h)[0] - kernels.mirror_response(m, kx - h)[0]) / (2 * h)
    np.testing.assert_allclose(d_refl, fd, rtol=1e-6, atol=1e-8)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n_atoms=st.integers(1, 30))
def test_backends_agree(seed, n_atoms):
    if "cython" not in kernels.available_backends():
        pytest.skip("compiled kernels not built")
    from ceam import _kernels

    b, _, _, gaps = random_chain(seed, 3, n_atoms)
    m_ext = _kernels.chain_product(b, gaps)
    m_py = _kernels_py.chain_product(b, gaps)
    np.testing.assert_allclose(m_ext, m_py, rtol=1e-12, atol=1e-12)
    kx = np.random.default_rng(seed).uniform(0, 3, (3, 5))
    for x, y in zip(_kernels.mirror_response(m_ext, kx), _kernels_py.mirror_response(m_py, kx)):
        np.testing.assert_allclose(x, y, rtol=1e-11, atol=1e-11)


def test_python_kernel_extended_precision():
    b, r, t, gaps = random_chain(1, 2, 4)
    m = _kernels_py.chain_product(b.astype(np.clongdouble), gaps.astype(np.longdouble))
    assert m.dtype == np.clongdouble
    np.testing.assert_allclose(m.astype(complex), naive_chain(r, t, gaps), rtol=1e-12)


def test_use_backend_rejects_unknown():
    with pytest.raises(ValueError, match="unknown"):
        kernels.use_backend("fortran")
    assert kernels.backend_name() in kernels.available_backends()
