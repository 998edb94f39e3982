import math

import numpy as np
import pytest

from ceam.errors import DegenerateError, PoleError
from ceam.model import IdealArraySpec, homogeneous_system
from ceam.scattering import ceam_coeffs, reflection_on_grid, single_atom_coeffs
from ceam.sensitivity import (
    asymptotic_peak,
    cramer_rao_bound,
    finesse_report,
    find_working_point,
    phase_derivative_analytic,
    phase_derivative_numeric,
    phase_slope_closed_form,
    qfi_state_vector,
    scaling_sweep,
    sensitivity_report,
    theta_function,
)


def test_working_point_peak_formula():
    # peak slope = 2 |t|^2 / eps^2 with eps = 1 - |r|
    c = ceam_coeffs(IdealArraySpec(10, 1.0))
    wp = find_working_point(c)
    eps = 1 - abs(c.r)
    assert wp.epsilon_r == pytest.approx(eps)
    assert wp.peak_sensitivity == pytest.approx(2 * abs(c.t) ** 2 / eps**2, rel=1e-9)
    assert wp.verified
    assert 0 <= wp.kx_opt < math.pi


def test_working_point_resonant_is_degenerate():
    wp = find_working_point(single_atom_coeffs(0.0, 4.0))
    assert wp.degenerate
    assert wp.peak_sensitivity == 0.0
    with pytest.raises(DegenerateError):
        sensitivity_report(IdealArraySpec(4, 0.0))


def test_analytic_slope_matches_transfer_matrix():
    spec = homogeneous_system(6, 1.3, 0.4)
    kx = np.linspace(0.05, 3.0, 25)
    refl, d_refl = reflection_on_grid(spec, kx)
    tm = (d_refl / refl).imag
    closed = phase_slope_closed_form(ceam_coeffs(IdealArraySpec(6, 1.3)), kx)
    np.testing.assert_allclose(closed, tm, rtol=1e-9)


def test_analytic_pole_raises():
    with pytest.raises(PoleError):
        phase_derivative_analytic(single_atom_coeffs(0.0, 1.0), 0.0)


@pytest.mark.parametrize("precision", ["extended", "double"])
def test_numeric_derivative_agrees(precision):
    spec = homogeneous_system(8, 0.9, 0.3)
    ref = phase_derivative_analytic(ceam_coeffs(IdealArraySpec(8, 0.9)), 0.3)
    nd = phase_derivative_numeric(spec, precision=precision)
    assert nd.value == pytest.approx(ref, rel=1e-6)
    assert nd.error < 1e-4 * abs(ref)


def test_numeric_derivative_step_bounds():
    with pytest.raises(ValueError):
        phase_derivative_numeric(homogeneous_system(2, 1.0, 0.3), step=1e-1)
    with pytest.raises(ValueError):
        theta_function(homogeneous_system(2, 1.0, 0.3), precision="quad")


def test_scaling_approaches_asymptote():
    res = scaling_sweep([8, 16, 32, 64, 128], 1.0)
    assert res.slope_restricted == pytest.approx(2.0, abs=0.05)
    assert res.peak_dtheta_dkx[-1] == pytest.approx(asymptotic_peak(128, 1.0), rel=1e-3)
    assert len(res.rows) == 5


def test_scaling_rejects_zero_detuning():
    with pytest.raises(DegenerateError):
        scaling_sweep([4, 8], 0.0)


def test_qfi_state_vector_is_slope_squared():
    spec = homogeneous_system(10, 1.0, 0.2)
    slope = phase_derivative_analytic(ceam_coeffs(IdealArraySpec(10, 1.0)), 0.2)
    assert qfi_state_vector(theta_function(spec), 0.2) == pytest.approx(slope**2, rel=1e-6)


def test_cramer_rao_bound():
    assert cramer_rao_bound(4.0, 100) == pytest.approx(0.05)
    with pytest.raises(DegenerateError):
        cramer_rao_bound(0.0)
    with pytest.raises(ValueError):
        cramer_rao_bound(1.0, 0)


def test_finesse_limits():
    assert finesse_report(1.0).finesse == math.inf
    rep = finesse_report(0.81, 1.0)
    assert rep.composite_r == pytest.approx(0.9)
    assert rep.finesse == pytest.approx(math.pi * 0.9 / (1 - 0.81))
    assert rep.n_bounces == pytest.approx(rep.finesse / math.pi)
    with pytest.raises(ValueError):
        finesse_report(0.0)


def test_sensitivity_report_si_scaling():
    rep = sensitivity_report(IdealArraySpec(10, 1.0), shots=100, k=2.0)
    assert rep.at_optimum
    assert rep.dtheta_dx == pytest.approx(2 * rep.dtheta_dkx)
    assert rep.crb == pytest.approx(1 / (10 * abs(rep.dtheta_dx)))
