import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ceam.errors import DegenerateError, EstimationError
from ceam.estimator import (
    PhaseModel,
    apply_reflection_phase,
    classical_fisher_per_shot,
    estimate_x,
    monte_carlo,
    port_b_probability,
    prepare_initial_state,
    quadrature_readout_phase,
    recombine_and_probabilities,
    sample_shots,
)
from ceam.model import homogeneous_system
from ceam.scattering import reflection_on_grid


def test_initial_state_normalised():
    assert prepare_initial_state().norm == pytest.approx(1.0)


@given(st.floats(-10, 10))
def test_port_probability_from_state(theta):
    state = apply_reflection_phase(prepare_initial_state(), theta)
    p_a, p_b = recombine_and_probabilities(state)
    assert p_a + p_b == pytest.approx(1.0, abs=1e-14)
    assert p_b == pytest.approx(float(port_b_probability(theta)), abs=1e-14)


@given(st.floats(0.1, 3.0))
def test_fisher_per_shot_is_one(theta):
    assert float(classical_fisher_per_shot(theta)) == pytest.approx(1.0, abs=1e-9)


def test_sample_shots_validation():
    rng = np.random.default_rng(0)
    with pytest.raises(ValueError):
        sample_shots(1.5, 10, rng)
    with pytest.raises(ValueError):
        sample_shots(0.5, 0, rng)
    assert sample_shots(1.0, 10, rng) == 10


def noiseless_counts(spec, kx, readout, shots):
    refl, _ = reflection_on_grid(spec, [kx])
    return float(port_b_probability(np.angle(refl[0]) + readout)) * shots


def test_estimate_inverts_exact_probability():
    spec = homogeneous_system(10, 1.0, 0.1)
    kx_true = 0.0987
    readout = quadrature_readout_phase(spec, kx_true)
    shots = 10**12
    counts = round(noiseless_counts(spec, kx_true + 2e-4, readout, shots))
    rec = estimate_x(counts, shots, spec, kx_true, readout)
    assert rec.x_hat == pytest.approx(kx_true + 2e-4, abs=1e-8)


def test_estimate_saturated_port():
    spec = homogeneous_system(10, 1.0, 0.1)
    with pytest.raises(DegenerateError):
        estimate_x(0, 100, spec, 0.0987)
    with pytest.raises(ValueError):
        estimate_x(101, 100, spec, 0.0987)


def test_phase_model_window_checks():
    spec = homogeneous_system(10, 1.0, 0.1)
    model = PhaseModel(spec, 0.0987, 1e-3)
    with pytest.raises(EstimationError):
        model.invert(model.theta_center + 3.0)
    # lossy element whose reflection circle misses the origin: phase turns back
    lossy = homogeneous_system(1, 0.0, 0.5, gamma_prime=0.5)
    with pytest.raises(EstimationError, match="monotonic"):
        PhaseModel(lossy, 0.5, 1.5)


def test_monte_carlo_reproducible_across_threads():
    spec = homogeneous_system(10, 1.0, 0.1)
    a = monte_carlo(spec, 0.0987, 10_000, 40, master_seed=3)
    b = monte_carlo(spec, 0.0987, 10_000, 40, master_seed=3, threads=4)
    np.testing.assert_array_equal(a.estimates, b.estimates)
    np.testing.assert_array_equal(a.counts, b.counts)
    assert a.failures == 0
    assert math.isfinite(a.rmse)


def test_monte_carlo_counts_failures():
    spec = homogeneous_system(10, 1.0, 0.1)
    res = monte_carlo(spec, 0.0987, 1, 20, master_seed=0)
    assert res.failures == 20
    assert math.isnan(res.rmse)
