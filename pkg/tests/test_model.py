import math

import numpy as np
import pytest

from ceam.model import (
    TWO_PI,
    AtomSpec,
    IdealArraySpec,
    SIConfig,
    SystemSpec,
    homogeneous_system,
    perturbed_copy,
    to_internal_units,
    to_si,
    validate,
)


def transmon_like(**kw):
    base = dict(n_atoms=10, transition_frequency_hz=6e9, gamma_hz=1e8, group_velocity_m_s=3e8,
                gamma_prime_hz=5e5, detuning_hz=1e8)
    base.update(kw)
    return SIConfig(**base)


def test_purcell_factor():
    assert AtomSpec(1.0, 1.0, 0.0).purcell_factor == math.inf
    assert AtomSpec(1.0, 1.0, 0.005).purcell_factor == pytest.approx(200.0)


def test_homogeneous_system_geometry():
    spec = homogeneous_system(4, 1.0, kx=0.3)
    np.testing.assert_allclose(spec.positions, TWO_PI * np.arange(4))
    np.testing.assert_allclose(spec.gaps, TWO_PI)
    assert spec.mirror_position == pytest.approx(3 * TWO_PI + 0.3)
    assert spec.is_lossless
    np.testing.assert_allclose(spec.detunings, 1.0, atol=1e-11)


def test_ideal_to_system_matches_builder():
    a = IdealArraySpec(5, 0.7).to_system(0.2)
    b = homogeneous_system(5, 0.7, kx=0.2)
    assert a == b
    assert IdealArraySpec(5, 0.7, 2.0).collective_decay == 10.0


@pytest.mark.parametrize(
    "spec, message",
    [
        (SystemSpec((AtomSpec(1.0, -1.0),), 0.1, 1.0), "negative guided decay (atom 0)"),
        (SystemSpec((AtomSpec(1.0, 0.0),), 0.1, 1.0), "zero guided decay (atom 0)"),
        (SystemSpec((AtomSpec(1.0, 1.0, -0.1),), 0.1, 1.0), "negative nonguided decay (atom 0)"),
        (SystemSpec((AtomSpec(1.0, position=1.0), AtomSpec(1.0, position=0.5)), 0.1, 1.0),
         "non-monotonic positions"),
        (SystemSpec((AtomSpec(1.0),), 0.1, 0.0), "non-positive probe frequency"),
        (SystemSpec((AtomSpec(1.0),), 0.0, 1.0), "non-positive boundary distance"),
        (SystemSpec((), 0.1, 1.0), "no atoms"),
    ],
)
def test_validate_reports_violation(spec, message):
    result = validate(spec)
    assert not result
    assert message in result.violations


def test_validate_collects_all():
    spec = SystemSpec((AtomSpec(1.0, -1.0, -1.0),), -1.0, -1.0)
    assert len(validate(spec).violations) == 4
    assert validate(homogeneous_system(3, 1.0, 0.5)).ok


def test_si_conversion_units():
    si = transmon_like()
    spec = to_internal_units(si, kx=0.4)
    k = TWO_PI * (6e9 - 1e8) / 3e8
    assert spec.wavenumber == pytest.approx(k)
    np.testing.assert_allclose(spec.gaps, TWO_PI)
    np.testing.assert_allclose(spec.detunings, 1.0, rtol=1e-9)
    np.testing.assert_allclose(spec.nonguided_decays, 0.005)
    assert spec.scale.rate == pytest.approx(TWO_PI * 1e8)


def test_si_round_trip():
    si = transmon_like(spacing_m=0.05, boundary_distance_m=0.002)
    back = to_si(to_internal_units(si))
    for name in ("transition_frequency_hz", "gamma_hz", "gamma_prime_hz", "detuning_hz", "spacing_m",
                 "boundary_distance_m", "group_velocity_m_s"):
        assert getattr(back, name) == pytest.approx(getattr(si, name), rel=1e-9)


@pytest.mark.parametrize("field", ["gamma_hz", "transition_frequency_hz", "group_velocity_m_s"])
def test_si_rejects_non_positive(field):
    with pytest.raises(ValueError, match=field):
        to_internal_units(transmon_like(**{field: 0.0}), kx=0.1)


def test_si_requires_boundary():
    with pytest.raises(ValueError, match="boundary"):
        to_internal_units(transmon_like())


def test_perturbed_copy_keeps_mirror_fixed():
    spec = homogeneous_system(3, 1.0, kx=0.5)
    out = perturbed_copy(spec, [0.1, 0, 0], [0, 0.2, 0], [0, 0, 0.01])
    assert out.mirror_position == pytest.approx(spec.mirror_position)
    assert out.boundary_distance == pytest.approx(0.49)
    assert out.atoms[1].guided_decay == pytest.approx(1.2)
    assert out.detunings[0] == pytest.approx(1.1)
