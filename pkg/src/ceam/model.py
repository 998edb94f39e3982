"""Domain types and unit handling for the atomic-mirror model.

Internal units
--------------
Rates are measured in units of a reference single-atom guided decay rate
``gamma_ref`` (rad/s). Lengths are measured as propagation phases ``k * L``
with ``k = omega / v_g`` the probe wavenumber, so an atom spacing of one
probe wavelength is ``2 * pi`` and the mirror distance enters every formula
as ``kx``.

Field amplitudes evolve as ``exp(-i omega t)``; a right-mover picks up
``exp(+i k L)`` over a distance ``L``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

TWO_PI = 2.0 * math.pi


def default_probe_frequency(detuning: float) -> float:
    """Smallest power of two >= 16 that keeps ``probe + detuning`` positive.

    Internal-unit specs store transition frequencies, so the detuning is
    recovered as a difference; a small power-of-two probe keeps that exact
    to a few ulps of the detuning itself.
    """
    return 2.0 ** max(4, math.ceil(math.log2(2 * abs(detuning) + 1)))


@dataclass(frozen=True)
class AtomSpec:
    """One two-level emitter.

    ``transition_frequency`` and the decay rates are in units of
    ``gamma_ref``; ``position`` is a phase ``k * x_i``.
    """

    transition_frequency: float
    guided_decay: float = 1.0
    nonguided_decay: float = 0.0
    position: float = 0.0

    @property
    def purcell_factor(self) -> float:
        """P_1D = gamma / gamma'. Infinite for a lossless emitter."""
        if self.nonguided_decay == 0.0:
            return math.inf
        return self.guided_decay / self.nonguided_decay


@dataclass(frozen=True)
class UnitScale:
    """Conversion factors back to SI: rates in rad/s, lengths in metres."""

    rate: float  # gamma_ref in rad/s
    length: float  # 1/k in metres
    group_velocity: float  # m/s


@dataclass(frozen=True)
class SystemSpec:
    """Atoms along a waveguide terminated by a perfect mirror.

    ``boundary_distance`` is the phase ``kx`` from the last atom to the
    mirror. ``scale`` is set when the spec came from SI input.
    """

    atoms: tuple[AtomSpec, ...]
    boundary_distance: float
    probe_frequency: float
    scale: Optional[UnitScale] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "atoms", tuple(self.atoms))

    @property
    def n_atoms(self) -> int:
        return len(self.atoms)

    @property
    def wavenumber(self) -> float:
        """k in 1/m for SI-backed specs; 1 in internal units."""
        if self.scale is None:
            return 1.0
        return 1.0 / self.scale.length

    @property
    def detunings(self) -> np.ndarray:
        return np.array([a.transition_frequency - self.probe_frequency for a in self.atoms])

    @property
    def guided_decays(self) -> np.ndarray:
        return np.array([a.guided_decay for a in self.atoms])

    @property
    def nonguided_decays(self) -> np.ndarray:
        return np.array([a.nonguided_decay for a in self.atoms])

    @property
    def positions(self) -> np.ndarray:
        return np.array([a.position for a in self.atoms])

    @property
    def gaps(self) -> np.ndarray:
        """Phases k*(x_{i+1} - x_i) between neighbouring atoms."""
        return np.diff(self.positions)

    @property
    def mirror_position(self) -> float:
        last = self.atoms[-1].position if self.atoms else 0.0
        return last + self.boundary_distance

    @property
    def cavity_length(self) -> float:
        """Effective cavity length kX = kx + k(x_N - x_1)."""
        if not self.atoms:
            return self.boundary_distance
        return self.mirror_position - self.atoms[0].position

    @property
    def is_lossless(self) -> bool:
        return all(a.nonguided_decay == 0.0 for a in self.atoms)

    def with_boundary_distance(self, kx: float) -> "SystemSpec":
        return replace(self, boundary_distance=float(kx))


@dataclass(frozen=True)
class IdealArraySpec:
    """N identical atoms on a d = lambda lattice, acting as one super-atom."""

    n_atoms: int
    detuning: float
    single_atom_decay: float = 1.0
    nonguided_decay: float = 0.0

    def __post_init__(self) -> None:
        if self.n_atoms < 1:
            raise ValueError(f"n_atoms must be >= 1, got {self.n_atoms}")
        if self.single_atom_decay <= 0:
            raise ValueError("single_atom_decay must be positive")

    @property
    def collective_decay(self) -> float:
        return self.n_atoms * self.single_atom_decay

    def to_system(self, kx: float, probe_frequency: Optional[float] = None) -> SystemSpec:
        # Only the detuning enters the scattering; probe_frequency just has to be positive.
        if probe_frequency is None:
            probe_frequency = default_probe_frequency(self.detuning)
        w0 = probe_frequency + self.detuning
        atoms = tuple(
            AtomSpec(w0, self.single_atom_decay, self.nonguided_decay, TWO_PI * i)
            for i in range(self.n_atoms)
        )
        return SystemSpec(atoms, float(kx), float(probe_frequency))


@dataclass
class ValidationResult:
    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok


def validate(spec: SystemSpec) -> ValidationResult:
    """Collect every physical-consistency violation in ``spec``."""
    result = ValidationResult()
    if spec.probe_frequency <= 0:
        result.violations.append("non-positive probe frequency")
    if not spec.boundary_distance > 0:
        result.violations.append("non-positive boundary distance")
    if spec.scale is not None and spec.wavenumber <= 0:
        result.violations.append("non-positive wavenumber")
    if not spec.atoms:
        result.violations.append("no atoms")
    for i, atom in enumerate(spec.atoms):
        if atom.guided_decay < 0:
            result.violations.append(f"negative guided decay (atom {i})")
        elif atom.guided_decay == 0:
            result.violations.append(f"zero guided decay (atom {i})")
        if atom.nonguided_decay < 0:
            result.violations.append(f"negative nonguided decay (atom {i})")
        if atom.transition_frequency <= 0:
            result.violations.append(f"non-positive transition frequency (atom {i})")
    pos = [a.position for a in spec.atoms]
    if any(b <= a for a, b in zip(pos, pos[1:])):
        result.violations.append("non-monotonic positions")
    return result


@dataclass(frozen=True)
class SIConfig:
    """Homogeneous array described in laboratory units.

    Frequencies are ordinary frequencies in Hz (rates are given as
    ``gamma / 2 pi``). ``detuning_hz`` is ``(omega0 - omega) / 2 pi``.
    ``spacing_m`` defaults to the probe wavelength, i.e. ``kd = 2 pi``.
    """

    n_atoms: int
    transition_frequency_hz: float
    gamma_hz: float
    group_velocity_m_s: float
    gamma_prime_hz: float = 0.0
    detuning_hz: float = 0.0
    spacing_m: Optional[float] = None
    boundary_distance_m: Optional[float] = None

    @property
    def probe_frequency_hz(self) -> float:
        return self.transition_frequency_hz - self.detuning_hz

    @property
    def probe_wavelength_m(self) -> float:
        return self.group_velocity_m_s / self.probe_frequency_hz


def to_internal_units(si: SIConfig, kx: Optional[float] = None) -> SystemSpec:
    """Convert an :class:`SIConfig` into a :class:`SystemSpec`.

    ``kx`` overrides ``si.boundary_distance_m``; one of them is required.
    """
    for name in ("transition_frequency_hz", "gamma_hz", "group_velocity_m_s"):
        if not getattr(si, name) > 0:
            raise ValueError(f"{name} must be positive, got {getattr(si, name)}")
    if si.gamma_prime_hz < 0:
        raise ValueError("gamma_prime_hz must be non-negative")
    if si.probe_frequency_hz <= 0:
        raise ValueError("probe frequency must be positive")
    if si.n_atoms < 1:
        raise ValueError("n_atoms must be >= 1")
    if si.spacing_m is not None and not si.spacing_m > 0:
        raise ValueError("spacing_m must be positive")

    gamma = TWO_PI * si.gamma_hz
    k = TWO_PI * si.probe_frequency_hz / si.group_velocity_m_s
    scale = UnitScale(rate=gamma, length=1.0 / k, group_velocity=si.group_velocity_m_s)

    spacing = TWO_PI if si.spacing_m is None else si.spacing_m * k
    if kx is None:
        if si.boundary_distance_m is None:
            raise ValueError("boundary distance required (boundary_distance_m or kx)")
        kx = si.boundary_distance_m * k

    w0 = si.transition_frequency_hz / si.gamma_hz
    gp = si.gamma_prime_hz / si.gamma_hz
    atoms = tuple(AtomSpec(w0, 1.0, gp, i * spacing) for i in range(si.n_atoms))
    return SystemSpec(atoms, float(kx), si.probe_frequency_hz / si.gamma_hz, scale)


def to_si(spec: SystemSpec) -> SIConfig:
    """Inverse of :func:`to_internal_units` for homogeneous, SI-backed specs."""
    if spec.scale is None:
        raise ValueError("spec has no SI scale attached")
    a0 = spec.atoms[0]
    if any(a.transition_frequency != a0.transition_frequency or a.guided_decay != a0.guided_decay
           or a.nonguided_decay != a0.nonguided_decay for a in spec.atoms):
        raise ValueError("to_si needs a homogeneous array")
    gaps = spec.gaps
    if gaps.size and not np.allclose(gaps, gaps[0], rtol=1e-12, atol=0.0):
        raise ValueError("to_si needs a uniform lattice")
    hz = spec.scale.rate / TWO_PI
    gamma_hz = a0.guided_decay * hz
    return SIConfig(
        n_atoms=spec.n_atoms,
        transition_frequency_hz=a0.transition_frequency * hz,
        gamma_hz=gamma_hz,
        group_velocity_m_s=spec.scale.group_velocity,
        gamma_prime_hz=a0.nonguided_decay * hz,
        detuning_hz=(a0.transition_frequency - spec.probe_frequency) * hz,
        spacing_m=float(gaps[0] * spec.scale.length) if gaps.size else None,
        boundary_distance_m=spec.boundary_distance * spec.scale.length,
    )


def homogeneous_system(
    n_atoms: int,
    detuning: float,
    kx: float,
    gamma: float = 1.0,
    gamma_prime: float = 0.0,
    spacing: float = TWO_PI,
    probe_frequency: Optional[float] = None,
) -> SystemSpec:
    """Convenience builder for an internal-unit homogeneous lattice."""
    if probe_frequency is None:
        probe_frequency = default_probe_frequency(detuning)
    w0 = probe_frequency + detuning
    atoms = tuple(AtomSpec(w0, gamma, gamma_prime, i * spacing) for i in range(n_atoms))
    return SystemSpec(atoms, float(kx), float(probe_frequency))


def perturbed_copy(
    spec: SystemSpec,
    d_omega: Sequence[float],
    d_gamma: Sequence[float],
    d_position: Sequence[float],
) -> SystemSpec:
    """Shift per-atom parameters, keeping the mirror where it is."""
    mirror = spec.mirror_position
    atoms = tuple(
        replace(
            a,
            transition_frequency=a.transition_frequency + dw,
            guided_decay=a.guided_decay + dg,
            position=a.position + dx,
        )
        for a, dw, dg, dx in zip(spec.atoms, d_omega, d_gamma, d_position)
    )
    return replace(spec, atoms=atoms, boundary_distance=mirror - atoms[-1].position)
