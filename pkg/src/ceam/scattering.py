"""Single-photon scattering off emitters, the collective mirror, and the
mirror-terminated waveguide.

Two independent routes to the total reflection ``R``: the closed form for
a collective super-atom in front of the mirror, and a transfer-matrix chain
over individual atoms. They must agree on ideal lattices.

Transfer matrices act on ``(right-mover, left-mover)`` amplitudes and map
the left side of an element to its right side.
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import OpaqueElementError, PoleError
from .model import IdealArraySpec, SystemSpec, TWO_PI

POLE_FLOOR = 1e-14
OPAQUE_FLOOR = 1e-14


@dataclass(frozen=True)
class ScatterCoeffs:
    r: complex
    t: complex

    @property
    def power(self) -> float:
        """|r|^2 + |t|^2; below 1 for a lossy emitter."""
        return abs(self.r) ** 2 + abs(self.t) ** 2


@dataclass(frozen=True)
class ReflectionResult:
    R: complex
    theta: float
    magnitude: float
    at_pole: bool = False

    @classmethod
    def from_amplitude(cls, R: complex, at_pole: bool = False) -> "ReflectionResult":
        return cls(complex(R), cmath.phase(R), abs(R), at_pole)


@dataclass(frozen=True)
class TransferMatrix:
    m11: complex
    m12: complex
    m21: complex
    m22: complex

    @classmethod
    def identity(cls) -> "TransferMatrix":
        return cls(1.0, 0.0, 0.0, 1.0)

    @classmethod
    def from_array(cls, a) -> "TransferMatrix":
        a = np.asarray(a).reshape(-1)
        return cls(*(complex(v) for v in a))

    def as_array(self) -> np.ndarray:
        return np.array([[self.m11, self.m12], [self.m21, self.m22]], dtype=complex)

    def __matmul__(self, other: "TransferMatrix") -> "TransferMatrix":
        return TransferMatrix.from_array(self.as_array() @ other.as_array())

    @property
    def det(self) -> complex:
        return self.m11 * self.m22 - self.m12 * self.m21

    def scattering(self) -> tuple[complex, complex, complex, complex]:
        """(r_left, t_left, r_right, t_right) of the element.

        ``r_left`` is the reflection for light incident from the left.
        """
        if abs(self.m22) < OPAQUE_FLOOR:
            raise OpaqueElementError("m22 = 0: element transmits nothing")
        r_left = -self.m21 / self.m22
        t_left = self.det / self.m22
        r_right = self.m12 / self.m22
        t_right = 1.0 / self.m22
        return r_left, t_left, r_right, t_right

    def mirror_reflection(self, kx: float) -> ReflectionResult:
        """Close the right side with a perfect mirror at phase distance ``kx``."""
        z = cmath.exp(2j * kx)
        den = self.m22 + z * self.m12
        if abs(den) < POLE_FLOOR * max(abs(self.m22), abs(self.m12), 1.0):
            raise PoleError(f"reflection pole at kx={kx!r}")
        return ReflectionResult.from_amplitude(-(self.m21 + z * self.m11) / den)


def single_atom_coeffs(detuning: float, gamma: float, gamma_prime: float = 0.0) -> ScatterCoeffs:
    """Reflection and transmission of one emitter.

    ``r = -(gamma/2) / (i detuning + (gamma + gamma')/2)``, ``t = 1 + r``.
    """
    if not gamma > 0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    if gamma_prime < 0:
        raise ValueError(f"gamma_prime must be non-negative, got {gamma_prime}")
    r = -(gamma / 2) / (1j * detuning + (gamma + gamma_prime) / 2)
    return ScatterCoeffs(r, 1 + r)


def ceam_coeffs(spec: IdealArraySpec) -> ScatterCoeffs:
    """Collective mirror: a single emitter with decay N*gamma."""
    return single_atom_coeffs(spec.detuning, spec.collective_decay, spec.nonguided_decay)


def total_reflection_closed_form(ceam: ScatterCoeffs, kx: float) -> ReflectionResult:
    """``R = r - t^2 z / (1 + r z)`` with ``z = exp(2 i kx)``.

    At the pole ``1 + r z = 0`` (only reachable for ``r = -1``) the limit
    ``R = -1`` is returned with ``at_pole`` set.
    """
    z = cmath.exp(2j * kx)
    den = 1 + ceam.r * z
    if abs(den) < POLE_FLOOR:
        return ReflectionResult.from_amplitude(-1.0 + 0j, at_pole=True)
    return ReflectionResult.from_amplitude(ceam.r - ceam.t**2 * z / den)


def atom_transfer_matrix(coeffs: ScatterCoeffs) -> TransferMatrix:
    r, t = coeffs.r, coeffs.t
    if abs(t) < OPAQUE_FLOOR:
        raise OpaqueElementError("opaque element (t = 0): use the closed form or detune the atom")
    return TransferMatrix((t * t - r * r) / t, r / t, -r / t, 1 / t)


def propagation_matrix(k_length: float) -> TransferMatrix:
    ph = cmath.exp(1j * k_length)
    return TransferMatrix(ph, 0.0, 0.0, 1 / ph)


def atom_coeff_arrays(spec: SystemSpec) -> tuple[np.ndarray, np.ndarray]:
    g = spec.guided_decays
    r = -(g / 2) / (1j * spec.detunings + (g + spec.nonguided_decays) / 2)
    return r, 1 + r


def coupling(detuning, gamma, gamma_prime=0.0):
    """Per-atom coupling ``b = (gamma/2) / (i detuning + gamma'/2)`` fed to the kernels.

    Equals ``-r / t``; purely imaginary for a lossless atom. Works elementwise
    and keeps the dtype of the inputs (long double for the numeric oracle).
    """
    return (gamma / 2) / (1j * detuning + gamma_prime / 2)


def atom_coupling_arrays(spec: SystemSpec) -> np.ndarray:
    r, t = atom_coeff_arrays(spec)
    _check_opaque(t)
    return coupling(spec.detunings, spec.guided_decays, spec.nonguided_decays)


def _check_opaque(t: np.ndarray) -> None:
    bad = np.abs(t) < OPAQUE_FLOOR
    if np.any(bad):
        idx = np.argwhere(bad)[0]
        raise OpaqueElementError(f"opaque atom at index {tuple(int(i) for i in idx)}")


def system_transfer_matrix(spec: SystemSpec) -> TransferMatrix:
    """Chain the per-atom matrices and the propagation between them."""
    return TransferMatrix.from_array(chain_matrix(spec)[0])


def total_reflection_transfer_matrix(spec: SystemSpec) -> ReflectionResult:
    return system_transfer_matrix(spec).mirror_reflection(spec.boundary_distance)


def chain_matrix(spec: SystemSpec) -> np.ndarray:
    """Raw ``(1, 4)`` chain product for repeated mirror-distance queries."""
    b = atom_coupling_arrays(spec)
    m = kernels.chain_product(b[None, :], spec.gaps[None, :])
    if spec.atoms and spec.atoms[0].position != 0.0:
        m = reference_to_origin(m, spec.atoms[0].position)
    return m


def reference_to_origin(m: np.ndarray, first_position) -> np.ndarray:
    """Prepend free propagation from the lattice origin to the first atom.

    Keeps R referenced to a fixed plane when the first atom is displaced.
    """
    ph = np.exp(1j * np.asarray(first_position, dtype=m.real.dtype))
    out = m.copy()
    out[:, 0] *= ph
    out[:, 2] *= ph
    out[:, 1] *= np.conj(ph)
    out[:, 3] *= np.conj(ph)
    return out


def response(m: np.ndarray, kx) -> tuple[np.ndarray, np.ndarray]:
    """R and dR/d(kx) of a precomputed chain at mirror distances ``kx``."""
    kx = np.atleast_1d(np.asarray(kx, dtype=float))
    refl, d_refl, den = kernels.mirror_response(m, kx[None, :])
    _check_poles(den, m)
    return refl[0], d_refl[0]


def reflection_on_grid(spec: SystemSpec, kx) -> tuple[np.ndarray, np.ndarray]:
    """R(kx) and dR/d(kx) on an array of mirror distances."""
    return response(chain_matrix(spec), kx)


def ideal_reflection_batch(
    n_atoms: int,
    detunings,
    kxs,
    gamma: float = 1.0,
    gamma_prime: float = 0.0,
    spacing: float = TWO_PI,
) -> tuple[np.ndarray, np.ndarray]:
    """Transfer-matrix R and dR/d(kx) for many (detuning, kx) pairs at once."""
    detunings = np.asarray(detunings, dtype=float)
    kxs = np.asarray(kxs, dtype=float)
    n_cfg = detunings.size
    r1 = -(gamma / 2) / (1j * detunings + (gamma + gamma_prime) / 2)
    _check_opaque(1 + r1)
    b = np.repeat(coupling(detunings, gamma, gamma_prime)[:, None], n_atoms, axis=1)
    gaps = np.full((n_cfg, max(n_atoms - 1, 0)), spacing)
    m = kernels.chain_product(b, gaps)
    refl, d_refl, den = kernels.mirror_response(m, kxs.reshape(n_cfg, 1))
    _check_poles(den, m)
    return refl[:, 0], d_refl[:, 0]


def _check_poles(den: np.ndarray, m: np.ndarray) -> None:
    scale = np.maximum(np.maximum(np.abs(m[:, 1]), np.abs(m[:, 3])), 1.0)[:, None]
    if np.any(np.abs(den) < POLE_FLOOR * scale):
        raise PoleError("reflection pole on requested grid")


def unwrap_phase(refl) -> np.ndarray:
    """Continuous branch of arg R along a sweep."""
    return np.unwrap(np.angle(np.asarray(refl)))


def bare_mirror_reflection(kx: float) -> complex:
    return -cmath.exp(2j * kx)

