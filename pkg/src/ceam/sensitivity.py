"""Phase sensitivity of the mirror-terminated array and derived figures of merit.

Distances are phases ``kx`` unless a wavenumber ``k`` is passed, in which case
``d theta / dx = k * d theta / d(kx)``.
"""

from __future__ import annotations

import cmath
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from . import _kernels_py
from .errors import DegenerateError, NonSmoothError, PoleError
from .model import IdealArraySpec, SystemSpec
from .scattering import (
    POLE_FLOOR,
    ScatterCoeffs,
    atom_coupling_arrays,
    ceam_coeffs,
    coupling,
    reference_to_origin,
    total_reflection_closed_form,
)

log = logging.getLogger(__name__)

DEFAULT_STEP = 1e-6
NONSMOOTH_TOL = 1e-3


@dataclass(frozen=True)
class WorkingPoint:
    kx_opt: float
    epsilon_r: float
    theta_r: float
    peak_sensitivity: float
    degenerate: bool = False
    verified: Optional[bool] = None


@dataclass(frozen=True)
class SensitivityReport:
    kx: float
    theta: float
    dtheta_dkx: float
    dtheta_dx: float
    qfi: float
    crb: float
    shots: int
    at_optimum: bool


@dataclass(frozen=True)
class FinesseReport:
    finesse: float
    n_bounces: float
    composite_r: float


@dataclass(frozen=True)
class NumericDerivative:
    value: float
    error: float


@dataclass
class ScalingResult:
    n_atoms: list[int]
    peak_dtheta_dkx: list[float]
    kx_opt: list[float]
    slope: float
    slope_restricted: Optional[float]
    fit_min_n: int = 8
    rows: list = field(init=False)

    def __post_init__(self) -> None:
        self.rows = list(zip(self.n_atoms, self.peak_dtheta_dkx))


def phase_slope_closed_form(ceam: ScatterCoeffs, kx) -> np.ndarray:
    """Vectorised d theta / d(kx) = Im(R'/R) for the collective mirror."""
    kx = np.asarray(kx, dtype=float)
    z = np.exp(2j * kx)
    den = 1 + ceam.r * z
    if np.any(np.abs(den) < POLE_FLOOR):
        raise PoleError("pole 1 + r z = 0 on requested points")
    refl = ceam.r - ceam.t**2 * z / den
    d_refl = -2j * z * ceam.t**2 / den**2
    return (d_refl / refl).imag


def phase_derivative_analytic(ceam: ScatterCoeffs, kx: float, k: float = 1.0) -> float:
    """d theta / dx from ``dR/dx = -2 i k z t^2 / (1 + z r)^2``.

    With the default ``k = 1`` this is the dimensionless d theta / d(kx).
    """
    z = cmath.exp(2j * kx)
    den = 1 + z * ceam.r
    if abs(den) < POLE_FLOOR:
        raise PoleError(f"pole 1 + r z = 0 at kx={kx!r}")
    refl = total_reflection_closed_form(ceam, kx).R
    d_refl = -2j * k * z * ceam.t**2 / den**2
    return (d_refl / refl).imag


def _extended_system_matrix(spec: SystemSpec) -> np.ndarray:
    # Independent of the active kernel backend; long double keeps the
    # finite differences below 1e-6 relative even where theta' ~ 1e-5.
    atom_coupling_arrays(spec)  # opaque-element check
    g = spec.guided_decays.astype(np.longdouble)
    det = spec.detunings.astype(np.longdouble)
    gp = spec.nonguided_decays.astype(np.longdouble)
    b = coupling(det, g, gp).astype(np.clongdouble)
    pos = spec.positions.astype(np.longdouble)
    m = _kernels_py.chain_product(b[None, :], np.diff(pos)[None, :])
    if pos.size and pos[0] != 0:
        m = reference_to_origin(m, pos[0])
    return m


def theta_function(spec: SystemSpec, precision: str = "extended") -> Callable:
    """Return ``f(kx_array) -> R`` for the spec's transfer-matrix chain."""
    if precision == "extended":
        m = _extended_system_matrix(spec)
        ftype = np.longdouble
    elif precision == "double":
        m = _kernels_py.chain_product(atom_coupling_arrays(spec)[None, :], spec.gaps[None, :])
        if spec.atoms and spec.atoms[0].position != 0.0:
            m = reference_to_origin(m, spec.atoms[0].position)
        ftype = np.float64
    else:
        raise ValueError(f"unknown precision {precision!r}")

    def reflection(kx):
        kx = np.atleast_1d(np.asarray(kx, dtype=ftype))
        refl, _, _ = _kernels_py.mirror_response(m, kx[None, :])
        return refl[0]

    return reflection


def phase_derivative_numeric(
    spec: SystemSpec,
    kx: Optional[float] = None,
    step: float = DEFAULT_STEP,
    precision: str = "extended",
) -> NumericDerivative:
    """Richardson-combined central differences of the unwrapped phase.

    Evaluates the transfer-matrix reflection at ``kx +- step`` and
    ``kx +- 2 step``. ``error`` is the Richardson error estimate.
    """
    if not 1e-9 <= step <= 1e-3:
        raise ValueError(f"step must lie in [1e-9, 1e-3], got {step}")
    kx = spec.boundary_distance if kx is None else kx
    refl = theta_function(spec, precision)
    ftype = np.longdouble if precision == "extended" else np.float64
    h = ftype(step)
    x0 = ftype(kx)
    rp1, rm1, rp2, rm2 = refl(np.array([x0 + h, x0 - h, x0 + 2 * h, x0 - 2 * h]))
    d1 = np.angle(rp1 * np.conj(rm1)) / (2 * h)
    d2 = np.angle(rp2 * np.conj(rm2)) / (4 * h)
    value = (4 * d1 - d2) / 3
    err = abs(d1 - d2) / 3
    scale = max(abs(float(value)), 1e-300)
    if abs(float(d1 - d2)) > NONSMOOTH_TOL * scale:
        raise NonSmoothError(f"step estimates disagree at kx={kx!r}: {float(d1)!r} vs {float(d2)!r}")
    return NumericDerivative(float(value), float(err))


def find_working_point(
    ceam: ScatterCoeffs, verify: bool = True, grid_points: int = 10_000
) -> WorkingPoint:
    """Mirror distance that makes ``z r = -|r|``.

    Only ``z = exp(2 i kx)`` is fixed, so ``kx_opt`` is returned in
    ``[0, pi)`` and repeats with period ``pi``.
    """
    mag = abs(ceam.r)
    if mag == 0:
        raise ValueError("working point undefined for r = 0")
    theta_r = cmath.phase(ceam.r)
    kx_opt = ((math.pi - theta_r) / 2) % math.pi
    eps = 1.0 - mag
    if abs(ceam.t) < POLE_FLOOR or abs(1 + ceam.r * cmath.exp(2j * kx_opt)) < POLE_FLOOR:
        log.warning("resonant mirror: phase is flat, working point is degenerate")
        return WorkingPoint(kx_opt, eps, theta_r, 0.0, degenerate=True)
    peak = abs(phase_derivative_analytic(ceam, kx_opt))
    verified = None
    if verify:
        verified = grid_check_working_point(ceam, kx_opt, peak, grid_points)
        if not verified:
            log.warning("grid search disagrees with analytic working point kx=%r", kx_opt)
    return WorkingPoint(kx_opt, eps, theta_r, peak, verified=verified)


def grid_check_working_point(
    ceam: ScatterCoeffs, kx_opt: float, peak: float, grid_points: int = 10_000
) -> bool:
    """True if no grid point beats ``peak`` and the grid argmax is within one cell."""
    grid = np.linspace(0.0, math.pi, grid_points, endpoint=False)
    cell = math.pi / grid_points
    vals = np.abs(phase_slope_closed_form(ceam, grid))
    best = int(np.argmax(vals))
    dist = abs(math.remainder(grid[best] - kx_opt, math.pi))
    return bool(vals[best] <= peak * (1 + 1e-9) and dist <= cell * (1 + 1e-9))


def scaling_sweep(
    n_list: Sequence[int], detuning: float, gamma: float = 1.0, k: float = 1.0, fit_min_n: int = 8
) -> ScalingResult:
    """Peak |d theta / dx| at the working point for each N, plus log-log slopes.

    ``slope_restricted`` only uses N >= ``fit_min_n`` (None when fewer
    than two such points).
    """
    if detuning == 0:
        raise DegenerateError("scaling undefined at zero detuning")
    ns = [int(n) for n in n_list]
    if any(n < 1 for n in ns):
        raise ValueError("all N must be >= 1")
    peaks, kxs = [], []
    for n in ns:
        wp = find_working_point(ceam_coeffs(IdealArraySpec(n, detuning, gamma)), verify=False)
        peaks.append(k * wp.peak_sensitivity)
        kxs.append(wp.kx_opt)
    slope = loglog_slope(ns, peaks) if len(ns) >= 2 else math.nan
    big = [(n, p) for n, p in zip(ns, peaks) if n >= fit_min_n]
    restricted = loglog_slope(*zip(*big)) if len(big) >= 2 else None
    return ScalingResult(ns, peaks, kxs, slope, restricted, fit_min_n)


def loglog_slope(x, y) -> float:
    return float(np.polyfit(np.log(np.asarray(x, float)), np.log(np.asarray(y, float)), 1)[0])


def asymptotic_peak(n_atoms: int, detuning: float, gamma: float = 1.0, k: float = 1.0) -> float:
    """Large-N peak |d theta / dx| = 2 k N^2 gamma^2 / detuning^2."""
    return 2 * k * n_atoms**2 * gamma**2 / detuning**2


def qfi_from_state(theta_prime: float) -> float:
    """Quantum Fisher information of the phase-encoded single photon."""
    return float(theta_prime) ** 2


def qfi_state_vector(
    reflection: Callable, kx: float, step: float = DEFAULT_STEP, k: float = 1.0
) -> float:
    """QFI from ``4 (<dPsi|dPsi> - |<Psi|dPsi>|^2)`` by differencing the state.

    ``reflection`` maps an array of ``kx`` to R (e.g. from
    :func:`theta_function`). The state is ``(e^{i theta}, i) / sqrt 2``.
    """
    from .estimator import apply_reflection_phase, prepare_initial_state

    refl = reflection(np.array([kx - 2 * step, kx - step, kx, kx + step, kx + 2 * step]))
    ctype = np.result_type(refl.dtype, np.complex128)
    # Phases relative to the centre point keep the differences well conditioned.
    rel = np.angle(refl * np.conj(refl[2]))
    base = prepare_initial_state()
    vecs = np.array(
        [apply_reflection_phase(base, ph, dtype=ctype).as_array(ctype) for ph in rel]
    )
    h = rel.real.dtype.type(step)
    d1 = (vecs[3] - vecs[1]) / (2 * h)
    d2 = (vecs[4] - vecs[0]) / (4 * h)
    dpsi = (4 * d1 - d2) / 3
    psi = vecs[2]
    overlap = np.vdot(psi, dpsi)
    qfi = 4 * (np.vdot(dpsi, dpsi).real - abs(overlap) ** 2)
    return float(qfi) * k**2


def cramer_rao_bound(qfi: float, shots: int = 1) -> float:
    """Smallest RMS error of an unbiased estimate: 1 / sqrt(shots * qfi)."""
    if shots < 1:
        raise ValueError(f"shots must be >= 1, got {shots}")
    if qfi < 0:
        raise ValueError(f"qfi must be non-negative, got {qfi}")
    if qfi == 0:
        raise DegenerateError("zero Fisher information: the point carries no information")
    return 1.0 / math.sqrt(shots * qfi)


def finesse_report(r_ceam_magnitude: float, r_mirror_magnitude: float = 1.0) -> FinesseReport:
    """Finesse ``pi r / (1 - r^2)`` with ``r = sqrt(|r1 r2|)``; bounces = finesse / pi.

    A composite reflectivity of exactly 1 gives ``math.inf``.
    """
    for name, v in (("r_ceam_magnitude", r_ceam_magnitude), ("r_mirror_magnitude", r_mirror_magnitude)):
        if not 0 < v <= 1:
            raise ValueError(f"{name} must lie in (0, 1], got {v}")
    r = math.sqrt(r_ceam_magnitude * r_mirror_magnitude)
    loss = 1 - r * r
    finesse = math.inf if loss == 0 else math.pi * r / loss
    return FinesseReport(finesse, finesse / math.pi, r)


def sensitivity_report(
    spec: IdealArraySpec, kx: Optional[float] = None, shots: int = 1, k: float = 1.0
) -> SensitivityReport:
    """Phase, slope, QFI and Cramer-Rao bound; at the working point if ``kx`` is None."""
    ceam = ceam_coeffs(spec)
    at_opt = kx is None
    if at_opt:
        wp = find_working_point(ceam, verify=False)
        if wp.degenerate:
            raise DegenerateError("resonant mirror has no phase sensitivity")
        kx = wp.kx_opt
    slope = phase_derivative_analytic(ceam, kx)
    qfi = qfi_from_state(k * slope)
    return SensitivityReport(
        kx=kx,
        theta=total_reflection_closed_form(ceam, kx).theta,
        dtheta_dkx=slope,
        dtheta_dx=k * slope,
        qfi=qfi,
        crb=cramer_rao_bound(qfi, shots),
        shots=shots,
        at_optimum=at_opt,
    )
