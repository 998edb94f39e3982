"""Static disorder: truncated-Gaussian offsets in transition frequency,
coupling and position, ensembles of sensitivity curves, and the first-order
response of R to single-atom perturbations.

Every random stream is ``SeedSequence(master_seed, spawn_key=(sample,
atom, tag))`` so a draw depends only on its own coordinates, never on the
order in which samples are evaluated.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import DegenerateError, NumericalFailure
from .model import IdealArraySpec, SIConfig, SystemSpec, perturbed_copy, to_internal_units
from .scattering import ceam_coeffs, chain_matrix, response, total_reflection_transfer_matrix
from .sensitivity import find_working_point, loglog_slope

log = logging.getLogger(__name__)

TAGS = {"omega": 0, "gamma": 1, "position": 2}
MAX_RESAMPLES = 1000

# Reference hardware: transmon array on a coplanar waveguide.
TRANSMON_F0_HZ = 6.0e9
TRANSMON_GAMMA_HZ = 100.0e6
TRANSMON_GAMMA_PRIME_HZ = 0.5e6
TRANSMON_WAVELENGTH_M = 0.05
TRANSMON_THREE_SIGMA_FREQUENCY_HZ = 100.0e6
TRANSMON_THREE_SIGMA_GAMMA = 0.03
TRANSMON_THREE_SIGMA_POSITION_M = 500e-9
TRANSMON_SEED = 2026


@dataclass(frozen=True)
class DisorderSpec:
    """Standard deviations in internal units (rates / gamma_ref, phases)."""

    sigma_omega: float = 0.0
    sigma_gamma: float = 0.0
    sigma_x: float = 0.0
    truncation: float = 3.0
    n_samples: int = 20
    master_seed: int = 0

    def __post_init__(self) -> None:
        if min(self.sigma_omega, self.sigma_gamma, self.sigma_x) < 0:
            raise ValueError("disorder widths must be non-negative")
        if not self.truncation > 0:
            raise ValueError("truncation must be positive")
        if self.n_samples < 1:
            raise ValueError("n_samples must be >= 1")

    @property
    def is_zero(self) -> bool:
        return self.sigma_omega == 0 and self.sigma_gamma == 0 and self.sigma_x == 0


@dataclass(frozen=True)
class Offsets:
    d_omega: np.ndarray
    d_gamma: np.ndarray
    d_position: np.ndarray
    resamples: int = 0


@dataclass
class EnsembleResult:
    kx_grid: np.ndarray
    ideal_curve: np.ndarray
    curves: np.ndarray  # (n_samples, n_grid), NaN rows for flagged samples
    peak_values: np.ndarray
    peak_locations: np.ndarray
    flagged: np.ndarray
    resamples: np.ndarray
    ideal_peak: float
    ideal_peak_location: float
    errors: dict = field(default_factory=dict)

    @property
    def n_samples(self) -> int:
        return self.curves.shape[0]

    @property
    def stats(self) -> dict:
        peaks = self.peak_values[~self.flagged]
        if peaks.size == 0:
            return {"mean": math.nan, "std": math.nan, "min": math.nan, "max": math.nan,
                    "relative_spread": math.nan, "n_ok": 0}
        std = float(np.std(peaks, ddof=1)) if peaks.size > 1 else 0.0
        mean = float(np.mean(peaks))
        return {
            "mean": mean,
            "std": std,
            "min": float(np.min(peaks)),
            "max": float(np.max(peaks)),
            "relative_spread": std / mean,
            "n_ok": int(peaks.size),
        }


def sample_truncated_gaussian(sigma: float, truncation_sigmas: float, rng: np.random.Generator) -> float:
    """Draw from N(0, sigma^2) conditioned on |v| <= truncation * sigma (rejection)."""
    if sigma < 0:
        raise ValueError(f"sigma must be non-negative, got {sigma}")
    if sigma == 0:
        return 0.0
    while True:
        v = rng.standard_normal()
        if abs(v) <= truncation_sigmas:
            return float(v * sigma)


def truncated_gaussian_array(
    sigma: float, truncation_sigmas: float, rng: np.random.Generator, size: int
) -> np.ndarray:
    """Vectorised rejection sampler; same distribution as the scalar version."""
    if sigma == 0:
        return np.zeros(size)
    out = np.empty(0)
    while out.size < size:
        need = size - out.size
        v = rng.standard_normal(int(need * 1.01) + 16)
        out = np.concatenate([out, v[np.abs(v) <= truncation_sigmas][:need]])
    return out * sigma


def truncated_normal_std(truncation_sigmas: float) -> float:
    """Standard deviation of a unit normal truncated to +-c."""
    c = truncation_sigmas
    phi = math.exp(-c * c / 2) / math.sqrt(2 * math.pi)
    mass = math.erf(c / math.sqrt(2))
    return math.sqrt(1 - 2 * c * phi / mass)


def _stream(master_seed: int, sample: int, atom: int, tag: str) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(master_seed, spawn_key=(sample, atom, TAGS[tag])))


def draw_offsets(spec: SystemSpec, disorder: DisorderSpec, sample_index: int) -> Offsets:
    n = spec.n_atoms
    dw = np.zeros(n)
    dg = np.zeros(n)
    dx = np.zeros(n)
    resamples = 0
    c = disorder.truncation
    for i, atom in enumerate(spec.atoms):
        dw[i] = sample_truncated_gaussian(disorder.sigma_omega, c, _stream(disorder.master_seed, sample_index, i, "omega"))
        rng = _stream(disorder.master_seed, sample_index, i, "gamma")
        dg[i] = sample_truncated_gaussian(disorder.sigma_gamma, c, rng)
        while atom.guided_decay + dg[i] <= 0:
            resamples += 1
            if resamples > MAX_RESAMPLES:
                raise DegenerateError("coupling disorder keeps producing non-positive decay rates")
            dg[i] = sample_truncated_gaussian(disorder.sigma_gamma, c, rng)
        dx[i] = sample_truncated_gaussian(disorder.sigma_x, c, _stream(disorder.master_seed, sample_index, i, "position"))
    return Offsets(dw, dg, dx, resamples)


def perturb(spec_ideal: SystemSpec, disorder: DisorderSpec, sample_index: int) -> SystemSpec:
    """One disordered realisation; the mirror stays where it was."""
    off = draw_offsets(spec_ideal, disorder, sample_index)
    return perturbed_copy(spec_ideal, off.d_omega, off.d_gamma, off.d_position)


def _curve(spec: SystemSpec, mirror_positions: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    m = chain_matrix(spec)
    refl, d_refl = response(m, mirror_positions - spec.atoms[-1].position)
    return (d_refl / refl).imag, m


def _refine_peak(m: np.ndarray, shift: float, grid: np.ndarray, curve: np.ndarray) -> tuple[float, float]:
    i = int(np.nanargmax(np.abs(curve)))
    lo = grid[max(i - 1, 0)]
    hi = grid[min(i + 1, grid.size - 1)]

    def neg(kx: float) -> float:
        refl, d_refl = response(m, [kx - shift])
        return -abs((d_refl[0] / refl[0]).imag)

    res = minimize_scalar(neg, bounds=(lo, hi), method="bounded", options={"xatol": 1e-12})
    if -res.fun >= abs(curve[i]):
        return float(-res.fun), float(res.x)
    return float(abs(curve[i])), float(grid[i])


def default_grid(spec_ideal: SystemSpec, points: int = 2001) -> np.ndarray:
    """One period of 2kx (width pi) centred on the ideal working point."""
    kx0 = ideal_working_point(spec_ideal)
    return np.linspace(kx0 - math.pi / 2, kx0 + math.pi / 2, points)


def ideal_working_point(spec: SystemSpec) -> float:
    """Working point of the homogeneous spec's collective mirror, kept positive."""
    a = spec.atoms[0]
    ideal = IdealArraySpec(spec.n_atoms, a.transition_frequency - spec.probe_frequency, a.guided_decay, a.nonguided_decay)
    wp = find_working_point(ceam_coeffs(ideal), verify=False)
    if wp.degenerate:
        raise DegenerateError("resonant array has no working point")
    return wp.kx_opt if wp.kx_opt > 0 else wp.kx_opt + math.pi


def run_ensemble(
    spec_ideal: SystemSpec,
    disorder: DisorderSpec,
    kx_grid: Optional[Sequence[float]] = None,
    threads: int = 1,
) -> EnsembleResult:
    """Sensitivity curves d theta / d(kx) for ``disorder.n_samples`` realisations.

    ``kx_grid`` is the mirror distance measured from the *ideal* last atom;
    disordered atoms move but the mirror positions scanned are the same for
    every sample. Failing samples are flagged, not fatal.
    """
    grid = default_grid(spec_ideal) if kx_grid is None else np.asarray(kx_grid, dtype=float)
    if grid.size < 2:
        raise ValueError("kx grid needs at least two points")
    last_ideal = spec_ideal.atoms[-1].position
    mirrors = last_ideal + grid

    def evaluate(spec: SystemSpec):
        curve, m = _curve(spec, mirrors)
        peak, loc = _refine_peak(m, spec.atoms[-1].position - last_ideal, grid, curve)
        return curve, peak, loc

    ideal_curve, ideal_peak, ideal_loc = evaluate(spec_ideal)

    def one(idx: int):
        try:
            off = draw_offsets(spec_ideal, disorder, idx)
            spec = perturbed_copy(spec_ideal, off.d_omega, off.d_gamma, off.d_position)
            curve, peak, loc = evaluate(spec)
            if not np.all(np.isfinite(curve)):
                raise NumericalFailure("non-finite sensitivity curve")
            return curve, peak, loc, off.resamples, None
        except NumericalFailure as exc:
            return np.full(grid.size, np.nan), math.nan, math.nan, 0, repr(exc)

    indices = range(disorder.n_samples)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(one, indices))
    else:
        results = [one(i) for i in indices]

    errors = {i: res[4] for i, res in enumerate(results) if res[4] is not None}
    for i, msg in errors.items():
        log.warning("sample %d flagged: %s", i, msg)
    return EnsembleResult(
        kx_grid=grid,
        ideal_curve=ideal_curve,
        curves=np.array([res[0] for res in results]),
        peak_values=np.array([res[1] for res in results]),
        peak_locations=np.array([res[2] for res in results]),
        flagged=np.array([res[4] is not None for res in results]),
        resamples=np.array([res[3] for res in results]),
        ideal_peak=ideal_peak,
        ideal_peak_location=ideal_loc,
        errors=errors,
    )


def transmon_si_config(detuning_in_gamma: float = 1.0, n_atoms: int = 10) -> SIConfig:
    return SIConfig(
        n_atoms=n_atoms,
        transition_frequency_hz=TRANSMON_F0_HZ,
        gamma_hz=TRANSMON_GAMMA_HZ,
        group_velocity_m_s=TRANSMON_F0_HZ * TRANSMON_WAVELENGTH_M,
        gamma_prime_hz=TRANSMON_GAMMA_PRIME_HZ,
        detuning_hz=detuning_in_gamma * TRANSMON_GAMMA_HZ,
    )


def transmon_system(detuning_in_gamma: float = 1.0, n_atoms: int = 10) -> SystemSpec:
    """Transmon array at its ideal working point."""
    spec = to_internal_units(transmon_si_config(detuning_in_gamma, n_atoms), kx=1.0)
    return spec.with_boundary_distance(ideal_working_point(spec))


def disorder_from_si(
    spec: SystemSpec,
    sigma_frequency_hz: float = 0.0,
    sigma_decay_hz: float = 0.0,
    sigma_position_m: float = 0.0,
    truncation: float = 3.0,
    n_samples: int = 20,
    master_seed: int = 0,
) -> DisorderSpec:
    """Convert SI widths (ordinary frequencies, metres) using ``spec.scale``."""
    if spec.scale is None:
        raise ValueError("spec has no SI scale attached")
    hz = spec.scale.rate / (2 * math.pi)
    return DisorderSpec(
        sigma_omega=sigma_frequency_hz / hz,
        sigma_gamma=sigma_decay_hz / hz,
        sigma_x=sigma_position_m / spec.scale.length,
        truncation=truncation,
        n_samples=n_samples,
        master_seed=master_seed,
    )


def transmon_disorder(spec: SystemSpec, n_samples: int = 20, master_seed: int = TRANSMON_SEED) -> DisorderSpec:
    """Reference widths: 3 sigma = 100 MHz, 0.03 gamma, 500 nm."""
    return disorder_from_si(
        spec,
        sigma_frequency_hz=TRANSMON_THREE_SIGMA_FREQUENCY_HZ / 3,
        sigma_decay_hz=TRANSMON_THREE_SIGMA_GAMMA * TRANSMON_GAMMA_HZ / 3,
        sigma_position_m=TRANSMON_THREE_SIGMA_POSITION_M / 3,
        n_samples=n_samples,
        master_seed=master_seed,
    )


# ---------------------------------------------------------------------------
# first-order response
# ---------------------------------------------------------------------------


def linear_response_dR(
    ideal: IdealArraySpec,
    d_omega: Sequence[float],
    d_gamma: Sequence[float],
    d_x: Sequence[float],
    k: float = 1.0,
) -> complex:
    """Leading-order change of R from per-atom offsets.

    ``sum_i (2 i gamma / D^2) d_omega_i + (2 i / D) d_gamma_i`` over the N
    atoms plus ``sum_i (N gamma^2 k r / D^2) dx_i`` over N - 1 position
    offsets, with ``r`` the collective-mirror reflection and ``D`` the
    detuning.
    """
    delta = ideal.detuning
    if delta == 0:
        raise DegenerateError("first-order response diverges at zero detuning")
    n = ideal.n_atoms
    g = ideal.single_atom_decay
    d_omega = np.asarray(d_omega, dtype=float)
    d_gamma = np.asarray(d_gamma, dtype=float)
    d_x = np.asarray(d_x, dtype=float)
    if d_omega.shape != (n,) or d_gamma.shape != (n,):
        raise ValueError(f"d_omega and d_gamma need {n} entries")
    if d_x.shape != (max(n - 1, 0),):
        raise ValueError(f"d_x needs {n - 1} entries")
    r = ceam_coeffs(ideal).r
    per_atom = (2j * g / delta**2) * d_omega + (2j / delta) * d_gamma
    return complex(per_atom.sum() + (n * g**2 * k * r / delta**2) * d_x.sum())


CHANNELS = ("omega", "gamma", "position", "gap")


@dataclass(frozen=True)
class ResponseRow:
    channel: str
    index: int
    dR_numeric: complex
    dR_half: complex
    dR_formula: complex

    @property
    def linearity(self) -> float:
        """|dR(eps)| / |dR(eps/2)|; 2 for a linear response."""
        return abs(self.dR_numeric) / abs(self.dR_half)

    @property
    def ratio(self) -> complex:
        return self.dR_numeric / self.dR_formula if self.dR_formula != 0 else complex(math.nan)


@dataclass
class ValidationReport:
    n_atoms: int
    detuning: float
    kx: float
    scale: float
    rows: list[ResponseRow]

    def channel_rows(self, channel: str) -> list[ResponseRow]:
        return [row for row in self.rows if row.channel == channel]

    def channel_mean_response(self, channel: str) -> float:
        """Mean over atoms of |dR| / scale for single-atom perturbations."""
        return float(np.mean([abs(row.dR_numeric) for row in self.channel_rows(channel)]) / self.scale)

    def linear(self, channel: str, rtol: float = 0.01) -> bool:
        return all(abs(row.linearity / 2 - 1) < rtol for row in self.channel_rows(channel))


def _single_offsets(n: int, channel: str, index: int, eps: float):
    dw, dg, dx = np.zeros(n), np.zeros(n), np.zeros(n)
    formula_dx = np.zeros(max(n - 1, 0))
    if channel == "omega":
        dw[index] = eps
    elif channel == "gamma":
        dg[index] = eps
    elif channel == "position":
        # atom `index` moves; mirror and other atoms stay
        dx[index] = eps
        if index < n - 1:
            formula_dx[index] = eps
    elif channel == "gap":
        # gap `index` (between atoms index, index+1) grows; everything left of it shifts
        dx[: index + 1] = -eps
        formula_dx[index] = eps
    else:
        raise ValueError(f"unknown channel {channel!r}")
    return dw, dg, dx, formula_dx


def linear_response_validation(
    ideal: IdealArraySpec,
    perturbation_scale: float = 1e-6,
    kx: Optional[float] = None,
    channels: Sequence[str] = CHANNELS,
) -> ValidationReport:
    """Numeric dR from the transfer-matrix chain for every single-atom offset.

    ``position`` moves one atom with the mirror fixed (N entries);
    ``gap`` widens one inter-atom gap (N - 1 entries). The formula's dx sum
    runs over N - 1 terms, so for ``position`` the last atom has no
    formula counterpart and gets a zero formula value.
    """
    if ideal.detuning == 0:
        raise DegenerateError("first-order response diverges at zero detuning")
    if kx is None:
        wp = find_working_point(ceam_coeffs(ideal), verify=False)
        kx = wp.kx_opt if wp.kx_opt > 0 else wp.kx_opt + math.pi
    base = ideal.to_system(kx)
    r0 = total_reflection_transfer_matrix(base).R
    n = ideal.n_atoms
    rows = []
    for channel in channels:
        count = n - 1 if channel == "gap" else n
        for i in range(count):
            vals = []
            for eps in (perturbation_scale, perturbation_scale / 2):
                dw, dg, dx, _ = _single_offsets(n, channel, i, eps)
                spec = perturbed_copy(base, dw, dg, dx)
                vals.append(total_reflection_transfer_matrix(spec).R - r0)
            dw, dg, _, fdx = _single_offsets(n, channel, i, perturbation_scale)
            formula = linear_response_dR(ideal, dw, dg, fdx)
            rows.append(ResponseRow(channel, i, vals[0], vals[1], formula))
    return ValidationReport(n, ideal.detuning, kx, perturbation_scale, rows)


def response_exponent(
    channel: str,
    vary: str,
    values: Sequence[float],
    n_atoms: int = 10,
    detuning: float = 1.0,
    perturbation_scale: float = 1e-6,
) -> float:
    """Log-log slope of the atom-averaged |dR| against detuning or N."""
    responses = []
    for v in values:
        if vary == "detuning":
            ideal = IdealArraySpec(n_atoms, float(v))
        elif vary == "n_atoms":
            ideal = IdealArraySpec(int(v), detuning)
        else:
            raise ValueError(f"vary must be 'detuning' or 'n_atoms', got {vary!r}")
        rep = linear_response_validation(ideal, perturbation_scale, channels=(channel,))
        responses.append(rep.channel_mean_response(channel))
    return loglog_slope(values, responses)
