"""Single-photon interferometric readout of the reflection phase and
inversion of the click statistics back to the mirror distance.

Basis for the photonic state: ``|1_s, 0_r>``, ``|0_s, 1_r>`` (signal,
reference). The balanced recombiner is fixed by

    e^{i phi}|1_s,0_r> + i|0_s,1_r>  ->  (e^{i phi} - 1)|1_a,0_b> + i(e^{i phi} + 1)|0_a,1_b>

(up to the overall 1/2), which is the unitary ``U = [[1, i], [i, 1]] / sqrt 2``
acting on (signal, reference) amplitudes.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.optimize import bisect

from .errors import DegenerateError, EstimationError
from .model import SystemSpec
from .scattering import chain_matrix, reflection_on_grid, response

RECOMBINER = np.array([[1, 1j], [1j, 1]], dtype=complex) / math.sqrt(2)
ROOT_XTOL = 1e-13


@dataclass(frozen=True)
class TwoModePhotonState:
    amplitude_signal: complex
    amplitude_reference: complex

    def as_array(self, dtype=complex) -> np.ndarray:
        return np.array([self.amplitude_signal, self.amplitude_reference], dtype=dtype)

    @property
    def norm(self) -> float:
        return math.sqrt(abs(self.amplitude_signal) ** 2 + abs(self.amplitude_reference) ** 2)


@dataclass(frozen=True)
class MeasurementRecord:
    shots: int
    counts_port_b: int
    p_hat: float
    theta_hat: float
    x_hat: float
    crb_reference: float


@dataclass(frozen=True)
class MonteCarloSummary:
    kx_true: float
    shots: int
    repetitions: int
    rmse: float
    bias: float
    crb: float
    failures: int
    estimates: np.ndarray
    counts: np.ndarray
    theta_hats: np.ndarray

    @property
    def rmse_over_crb(self) -> float:
        return self.rmse / self.crb

    @property
    def rmse_std_error(self) -> float:
        """Approximate standard error of the RMSE from the sample size."""
        return self.rmse / math.sqrt(2 * max(self.repetitions - self.failures, 1))


def prepare_initial_state() -> TwoModePhotonState:
    s = 1 / math.sqrt(2)
    return TwoModePhotonState(complex(s), 1j * s)


def apply_reflection_phase(state: TwoModePhotonState, theta, dtype=None) -> TwoModePhotonState:
    """Signal arm picks up ``exp(i theta)``; the reference arm is untouched."""
    if dtype is not None:
        amp = np.asarray(state.amplitude_signal, dtype=dtype) * np.exp(1j * np.asarray(theta, dtype=dtype))
        return TwoModePhotonState(amp, np.asarray(state.amplitude_reference, dtype=dtype))
    return TwoModePhotonState(state.amplitude_signal * complex(np.exp(1j * theta)), state.amplitude_reference)


def recombine(state: TwoModePhotonState) -> np.ndarray:
    """Output-port amplitudes (a, b) after the balanced recombiner."""
    return RECOMBINER @ state.as_array()


def recombine_and_probabilities(state: TwoModePhotonState) -> tuple[float, float]:
    amp_a, amp_b = recombine(state)
    return abs(amp_a) ** 2, abs(amp_b) ** 2


def port_b_probability(theta) -> np.ndarray:
    """cos^2(theta / 2) for the prepared state with signal phase ``theta``."""
    return np.cos(np.asarray(theta) / 2) ** 2


def sigma_z(theta) -> np.ndarray:
    """Population difference p_b - p_a = cos theta."""
    return np.cos(np.asarray(theta))


def classical_fisher_per_shot(theta) -> np.ndarray:
    """Fisher information about theta carried by one binary click."""
    s = sigma_z(theta)
    ds = -np.sin(np.asarray(theta))
    return ds**2 / (1 - s**2)


def sample_shots(p_b: float, shots: int, rng: np.random.Generator) -> int:
    if not 0 <= p_b <= 1:
        raise ValueError(f"p_b must lie in [0, 1], got {p_b}")
    if shots < 1:
        raise ValueError(f"shots must be >= 1, got {shots}")
    return int(rng.binomial(shots, p_b))


class PhaseModel:
    """Unwrapped theta(kx) of one spec around a prior centre.

    Phases are referenced to R(kx_center) so the branch is continuous
    within the window.
    """

    def __init__(self, spec: SystemSpec, kx_center: float, halfwidth: float, check_points: int = 257):
        self.spec = spec
        self.kx_center = float(kx_center)
        self.halfwidth = float(halfwidth)
        self._m = chain_matrix(spec)
        refl_c, _ = response(self._m, [kx_center])
        self._r_center = refl_c[0]
        self.theta_center = float(np.angle(self._r_center))
        grid = np.linspace(kx_center - halfwidth, kx_center + halfwidth, check_points)
        theta = self.theta(grid)
        steps = np.diff(theta)
        if not (np.all(steps > 0) or np.all(steps < 0)):
            raise EstimationError("theta(x) is not monotonic on the prior window")
        self.lo, self.hi = grid[0], grid[-1]
        self.theta_lo, self.theta_hi = theta[0], theta[-1]

    def theta(self, kx) -> np.ndarray:
        refl, _ = response(self._m, kx)
        rel = np.unwrap(np.angle(refl * np.conj(self._r_center)))
        return self.theta_center + rel

    def slope(self, kx: float) -> float:
        refl, d_refl = response(self._m, [kx])
        return float((d_refl[0] / refl[0]).imag)

    def theta_scalar(self, kx: float) -> float:
        refl, _ = response(self._m, [kx])
        return self.theta_center + float(np.angle(refl[0] * np.conj(self._r_center)))

    def invert(self, theta_target: float) -> float:
        f = lambda kx: self.theta_scalar(kx) - theta_target
        lo_val, hi_val = self.theta_lo - theta_target, self.theta_hi - theta_target
        if lo_val == 0:
            return self.lo
        if hi_val == 0:
            return self.hi
        if np.sign(lo_val) == np.sign(hi_val):
            raise EstimationError(f"phase {theta_target!r} outside the prior window")
        return bisect(f, self.lo, self.hi, xtol=ROOT_XTOL, maxiter=200)


def default_window(spec: SystemSpec, kx_center: float) -> float:
    """Half-width over which the phase moves by roughly +-pi/4 (linear estimate)."""
    refl, d_refl = reflection_on_grid(spec, [kx_center])
    slope = abs((d_refl[0] / refl[0]).imag)
    if slope == 0:
        raise DegenerateError("flat phase: no readout window")
    return 0.25 * math.pi / slope


def estimate_x(
    counts: int,
    shots: int,
    spec: SystemSpec,
    kx_prior_center: float,
    readout_phase: float = 0.0,
    window_halfwidth: Optional[float] = None,
    model: Optional[PhaseModel] = None,
) -> MeasurementRecord:
    """Invert a click count to a mirror distance (local, tracking estimator).

    The measured phase is ``theta(kx) + readout_phase``. Its arccos
    ambiguity is resolved by taking the branch closest to the phase at
    ``kx_prior_center``; the window must sit inside half a fringe.
    """
    if not 0 <= counts <= shots:
        raise ValueError(f"counts must lie in [0, shots], got {counts}")
    if model is None:
        if window_halfwidth is None:
            window_halfwidth = default_window(spec, kx_prior_center)
        model = PhaseModel(spec, kx_prior_center, window_halfwidth)
    p_hat = counts / shots
    if p_hat in (0.0, 1.0):
        raise DegenerateError("saturated port: phase sits at a stationary point of the fringe")
    base = math.acos(2 * p_hat - 1)
    ref = model.theta_center + readout_phase
    # candidates +-base + 2 pi m nearest the prior phase
    m = round((ref - base) / (2 * math.pi))
    cands = [s * base + 2 * math.pi * mm for s in (1, -1) for mm in (m - 1, m, m + 1)]
    total = min(cands, key=lambda c: abs(c - ref))
    theta_hat = total - readout_phase
    x_hat = model.invert(theta_hat)
    slope = model.slope(x_hat)
    crb = math.inf if slope == 0 else 1 / (math.sqrt(shots) * abs(slope))
    return MeasurementRecord(shots, counts, p_hat, theta_hat, x_hat, crb)


def quadrature_readout_phase(spec: SystemSpec, kx: float) -> float:
    """Reference phase placing the total fringe phase at pi/2 for mirror distance kx."""
    refl, _ = reflection_on_grid(spec, [kx])
    return math.pi / 2 - float(np.angle(refl[0]))


def monte_carlo(
    spec: SystemSpec,
    kx_true: float,
    shots: int,
    repetitions: int,
    master_seed: int,
    readout_phase: Optional[float] = None,
    window_halfwidth: Optional[float] = None,
    threads: int = 1,
) -> MonteCarloSummary:
    """Repeat the shot-limited measurement and collect estimator statistics.

    Repetition ``i`` draws from ``SeedSequence(master_seed, spawn_key=(i,))``,
    so results do not depend on ``threads``.
    """
    if readout_phase is None:
        readout_phase = quadrature_readout_phase(spec, kx_true)
    if window_halfwidth is None:
        window_halfwidth = default_window(spec, kx_true)
    model = PhaseModel(spec, kx_true, window_halfwidth)
    p_b = float(port_b_probability(model.theta_scalar(kx_true) + readout_phase))

    def one(i: int) -> tuple[int, float, float]:
        rng = np.random.default_rng(np.random.SeedSequence(master_seed, spawn_key=(i,)))
        counts = sample_shots(p_b, shots, rng)
        try:
            rec = estimate_x(counts, shots, spec, kx_true, readout_phase, model=model)
        except (EstimationError, DegenerateError):
            return counts, math.nan, math.nan
        return counts, rec.theta_hat, rec.x_hat

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            out = list(pool.map(one, range(repetitions)))
    else:
        out = [one(i) for i in range(repetitions)]
    xs = np.array([o[2] for o in out])
    ok = xs[np.isfinite(xs)]
    err = ok - kx_true
    crb = 1 / (math.sqrt(shots) * abs(model.slope(kx_true)))
    return MonteCarloSummary(
        kx_true=kx_true,
        shots=shots,
        repetitions=repetitions,
        rmse=float(np.sqrt(np.mean(err**2))) if ok.size else math.nan,
        bias=float(np.mean(err)) if ok.size else math.nan,
        crb=crb,
        failures=int(xs.size - ok.size),
        estimates=xs,
        counts=np.array([o[0] for o in out]),
        theta_hats=np.array([o[1] for o in out]),
    )
