"""``ceam-sim``: batch front end writing CSV tables plus JSON sidecars.

Exit codes: 0 success, 2 bad config, 3 numerical failure, 4 some ensemble
samples or repetitions failed.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import platform
import sys
import time
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from . import __version__, kernels
from .config import MODES, SCHEMA, ConfigError, RunConfig, ideal_from_system, load_config, output_directory
from .disorder import linear_response_validation, response_exponent, run_ensemble
from .errors import NumericalFailure
from .estimator import monte_carlo
from .scattering import ceam_coeffs, reflection_on_grid
from .sensitivity import (
    asymptotic_peak,
    cramer_rao_bound,
    finesse_report,
    find_working_point,
    qfi_from_state,
    scaling_sweep,
)

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_PARTIAL = 0, 2, 3, 4


def fmt(value) -> str:
    """17 significant digits: exact round trip for doubles."""
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(v) for v in row])


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else repr(v)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def write_sidecar(path: Path, config: RunConfig, outputs: list[str], results: dict, wall: float, threads: int) -> None:
    meta = {
        "tool": "ceam-sim",
        "version": __version__,
        "kernel_backend": kernels.backend_name(),
        "python": platform.python_version(),
        "numpy": np.__version__,
        "mode": config.mode,
        "master_seed": config.master_seed,
        "threads": threads,
        "wall_time_s": wall,
        "created_utc": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
        "config": config.resolved,
        "derived": {
            "boundary_distance_kx": config.system.boundary_distance,
            "wavenumber_per_m": config.system.wavenumber if config.system.scale else None,
        },
        "outputs": outputs,
        "results": results,
    }
    path.write_text(json.dumps(_jsonable(meta), indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _grid(config: RunConfig) -> np.ndarray:
    g = config.resolved["grid"]
    return np.linspace(g["kx_min"], g["kx_max"], g["points"])


def run_sweep(config: RunConfig, out: Path, prefix: str, threads: int):
    kx = _grid(config)
    spec = config.system
    refl, d_refl = reflection_on_grid(spec, kx)
    theta = np.unwrap(np.angle(refl))
    slope = (d_refl / refl).imag
    name = f"{prefix}sweep.csv"
    write_csv(out / name, ["kx", "theta_unwrapped", "dtheta_dkx", "abs_R"], zip(kx, theta, slope, np.abs(refl)))
    return [name], {"wavenumber_per_m": spec.wavenumber if spec.scale else None,
                    "max_abs_dtheta_dkx": float(np.max(np.abs(slope)))}, EXIT_OK


def run_scaling(config: RunConfig, out: Path, prefix: str, threads: int):
    block = config.resolved["scaling"]
    ideal = ideal_from_system(config.system)
    res = scaling_sweep(block["n_list"], ideal.detuning, ideal.single_atom_decay, fit_min_n=block["fit_min_n"])
    name = f"{prefix}scaling.csv"
    write_csv(out / name, ["N", "peak_dtheta_dkx", "kx_opt"], zip(res.n_atoms, res.peak_dtheta_dkx, res.kx_opt))
    n_max = max(res.n_atoms)
    peak_max = res.peak_dtheta_dkx[res.n_atoms.index(n_max)]
    return [name], {
        "fit_slope": res.slope,
        "fit_slope_restricted": res.slope_restricted,
        "fit_min_n": res.fit_min_n,
        "detuning": ideal.detuning,
        "peak_over_asymptote_at_max_n": peak_max / asymptotic_peak(n_max, ideal.detuning, ideal.single_atom_decay),
    }, EXIT_OK


def run_working_point(config: RunConfig, out: Path, prefix: str, threads: int):
    ideal = ideal_from_system(config.system)
    ceam = ceam_coeffs(ideal)
    wp = find_working_point(ceam, verify=True)
    if wp.degenerate:
        raise NumericalFailure("resonant mirror: working point is degenerate")
    shots = config.resolved.get("estimation", {}).get("shots", 1)
    k = config.system.wavenumber
    qfi = qfi_from_state(wp.peak_sensitivity)
    fin = finesse_report(abs(ceam.r), 1.0)
    header = ["n_atoms", "detuning", "kx_opt", "epsilon_r", "theta_r", "peak_dtheta_dkx", "peak_dtheta_dx",
              "qfi_kx", "crb_kx", "shots", "finesse", "n_bounces", "grid_verified"]
    row = [ideal.n_atoms, ideal.detuning, wp.kx_opt, wp.epsilon_r, wp.theta_r, wp.peak_sensitivity,
           k * wp.peak_sensitivity, qfi, cramer_rao_bound(qfi, shots), shots, fin.finesse, fin.n_bounces,
           bool(wp.verified)]
    name = f"{prefix}working_point.csv"
    write_csv(out / name, header, [row])
    return [name], {"wavenumber_per_m": k if config.system.scale else None,
                    "crb_m": cramer_rao_bound(qfi, shots) / k if config.system.scale else None}, EXIT_OK


def run_disorder(config: RunConfig, out: Path, prefix: str, threads: int):
    grid = _grid(config)
    res = run_ensemble(config.system, config.disorder, grid, threads=threads)
    names = []
    summary = f"{prefix}disorder_summary.csv"
    write_csv(
        out / summary,
        ["sample", "peak_dtheta_dkx", "kx_peak", "flagged", "resamples"],
        zip(range(res.n_samples), res.peak_values, res.peak_locations, res.flagged, res.resamples),
    )
    names.append(summary)
    ideal_name = f"{prefix}curves/ideal.csv"
    write_csv(out / ideal_name, ["kx", "dtheta_dkx"], zip(grid, res.ideal_curve))
    names.append(ideal_name)
    for i, curve in enumerate(res.curves):
        name = f"{prefix}curves/sample_{i:03d}.csv"
        write_csv(out / name, ["kx", "dtheta_dkx"], zip(grid, curve))
        names.append(name)
    d = config.disorder
    results = {
        "stats": res.stats,
        "ideal_peak": res.ideal_peak,
        "ideal_peak_location": res.ideal_peak_location,
        "n_flagged": int(res.flagged.sum()),
        "total_resamples": int(res.resamples.sum()),
        "flag_reasons": {str(k): v for k, v in res.errors.items()},
        "disorder_internal": {"sigma_omega": d.sigma_omega, "sigma_gamma": d.sigma_gamma, "sigma_x": d.sigma_x},
    }
    return names, results, EXIT_PARTIAL if res.flagged.any() else EXIT_OK


def run_estimate(config: RunConfig, out: Path, prefix: str, threads: int):
    est = config.resolved["estimation"]
    spec = config.system
    kx_true = est.get("kx_true", spec.boundary_distance)
    mc = monte_carlo(
        spec, kx_true, est["shots"], est["repetitions"], config.master_seed,
        readout_phase=est.get("readout_phase"), window_halfwidth=est.get("window_halfwidth"), threads=threads,
    )
    name = f"{prefix}estimate.csv"
    p_hat = mc.counts / est["shots"]
    write_csv(out / name, ["repetition", "counts_port_b", "p_hat", "theta_hat", "kx_hat"],
              zip(range(mc.repetitions), mc.counts, p_hat, mc.theta_hats, mc.estimates))
    results = {"kx_true": kx_true, "rmse": mc.rmse, "bias": mc.bias, "crb": mc.crb,
               "rmse_over_crb": mc.rmse_over_crb, "failures": mc.failures}
    return [name], results, EXIT_PARTIAL if mc.failures else EXIT_OK


def run_linear_response(config: RunConfig, out: Path, prefix: str, threads: int):
    lr = config.resolved["linear_response"]
    ideal = ideal_from_system(config.system)
    rep = linear_response_validation(ideal, lr["perturbation_scale"])
    name = f"{prefix}linear_response.csv"
    rows = []
    for row in rep.rows:
        ratio = row.ratio
        rows.append([row.channel, row.index, row.dR_numeric.real, row.dR_numeric.imag,
                     row.dR_formula.real, row.dR_formula.imag, ratio.real, ratio.imag, row.linearity])
    write_csv(out / name, ["channel", "index", "dR_numeric_re", "dR_numeric_im", "dR_formula_re",
                           "dR_formula_im", "ratio_re", "ratio_im", "linearity"], rows)
    scale = lr["perturbation_scale"]
    results = {
        "kx": rep.kx,
        "linear": {ch: rep.linear(ch) for ch in ("omega", "gamma", "position", "gap")},
        "mean_abs_ratio": {
            ch: float(np.nanmean([abs(r.ratio) for r in rep.channel_rows(ch)]))
            for ch in ("omega", "gamma", "position", "gap")
        },
        "exponent_omega_vs_detuning": response_exponent(
            "omega", "detuning", lr["detuning_list"], n_atoms=ideal.n_atoms, perturbation_scale=scale),
        "exponent_position_vs_n": response_exponent(
            "position", "n_atoms", lr["n_list"], detuning=ideal.detuning, perturbation_scale=scale),
        "exponent_gap_vs_n": response_exponent(
            "gap", "n_atoms", lr["n_list"], detuning=ideal.detuning, perturbation_scale=scale),
    }
    return [name], results, EXIT_OK


RUNNERS = {
    "sweep": run_sweep,
    "scaling": run_scaling,
    "working-point": run_working_point,
    "disorder": run_disorder,
    "estimate": run_estimate,
    "validate-linear-response": run_linear_response,
}


def run(config: RunConfig, out_dir: Path, threads: int = 1) -> int:
    start = time.perf_counter()
    prefix = config.resolved["output"]["prefix"]
    out_dir.mkdir(parents=True, exist_ok=True)
    outputs, results, code = RUNNERS[config.mode](config, out_dir, prefix, threads)
    wall = time.perf_counter() - start
    write_sidecar(out_dir / f"{prefix}{config.mode.replace('-', '_')}.json", config, outputs, results, wall, threads)
    return code


def _fail(code: int, kind: str, message: str, **extra) -> int:
    payload = {"error": kind, "message": message, "exit_code": code, **extra}
    print(json.dumps(payload, sort_keys=True), file=sys.stderr)
    return code


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        _fail(EXIT_CONFIG, "usage", message)
        self.exit(EXIT_CONFIG)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ceam-sim", description=__doc__.splitlines()[0])
    parser.add_argument("mode", nargs="?", choices=MODES)
    parser.add_argument("--config", help="JSON run configuration")
    parser.add_argument("--out-dir", help="output directory (overrides config and $CEAM_SIM_OUT_DIR)")
    parser.add_argument("--seed", type=int, help="master seed (overrides config)")
    parser.add_argument("--threads", type=int, default=1)
    parser.add_argument("--version", action="version", version=f"ceam-sim {__version__}")
    parser.add_argument("--schema", action="store_true", help="print the config JSON schema and exit")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    if args.schema:
        print(json.dumps(SCHEMA, indent=2))
        return EXIT_OK
    if args.config is None:
        return _fail(EXIT_CONFIG, "usage", "--config is required")
    if args.threads < 1:
        return _fail(EXIT_CONFIG, "usage", "--threads must be >= 1")
    if args.seed is not None and not 0 <= args.seed < 2**64:
        return _fail(EXIT_CONFIG, "usage", "--seed must be an unsigned 64-bit integer")
    try:
        config = load_config(args.config, args.mode, args.seed)
    except FileNotFoundError:
        return _fail(EXIT_CONFIG, "config", f"no such file: {args.config}")
    except ConfigError as exc:
        return _fail(EXIT_CONFIG, "config", str(exc), path=exc.path)
    except NumericalFailure as exc:
        return _fail(EXIT_NUMERIC, type(exc).__name__, str(exc))
    try:
        return run(config, output_directory(args.out_dir, config), args.threads)
    except NumericalFailure as exc:
        return _fail(EXIT_NUMERIC, type(exc).__name__, str(exc))


if __name__ == "__main__":
    sys.exit(main())
