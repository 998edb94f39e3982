"""Compare the compiled and NumPy transfer-matrix kernels.

    python3 benchmarks/bench_kernels.py [--repeat 5]
"""

import argparse
import time

import numpy as np

from ceam import _kernels_py, kernels

try:
    from ceam import _kernels
except ImportError:
    _kernels = None

CASES = [
    # (label, n_cfg, n_atoms, n_pts)
    ("many short chains", 2000, 10, 1),
    ("disorder ensemble", 20, 10, 2001),
    ("long chains", 200, 256, 16),
    ("single long chain, dense grid", 1, 1024, 20_000),
]


def make_inputs(n_cfg, n_atoms, n_pts, seed=0):
    rng = np.random.default_rng(seed)
    det = 1 + 0.1 * rng.standard_normal((n_cfg, n_atoms))
    b = 0.5 / (1j * det)
    gaps = 2 * np.pi + 1e-4 * rng.standard_normal((n_cfg, max(n_atoms - 1, 0)))
    kx = np.tile(np.linspace(0.0, np.pi, n_pts), (n_cfg, 1))
    return b, gaps, kx


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return min(times)


def run(repeat):
    backends = {"python": _kernels_py}
    if _kernels is not None:
        backends["cython"] = _kernels
    print(f"active backend: {kernels.backend_name()}")
    print(f"{'case':32s} {'backend':8s} {'chain ms':>10s} {'response ms':>12s} {'max |diff|':>11s}")
    for label, n_cfg, n_atoms, n_pts in CASES:
        b, gaps, kx = make_inputs(n_cfg, n_atoms, n_pts)
        ref = None
        for name, mod in backends.items():
            m = mod.chain_product(b, gaps)
            t_chain = best_of(lambda: mod.chain_product(b, gaps), repeat)
            t_resp = best_of(lambda: mod.mirror_response(m, kx), repeat)
            refl = mod.mirror_response(m, kx)[0]
            diff = 0.0 if ref is None else float(np.max(np.abs(refl - ref)))
            ref = refl if ref is None else ref
            print(f"{label:32s} {name:8s} {1e3 * t_chain:10.3f} {1e3 * t_resp:12.3f} {diff:11.2e}")


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    run(parser.parse_args().repeat)


if __name__ == "__main__":
    main()
