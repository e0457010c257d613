"""Side-by-side timing of the compiled and plain-numpy RK4 kernels.

Runs the five-level comparison workload on both code paths in one
process and reports wall times, the speedup, and the worst numerical
deviation between the sampled states.

Usage:
    python3 benchmarks/bench_kernels.py [--steps N] [--repeats R]
"""

import argparse
import time

import numpy as np

from cptsim.kernels import (
    NUMBA_ENABLED,
    diag_indices_vec,
    rk4_superop,
    rk4_superop_numpy,
    sample_indices,
    transpose_indices,
)
from cptsim.models import LambdaParams, build_two_scale, liouvillian
from cptsim.reduction import embed_ground

PARAMS = LambdaParams(
    detuning=(0.5, 1.2, 0.7, 1.0),
    rabi=(1.0, 1.2, 1.1, 1.3),
    gamma=(5.0, 4.0, 7.0, 5.0),
)


def bench(kernel, args, repeats):
    best = float("inf")
    samples = None
    for _ in range(repeats):
        start = time.perf_counter()
        samples, _, _ = kernel(*args)
        best = min(best, time.perf_counter() - start)
    return best, samples


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--steps", type=int, default=100_000)
    parser.add_argument("--repeats", type=int, default=3)
    cli = parser.parse_args()

    m = build_two_scale(PARAMS)
    d = m.dim
    lmat = liouvillian(m)
    rho0 = embed_ground(np.eye(d - 1, dtype=np.complex128) / (d - 1))
    dt = 1e-3
    args = (
        lmat,
        rho0.ravel(),
        dt,
        cli.steps,
        sample_indices(cli.steps, max(1, cli.steps // 100)),
        transpose_indices(d),
        diag_indices_vec(d),
        1e-12,
    )

    if not NUMBA_ENABLED:
        print("numba unavailable or disabled; both paths run the numpy kernel")
    else:
        warm = (
            lmat,
            rho0.ravel(),
            dt,
            10,
            sample_indices(10, 10),
            transpose_indices(d),
            diag_indices_vec(d),
            1e-12,
        )
        rk4_superop(*warm)

    t_fast, s_fast = bench(rk4_superop, args, cli.repeats)
    t_ref, s_ref = bench(rk4_superop_numpy, args, cli.repeats)
    deviation = float(np.abs(s_fast - s_ref).max())

    label = "numba" if NUMBA_ENABLED else "numpy"
    print(f"steps: {cli.steps}, dim: {d}, repeats: {cli.repeats} (best-of)")
    print(f"active backend ({label}): {t_fast:.3f} s")
    print(f"numpy reference:         {t_ref:.3f} s")
    print(f"speedup: {t_ref / t_fast:.2f}x")
    print(f"max sample deviation: {deviation:.3e}")


if __name__ == "__main__":
    main()
