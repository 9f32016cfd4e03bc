"""Wall-clock comparison of the compiled and numpy leapfrog kernels.

Usage: ``python benchmarks/bench_kernels.py [--steps N] [--h H]``.  Both
kernels advance the same Glassey-type state; the script reports seconds
per run, the speed-up and the largest difference between the results.
"""
import argparse
import time

import numpy as np

from blowuplab import kernels
from blowuplab.wave_solver import SolverConfig, advance, init_state, setup


def time_kernel(fn, config, eps, steps, repeats):
    best = np.inf
    for _ in range(repeats):
        sim = setup(config, "transformed")
        state = init_state(sim, eps)
        t0 = time.perf_counter()
        advance(sim, state, steps, backend=fn)
        best = min(best, time.perf_counter() - t0)
    return best, state


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--steps", type=int, default=2000)
    ap.add_argument("--h", type=float, default=0.05)
    ap.add_argument("--repeats", type=int, default=3)
    args = ap.parse_args(argv)
    if kernels.compiled_leapfrog is None:
        raise SystemExit("compiled kernel not built; run pip install -e . --no-build-isolation")
    cfg = SolverConfig(n=3, p=1.5, c1=1.0, c2=0.0, h=args.h, cfl=0.97, t_max=args.steps * args.h,
                       R0=1.0)
    tc, sc = time_kernel(kernels.compiled_leapfrog, cfg, 0.05, args.steps, args.repeats)
    tp, sp = time_kernel(kernels.python_leapfrog, cfg, 0.05, args.steps, args.repeats)
    diff = float(np.max(np.abs(sc.u - sp.u)) / max(np.max(np.abs(sp.u)), 1e-300))
    cells = sc.support + 1
    print(f"steps              {args.steps}")
    print(f"active cells (end) {cells}")
    print(f"compiled           {tc:.4f} s")
    print(f"python             {tp:.4f} s")
    print(f"speed-up           {tp / tc:.1f}x")
    print(f"max rel difference {diff:.3e}")


if __name__ == "__main__":
    main()
