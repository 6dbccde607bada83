"""Compare the compiled and pure-Python ADMM kernels.

Times both inner solvers and one full joint run on the same data with each
backend, and reports the largest difference between their results.

    python3 benchmarks/bench_kernels.py [--k 10 --l 129 --side 50 --repeat 3]
"""

import argparse
import time

import numpy as np

from dynunmix import (Dims, Hyperparams, NoiseSpec, SolverConfig, generate_synthetic,
                      joint_unmix, kernels, solve_A, solve_S)


def best_of(fn, repeat):
    times = []
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--k", type=int, default=10)
    ap.add_argument("--l", type=int, default=129)
    ap.add_argument("--side", type=int, default=50)
    ap.add_argument("--p", type=int, default=3)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    backends = [b for b in ("compiled", "python") if b in kernels.BACKENDS]
    if len(backends) < 2:
        print("compiled extension not built; only the python backend is available")
    dims = Dims(args.k, args.l, args.side ** 2, args.p)
    X, truth = generate_synthetic(dims, noise=NoiseSpec(seed=args.seed))
    h = Hyperparams()
    # a fixed iteration count, so both backends do exactly the same work
    fixed = Hyperparams(max_inner=200, admm_eps_abs=1e-300, admm_eps_rel=1e-300)

    cases = {
        "solve_A (200 iterations)": lambda b: solve_A(X, truth.S, fixed, backend=b)[0],
        "solve_S (200 iterations)": lambda b: solve_S(X, truth.A, truth.psi, truth.S0, fixed,
                                                      backend=b)[0],
        "joint_unmix (to convergence)": lambda b: joint_unmix(
            X, truth.S0, SolverConfig(h=h, record_trace=False, backend=b)).A,
    }
    print(f"K={dims.K} L={dims.L} N={dims.N} P={dims.P}, best of {args.repeat}")
    print(f"{'case':32s}" + "".join(f"{b:>12s}" for b in backends) + f"{'speedup':>10s}"
          + f"{'max diff':>12s}")
    for name, fn in cases.items():
        results = {b: best_of(lambda: fn(b), args.repeat) for b in backends}
        row = f"{name:32s}" + "".join(f"{results[b][0]:11.3f}s" for b in backends)
        if len(backends) == 2:
            speedup = results["python"][0] / results["compiled"][0]
            diff = float(np.max(np.abs(results["python"][1] - results["compiled"][1])))
            row += f"{speedup:9.1f}x{diff:12.1e}"
        print(row)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
