"""Time the coordinate-descent kernel: numba vs pure numpy.

    python3 benchmarks/bench_cd.py [--p 100] [--n 1000] [--repeat 20]

Both backends solve the same lasso from a cold start; the script checks that
they agree before reporting timings.  JIT compilation is excluded by a
warm-up call.
"""

import argparse
import time

import numpy as np

from factor_lasso import _kernels
from factor_lasso.lasso import LassoProblem, clustered_penalty_loadings, penalty_level


def make_problem(n, T, p, seed):
    rng = np.random.default_rng(seed)
    U = rng.standard_normal((n, T, p))
    beta = 1.0 / np.arange(1, p + 1) ** 2
    r = U @ beta + rng.standard_normal((n, T))
    prob = LassoProblem(r, U)
    half = 0.5 * penalty_level(n, T, p) * clustered_penalty_loadings(U, r)
    return prob, half


def run(fn, prob, half, max_sweeps, tol):
    g = np.zeros(prob.p)
    sweeps, _ = fn(prob.gram, prob.corr, half, prob.skip, g, max_sweeps, tol)
    return g, sweeps


def best_of(fn, prob, half, repeat, max_sweeps, tol):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        run(fn, prob, half, max_sweeps, tol)
        times.append(time.perf_counter() - t0)
    return min(times), float(np.median(times))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=100)
    ap.add_argument("--T", type=int, default=10)
    ap.add_argument("--p", type=int, nargs="+", default=[50, 100, 200, 400])
    ap.add_argument("--repeat", type=int, default=20)
    ap.add_argument("--ksteps", type=int, default=15, help="fixed sweep count (the bootstrap workload)")
    args = ap.parse_args()
    if _kernels.cd_sweeps_numba is None:
        raise SystemExit("numba is not importable; nothing to compare")

    print(f"{'p':>5} {'mode':>8} {'numpy ms':>10} {'numba ms':>10} {'speed-up':>9}")
    for p in args.p:
        prob, half = make_problem(args.n, args.T, p, seed=p)
        g_np, _ = run(_kernels.cd_sweeps_numpy, prob, half, 1000, 1e-7)
        g_nb, _ = run(_kernels.cd_sweeps_numba, prob, half, 1000, 1e-7)
        assert np.allclose(g_np, g_nb, rtol=0, atol=1e-12), "backends disagree"
        for mode, ms, tol in (("full", 1000, 1e-7), ("k-step", args.ksteps, 0.0)):
            t_np, _ = best_of(_kernels.cd_sweeps_numpy, prob, half, args.repeat, ms, tol)
            t_nb, _ = best_of(_kernels.cd_sweeps_numba, prob, half, args.repeat, ms, tol)
            print(f"{p:>5} {mode:>8} {1e3 * t_np:>10.3f} {1e3 * t_nb:>10.3f} {t_np / t_nb:>8.1f}x")


if __name__ == "__main__":
    main()
