"""Time the compiled kernels against the pure-Python fallback.

    python3 benchmarks/bench_kernels.py --spins 54 --anneals 50 --sweeps 200
"""
import argparse
import time

import numpy as np

from mdising import _backend
from mdising.anneal import AnnealParams, solve, solve_exact
from mdising.hardware import DeviceProgram


def random_program(n, seed):
    rng = np.random.default_rng(seed)
    K = rng.integers(-7, 8, (n, n))
    np.fill_diagonal(K, 0)
    return DeviceProgram(K)


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--spins", type=int, default=54)
    ap.add_argument("--anneals", type=int, default=50)
    ap.add_argument("--sweeps", type=int, default=200)
    ap.add_argument("--exact-spins", type=int, default=18)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    try:
        _backend.load("cython")
    except ImportError:
        print("compiled kernels not built; nothing to compare")
        return 1

    prog = random_program(args.spins, args.seed)
    params = AnnealParams(args.anneals, args.sweeps, seed=args.seed)
    small = random_program(args.exact_spins, args.seed + 1)

    rows = []
    for label, fn in (
        (f"anneal {args.spins} spins, {args.anneals}x{args.sweeps}", lambda b: solve(prog, params, backend=b).to_json()),
        (f"exhaustive {args.exact_spins} spins", lambda b: solve_exact(small, backend=b)[1]),
    ):
        t_c, out_c = best_of(lambda: fn("cython"), args.repeat)
        t_p, out_p = best_of(lambda: fn("python"), args.repeat)
        rows.append((label, t_c, t_p, out_c == out_p))

    print(f"{'kernel':<36} {'cython s':>10} {'python s':>10} {'speedup':>8}  same")
    for label, t_c, t_p, same in rows:
        print(f"{label:<36} {t_c:>10.4f} {t_p:>10.4f} {t_p / t_c:>7.1f}x  {same}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
