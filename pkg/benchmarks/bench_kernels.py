"""Time the compiled kernels against the numpy fallback.

Run with ``python3 benchmarks/bench_kernels.py [--repeat N]``.  Each row
reports the best of ``repeat`` runs and checks that both backends agree.
"""
import argparse
import timeit

import numpy as np

from twistlab._ext import BACKENDS, colex_rank_lut
from twistlab.fock import basis

CASES = [(8, 4, 2), (10, 5, 2), (12, 6, 2), (12, 6, 3)]


def random_amps(l, n, seed=0):
    rng = np.random.default_rng(seed)
    dim = basis(l, n).dim
    x = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return x / np.linalg.norm(x)


def bench(repeat):
    if "cython" not in BACKENDS:
        print("compiled backend not built; only the numpy fallback is available")
    names = sorted(BACKENDS)
    print(f"{'kernel':<14}{'(l,n,k)':<12}" + "".join(f"{name:>12}" for name in names) + f"{'speedup':>10}")
    for l, n, k in CASES:
        b = basis(l, n)
        lut = colex_rank_lut(l)
        amps = random_amps(l, n)
        lo, hi = basis(l, n - k).states, basis(l, n + k).states
        jobs = {
            "removal_table": lambda m: m.removal_table(b.states, lut, k),
            "residual_sum": lambda m: m.residual_sum(amps, lut, lo, hi, k),
        }
        for kernel, job in jobs.items():
            times, results = {}, {}
            for name in names:
                mod = BACKENDS[name]
                results[name] = job(mod)
                times[name] = min(timeit.repeat(lambda: job(mod), number=1, repeat=repeat))
            if len(names) > 1:
                a, c = results["python"], results["cython"]
                same = all(np.array_equal(x, y) for x, y in zip(a, c)) if kernel == "removal_table" else np.isclose(a, c, rtol=1e-12)
                if not same:
                    raise SystemExit(f"backends disagree on {kernel} at {(l, n, k)}")
            speed = times["python"] / times["cython"] if "cython" in times else float("nan")
            row = f"{kernel:<14}{str((l, n, k)):<12}" + "".join(f"{times[x] * 1e3:>10.2f}ms" for x in names)
            print(row + f"{speed:>9.1f}x", flush=True)


if __name__ == "__main__":
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=3)
    bench(parser.parse_args().repeat)
