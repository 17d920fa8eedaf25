"""Timing comparison of the compiled and NumPy kernel backends.

Run from the repository root:

    python3 benchmarks/bench_kernels.py
    python3 benchmarks/bench_kernels.py --n 2000 --dim 300 --repeats 5

Both backends compute identical values (the test suite pins them to
1e-12 of each other); this script only reports wall time.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from flavorbench.kernels import backends


def _unit_rows(n: int, dim: int, rng) -> np.ndarray:
    vectors = rng.normal(size=(n, dim))
    return vectors / np.linalg.norm(vectors, axis=1, keepdims=True)


def _time(fn, repeats: int) -> float:
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def run(n: int, dim: int, k: int, repeats: int) -> None:
    rng = np.random.default_rng(0)
    unit = _unit_rows(n, dim, rng)
    queries = np.arange(0, n, max(1, n // 50), dtype=np.int64)

    # ~n/8 groups of varying sizes for the group kernels
    n_groups = max(2, n // 8)
    bounds = np.sort(rng.choice(np.arange(1, n), size=n_groups - 1, replace=False))
    starts = np.concatenate(([0], bounds, [n])).astype(np.int64)
    codes = rng.integers(-1, n_groups, size=n).astype(np.int64)

    cases = {
        "pairwise_cosine_flat": lambda mod: mod.pairwise_cosine_flat(unit),
        "group_pair_stats": lambda mod: mod.group_pair_stats(unit, starts),
        f"topk_neighbors(k={k})": lambda mod: mod.topk_neighbors(unit, queries, k),
        "within_cross_means": lambda mod: mod.within_cross_means(unit, codes),
    }

    mods = backends()
    print(f"n={n} dim={dim} queries={len(queries)} groups={n_groups} "
          f"repeats={repeats} (best of)")
    header = f"{'kernel':<28}" + "".join(f"{name:>12}" for name in sorted(mods))
    if len(mods) > 1:
        header += f"{'speedup':>10}"
    print(header)
    for label, call in cases.items():
        times = {name: _time(lambda m=mod: call(m), repeats)
                 for name, mod in sorted(mods.items())}
        row = f"{label:<28}" + "".join(f"{times[name] * 1e3:>10.2f}ms"
                                       for name in sorted(times))
        if len(times) > 1:
            row += f"{times['python'] / times['c']:>9.1f}x"
        print(row)
    if "c" not in mods:
        print("\ncompiled backend not importable; showing the NumPy fallback only")


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--n", type=int, default=1500, help="rows")
    parser.add_argument("--dim", type=int, default=300, help="columns")
    parser.add_argument("--k", type=int, default=10, help="neighbours per query")
    parser.add_argument("--repeats", type=int, default=3)
    args = parser.parse_args()
    run(args.n, args.dim, args.k, args.repeats)


if __name__ == "__main__":
    main()
