"""Compare the compiled and pure-Python kernels on the simulator and the hitting-set search.

    python3 benchmarks/bench_kernels.py [--sessions 200000] [--repeat 3]
"""

import argparse
import itertools
import time

import numpy as np

from ifgraph.kernels import get_backend
from ifgraph.model import ModelParams
from ifgraph.sim import sample_trace
from ifgraph.theory import gen_group_family, random_graph


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sessions", type=int, default=200_000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)

    py = get_backend("python")
    try:
        cy = get_backend("cython")
    except ImportError:
        print("compiled extension not built; nothing to compare")
        return 1

    print(f"{'workload':<36}{'python s':>10}{'cython s':>10}{'speedup':>9}  same")
    cases = [
        ("simulate n=8 bernoulli", random_graph(8, 3, 1, 0.5, np.random.default_rng(0)), {}),
        ("simulate n=22 group (non-compound)", gen_group_family(22, 5, 2, 0.5)[0], {}),
        ("simulate n=16 queued", random_graph(16, 6, 2, 0.5, np.random.default_rng(1)),
         {"traffic": "queued", "arrival_rates": np.full(16, 0.4)}),
    ]
    par = ModelParams(p=0.5, d=7, s=2)
    for name, g, kw in cases:
        tp, a = best_of(lambda: sample_trace(g, par, args.sessions, 0, backend=py, **kw), args.repeat)
        tc, b = best_of(lambda: sample_trace(g, par, args.sessions, 0, backend=cy, **kw), args.repeat)
        print(f"{name:<36}{tp:>10.3f}{tc:>10.3f}{tp / tc:>8.1f}x  {a == b}")

    rng = np.random.default_rng(2)
    nbits = 40
    # four disjoint singletons force a size-4 answer, so every combination of
    # size <= 3 is tried and rejected: the worst case for the search
    masks = [1 << 0, 1 << 10, 1 << 20, 1 << 30] + [int(m) for m in rng.integers(1, 2**nbits, 396)]
    arr = np.asarray(masks, dtype=np.uint64)
    tp, a = best_of(lambda: py.first_hitting_combo(masks, nbits, 3), args.repeat)
    tc, b = best_of(lambda: cy.first_hitting_combo(arr, nbits, 3), args.repeat)
    same = (a is None and b is None) or (a is not None and b is not None
                                         and tuple(map(int, a)) == tuple(map(int, b)))
    n_combos = sum(1 for r in range(4) for _ in itertools.combinations(range(nbits), r))
    print(f"{f'hitting set 40 bits, {n_combos} combos':<36}{tp:>10.3f}{tc:>10.3f}"
          f"{tp / tc:>8.1f}x  {same}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
