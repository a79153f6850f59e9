"""Compiled vs pure-Python kernel timings, and micro-step savings of FFD packing.

    python3 benchmarks/bench_kernels.py [--repeat N]
"""
import argparse
import random
import timeit

import numpy as np

from rlcs import _pykernels
from rlcs.sched import WorkItem, naive_microsteps, pack_microsteps

try:
    from rlcs import _kernels
except ImportError:
    _kernels = None


def cases(rng):
    words = ["".join(rng.choice("abcdefgh汉字é") for _ in range(rng.randint(50, 400))) for _ in range(20)]
    table = np.random.default_rng(0).normal(size=(32, 32, 64))
    costs = sorted((rng.randint(100, 32000) for _ in range(4096)), reverse=True)
    return {
        "levenshtein 20x20 strings": lambda k: [k.levenshtein(a, b) for a in words[:10] for b in words[10:]],
        "cubic_resample 32x32x64 -> 48x40": lambda k: k.cubic_resample(table, 48, 40, -0.5),
        "lpt 4096 items, 8 ranks": lambda k: k.lpt([float(c) for c in costs], 8),
        "ffd 4096 items, cap 32768": lambda k: k.ffd(costs, 32768),
    }


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    rng = random.Random(1)
    backends = [("python", _pykernels)] + ([("compiled", _kernels)] if _kernels else [])
    print(f"{'kernel':<34}" + "".join(f"{n:>12}" for n, _ in backends) + ("     speedup" if _kernels else ""))
    for name, fn in cases(rng).items():
        times = [min(timeit.repeat(lambda: fn(k), number=1, repeat=args.repeat)) for _, k in backends]
        row = f"{name:<34}" + "".join(f"{t * 1e3:>10.2f}ms" for t in times)
        if len(times) == 2:
            row += f"{times[0] / times[1]:>11.1f}x"
        print(row)
    if not _kernels:
        print("(compiled extension not built; python only)")

    print()
    print(f"{'batch':<34}{'naive':>12}{'ffd':>12}{'saved':>12}")
    for n, lo, hi in [(256, 500, 8192), (1024, 200, 16000), (1024, 2000, 32768)]:
        items = [WorkItem(f"s{i}", rng.randint(lo, hi)) for i in range(n)]
        a, b = naive_microsteps(items, 32768).n_bins, pack_microsteps(items, 32768).n_bins
        print(f"{f'{n} samples, lengths {lo}..{hi}':<34}{a:>12}{b:>12}{1 - b / a:>12.0%}")


if __name__ == "__main__":
    main()
