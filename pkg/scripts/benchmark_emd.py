#!/usr/bin/env python3
"""Benchmark the transport solver across support sizes.

Times the exact mover's distance on random sparse histogram pairs and,
where the support is small enough, cross-checks against the dense LP
reference solver.

    python3 scripts/benchmark_emd.py --pairs 20 --supports 12 64 256
"""

import argparse
import time

import numpy as np

from palette_forge.colorspace import DistanceParams
from palette_forge.histogram import DIMS, N_BINS, HsvHistogram
from palette_forge.transport import emd, emd_oracle, ground_distance


def random_histogram(rng, support):
    idx = rng.choice(N_BINS, size=support, replace=False)
    mass = rng.random(support)
    mass /= mass.sum()
    return HsvHistogram.from_sparse({int(i): float(m) for i, m in zip(idx, mass)}, DIMS)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--pairs", type=int, default=20, help="pairs per support size")
    parser.add_argument(
        "--supports", type=int, nargs="+", default=[12, 64, 256],
        help="nonzero bins per histogram",
    )
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    rng = np.random.default_rng(args.seed)
    print("building ground distance matrix...")
    start = time.perf_counter()
    ground = ground_distance(DistanceParams(), DIMS)
    print(f"  {N_BINS}x{N_BINS} in {time.perf_counter() - start:.2f}s")

    # first call compiles the flow kernel; keep it out of the timings
    emd(random_histogram(rng, 4), random_histogram(rng, 4), ground)

    print(f"{'support':>8} {'pairs':>6} {'mean ms':>9} {'max ms':>8} {'max |lp diff|':>14}")
    for support in args.supports:
        times = []
        worst = 0.0
        checked = False
        for _ in range(args.pairs):
            p = random_histogram(rng, support)
            q = random_histogram(rng, support)
            start = time.perf_counter()
            got, _ = emd(p, q, ground)
            times.append(time.perf_counter() - start)
            if 2 * support <= 64:
                worst = max(worst, abs(got - emd_oracle(p, q, ground)))
                checked = True
        mean_ms = 1000.0 * sum(times) / len(times)
        max_ms = 1000.0 * max(times)
        diff = f"{worst:.2e}" if checked else "(skipped)"
        print(f"{support:>8} {args.pairs:>6} {mean_ms:>9.2f} {max_ms:>8.2f} {diff:>14}")


if __name__ == "__main__":
    main()
