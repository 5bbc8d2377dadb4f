#!/usr/bin/env python3
"""Throughput comparison of the compiled loop kernel vs the pure-Python fallback.

Both backends run the same feedback loop on identical inputs and decision
keys; outputs are checked bitwise before any numbers are reported, so the
speedup is for interchangeable code paths.

Usage:
    python3 benchmarks/bench_kernel.py [--steps N] [--dim D] [--repeat R]
"""

from __future__ import annotations

import argparse
from time import perf_counter

import numpy as np

from fcdc import GaussianStreamConfig, gaussian_matrix
from fcdc import _fallback as fallback
from fcdc.rng import TAG_DECISION, derive_key

try:
    from fcdc import _native as native
except ImportError:
    native = None


def run_loop_once(mod, Z: np.ndarray, key: int):
    dim = Z.shape[1]
    mu = np.zeros(dim)
    cm = np.zeros((dim, dim))
    started = perf_counter()
    psi, dsq, draw, acc, n = mod.run_loop(
        Z, 0, mu, cm, 0, mod.VARIANT_COMPLEMENTARY, 50, 0.0, 0.0, 25,
        mod.SHRINK_OFF, 0.0, 1e-9, 1, key)
    elapsed = perf_counter() - started
    return elapsed, (psi, dsq, draw, acc, n, mu, cm)


def welford_once(mod, Z: np.ndarray):
    dim = Z.shape[1]
    mu = np.zeros(dim)
    cm = np.zeros((dim, dim))
    started = perf_counter()
    n = mod.welford_many(0, mu, cm, Z)
    elapsed = perf_counter() - started
    return elapsed, (n, mu, cm)


def same_outputs(a, b) -> bool:
    for x, y in zip(a, b):
        x = np.asarray(x, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        mask = ~(np.isnan(x) & np.isnan(y))
        if not np.array_equal(x[mask], y[mask]):
            return False
    return True


def bench(label: str, runner, mods, Z: np.ndarray, repeat: int, *args) -> None:
    print(f"\n{label} ({Z.shape[0]} steps, dim {Z.shape[1]})")
    results = {}
    timings = {}
    for name, mod in mods:
        best = None
        for _ in range(repeat):
            elapsed, out = runner(mod, Z, *args)
            best = elapsed if best is None else min(best, elapsed)
        results[name] = out
        timings[name] = best
        print(f"  {name:<8s} {Z.shape[0] / best:>12,.0f} steps/s "
              f"(best of {repeat}: {best:.3f}s)")
    if len(results) == 2:
        (na, _), (nb, _) = mods
        if not same_outputs(results[na], results[nb]):
            raise SystemExit("backends disagree; benchmark numbers are void")
        print(f"  outputs identical; speedup {timings[na] / timings[nb]:.1f}x")


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--steps", type=int, default=200_000)
    ap.add_argument("--dim", type=int, default=2)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=20240601)
    args = ap.parse_args()

    Z = gaussian_matrix(GaussianStreamConfig(
        seed=args.seed, n_samples=args.steps,
        mean=[0.0] * args.dim, covariance=np.eye(args.dim).tolist()))
    key = derive_key(args.seed, TAG_DECISION)

    mods = [("python", fallback)]
    if native is not None:
        mods.append(("c", native))
    else:
        print("compiled kernel not available; timing the fallback only")

    bench("feedback loop", run_loop_once, mods, Z, args.repeat, key)
    bench("moment updates", welford_once, mods, Z, args.repeat)


if __name__ == "__main__":
    main()
