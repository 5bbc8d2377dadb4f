"""Monte-Carlo oracle for closed-loop yields on a 2-D Gaussian stream.

Independent of the package on purpose: the collection loop is re-implemented
here with plain numpy primitives (numpy RNG, np.linalg.solve) so the numbers
frozen into tests/test_acceptance.py come from a second code path.

Run:  python tests/oracles/yield_bands.py
"""

from __future__ import annotations

import numpy as np

T = 6000
NU = 50
N_MIN = 25
REPS = 200


def solve_r_max_sq(target: float) -> float:
    """Root of (x/2)*exp(-x/2) = target on the decaying branch (x > 2)."""
    lo, hi = 2.0, 40.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if 0.5 * mid * np.exp(-0.5 * mid) > target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def run_once(rng: np.random.Generator, steps: int, policy: str, r2: float,
             d: int = 2) -> tuple[int, float]:
    """One closed-loop pass; returns (kept count, tail acceptance rate)."""
    z_all = rng.standard_normal((steps, d))
    draws = rng.random(steps)
    n = 0
    mu = np.zeros(d)
    cm = np.zeros((d, d))
    n_min_eff = max(N_MIN, d + 2)
    kept = 0
    tail_kept = 0
    tail_from = 10_000
    for k in range(steps):
        z = z_all[k]
        n += 1
        delta = z - mu
        mu = mu + delta / n
        cm = cm + np.outer(delta, z - mu)
        if n < n_min_eff:
            psi = 1.0
        else:
            sigma = cm / (n - 1)
            v = z - mu
            d2 = float(v @ np.linalg.solve(sigma, v))
            if policy == "C":
                psi = 1.0 - min(1.0, n / NU) * np.exp(-0.5 * d2)
            else:
                psi = np.exp(0.5 * (d2 - r2)) if d2 <= r2 else 0.0
        if draws[k] < psi:
            kept += 1
            if k >= tail_from:
                tail_kept += 1
    tail = tail_kept / max(1, steps - tail_from)
    return kept, tail


def main() -> None:
    target = 877.0 / 6000.0
    r2 = solve_r_max_sq(target)
    rate = 0.5 * r2 * np.exp(-0.5 * r2)
    sig = np.sqrt(T * rate * (1.0 - rate))
    print(f"r_max_sq solving (x/2)exp(-x/2)={target:.10f}: {r2:.10f}")
    print(f"  check rate={rate:.10f}  6000*rate={6000 * rate:.3f}  3sig={3 * sig:.3f}")
    print(f"  spec default 5.66 gives rate={0.5 * 5.66 * np.exp(-0.5 * 5.66):.6f}")

    rng = np.random.default_rng(20250815)
    for policy in ("C", "R"):
        yields = np.array([run_once(rng, T, policy, r2)[0] for _ in range(REPS)])
        print(f"psi_{policy}: T={T} reps={REPS} mean={yields.mean():.2f} "
              f"std={yields.std(ddof=1):.2f} min={yields.min()} max={yields.max()}")
        print(f"  band mean+-3std: [{yields.mean() - 3 * yields.std(ddof=1):.1f}, "
              f"{yields.mean() + 3 * yields.std(ddof=1):.1f}]")

    kept, tail = run_once(rng, 110_000, "C", r2)
    print(f"psi_C long run: kept={kept} tail acceptance (steps 1e4..1.1e5)={tail:.5f}")

    # d=1 steady acceptance for psi_C (count-stream analogue, Gaussian case)
    kept1, tail1 = run_once(rng, 60_000, "C", r2, d=1)
    print(f"psi_C d=1 tail acceptance={tail1:.5f} (analytic 1-2^-0.5={1 - 2 ** -0.5:.5f})")


if __name__ == "__main__":
    main()
