"""Monte-Carlo oracle for the uniformity-error ordering on a 2-D stream.

Re-implements the loop and the quantile RMSE independently (numpy only) to
check, before the build, that at matched dataset size
    delta_uni(reciprocal) < delta_uni(complementary) < delta_uni(random)
holds with margin, and that the reciprocal curve is flat-or-falling past
N = 1e3.  Also prints the noise floor for uniform draws and the analytic
plateau for the bounded policy (Beta(3/2,3/2) marginals of a uniform disk).

Run:  python tests/oracles/delta_uni_margins.py
"""

from __future__ import annotations

import numpy as np

T = 100_000
NU = 50
N_MIN = 25
R2 = 6.064687026134201  # from yield_bands.py


def delta_uni(vals: np.ndarray, bounds: list[tuple[float, float]]) -> float:
    n, d = vals.shape
    p = (np.arange(1, n + 1) - 0.5) / n
    acc = 0.0
    for j in range(d):
        lo, hi = bounds[j]
        u = (np.sort(vals[:, j]) - lo) / (hi - lo)
        acc += np.mean((u - p) ** 2)
    return float(np.sqrt(acc / d))


def run_policy(seed: int, policy: str, rate: float = 0.0):
    rng = np.random.default_rng(seed)
    z_all = rng.standard_normal((T, 2))
    draws = rng.random(T)
    n = 0
    mu = np.zeros(2)
    cm = np.zeros((2, 2))
    kept_idx = []
    for k in range(T):
        z = z_all[k]
        n += 1
        delta = z - mu
        mu = mu + delta / n
        cm = cm + np.outer(delta, z - mu)
        if n < N_MIN:
            psi = 1.0
        elif policy == "rand":
            psi = rate
        else:
            sigma = cm / (n - 1)
            v = z - mu
            d2 = float(v @ np.linalg.solve(sigma, v))
            if policy == "C":
                psi = 1.0 - min(1.0, n / NU) * np.exp(-0.5 * d2)
            else:
                psi = np.exp(0.5 * (d2 - R2)) if d2 <= R2 else 0.0
        if draws[k] < psi:
            kept_idx.append(k)
    kept = z_all[np.array(kept_idx)]
    sigma = cm / (n - 1)
    box = [(mu[j] - np.sqrt(R2 * sigma[j, j]), mu[j] + np.sqrt(R2 * sigma[j, j]))
           for j in range(2)]
    return kept, box


def empirical_bounds(vals: np.ndarray) -> list[tuple[float, float]]:
    return [(float(vals[:, j].min()), float(vals[:, j].max())) for j in range(vals.shape[1])]


def main() -> None:
    # Noise floor: uniform draws inside known bounds.
    rng = np.random.default_rng(7)
    for n in (1_000, 10_000, 100_000):
        vals = rng.random((n, 2))
        print(f"uniform n={n}: delta_uni={delta_uni(vals, [(0, 1), (0, 1)]):.5f}")

    # Analytic plateau: uniform on the r-ball has Beta(3/2,3/2) marginals on
    # the bounding box; quantile RMSE vs the uniform reference via quadrature.
    from scipy.stats import beta
    p = np.linspace(0.5e-6, 1 - 0.5e-6, 2_000_001)
    q = beta.ppf(p, 1.5, 1.5)
    plateau = np.sqrt(np.mean((q - p) ** 2))
    print(f"uniform-disk plateau (Beta(3/2,3/2) quantile RMSE): {plateau:.5f}")

    orderings = 0
    seeds = range(20)
    for seed in seeds:
        kept_r, box = run_policy(1000 + seed, "R")
        kept_c, _ = run_policy(1000 + seed, "C")
        rate = len(kept_r) / T
        kept_rand, _ = run_policy(1000 + seed, "rand", rate)
        m = min(len(kept_r), len(kept_c), len(kept_rand))
        d_r = delta_uni(kept_r[:m], box)
        d_c = delta_uni(kept_c[:m], empirical_bounds(kept_c[:m]))
        d_rand = delta_uni(kept_rand[:m], empirical_bounds(kept_rand[:m]))
        ok = d_r < d_c < d_rand
        orderings += ok
        trend = [delta_uni(kept_r[:nn], box)
                 for nn in (1000, 3000, 10_000, len(kept_r)) if nn <= len(kept_r)]
        print(f"seed={seed}: N_R={len(kept_r)} d_R={d_r:.4f} d_C={d_c:.4f} "
              f"d_rand={d_rand:.4f} ok={ok} trend={[f'{t:.4f}' for t in trend]}")
    print(f"ordering held in {orderings}/20 seeds")


if __name__ == "__main__":
    main()
