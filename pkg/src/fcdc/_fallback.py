"""Pure-Python kernel: reference implementation of the hot loop.

`_native.pyx` mirrors every expression here one-to-one; both produce
bit-identical doubles (same operation order, same libm, no FMA).  Keep the
two files in sync; the equivalence tests compare them exactly.

All matrix work is open-coded over Python lists: dimensions are small
(d <= 64) and the Cholesky pivots must be observable for the jitter ladder.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import SingularCovariance
from .rng import normal_at, uniform_at

BACKEND = "python"

# shrinkage modes / policy variants (shared codes with the compiled kernel)
SHRINK_OFF = 0
SHRINK_FIXED = 1
SHRINK_ANALYTIC = 2

VARIANT_OPEN_LOOP = 0
VARIANT_RANDOM_RATE = 1
VARIANT_COMPLEMENTARY = 2
VARIANT_RECIPROCAL = 3

PIVOT_FLOOR_REL = 1e-12
JITTER_CAP_REL = 1e-3
_JITTER_CAP_X = JITTER_CAP_REL * 1.0000001


def _welford_step(n, mu, cm, z, d, delta, dz):
    """One mean/co-moment update; mutates mu and cm, returns the new count."""
    n += 1
    for j in range(d):
        delta[j] = z[j] - mu[j]
    for j in range(d):
        mu[j] = mu[j] + delta[j] / n
    for j in range(d):
        dz[j] = z[j] - mu[j]
    for j in range(d):
        row = cm[j]
        for l in range(j + 1):
            row[l] = row[l] + delta[j] * dz[l]
    for j in range(d):
        for l in range(j + 1, d):
            cm[j][l] = cm[l][j]
    return n


def _chol(S, L, d, floor):
    """Lower Cholesky of S into L; False when a pivot drops below `floor`."""
    for j in range(d):
        s = S[j][j]
        for l in range(j):
            s = s - L[j][l] * L[j][l]
        if s <= 0.0 or s < floor:
            return False
        L[j][j] = math.sqrt(s)
        for i in range(j + 1, d):
            t = S[i][j]
            for l in range(j):
                t = t - L[i][l] * L[j][l]
            L[i][j] = t / L[j][j]
    return True


def _sigma_from_cm(cm, n, d, shrink_mode, shrink_lam, S):
    """Fill S with the (optionally shrunk) covariance; returns trace(S)/d."""
    nm1 = n - 1
    tr = 0.0
    for j in range(d):
        tr = tr + cm[j][j]
    tr = tr / nm1
    mu_sc = tr / d
    for i in range(d):
        for j in range(d):
            S[i][j] = cm[i][j] / nm1
    lam = 0.0
    if shrink_mode == SHRINK_FIXED:
        lam = shrink_lam
    elif shrink_mode == SHRINK_ANALYTIC:
        # Rao-Blackwellized Ledoit-Wolf intensity: a function of the sample
        # covariance alone, so it needs no buffered samples.
        tr2 = 0.0
        for i in range(d):
            for j in range(d):
                tr2 = tr2 + S[i][j] * S[i][j]
        num = ((n - 2) / n) * tr2 + tr * tr
        den = (n + 2) * (tr2 - (tr * tr) / d)
        if den <= 0.0:
            lam = 1.0
        else:
            lam = num / den
            if lam > 1.0:
                lam = 1.0
    if lam != 0.0:
        for i in range(d):
            for j in range(d):
                S[i][j] = (1.0 - lam) * S[i][j]
            S[i][i] = S[i][i] + lam * mu_sc
    return mu_sc


def _factor_regularized(cm, n, d, shrink_mode, shrink_lam, jitter, S, S2, L):
    """Regularized covariance factorization with an escalating jitter ladder.

    Fills S with the covariance actually factored (jittered if needed) and L
    with its lower Cholesky factor.  Returns the relative jitter used.
    """
    mu_sc = _sigma_from_cm(cm, n, d, shrink_mode, shrink_lam, S)
    floor = PIVOT_FLOOR_REL * mu_sc
    if _chol(S, L, d, floor):
        return 0.0
    if jitter > 0.0:
        jit = jitter
        while jit <= _JITTER_CAP_X:
            for i in range(d):
                for j in range(d):
                    S2[i][j] = S[i][j]
                S2[i][i] = S2[i][i] + jit * mu_sc
            if _chol(S2, L, d, floor):
                for i in range(d):
                    for j in range(d):
                        S[i][j] = S2[i][j]
                return jit
            jit = jit * 10.0
    raise SingularCovariance(
        f"covariance not positive definite at n={n} (jitter ladder exhausted)"
    )


def _dsq_solve(L, mu, z, y, d):
    """Squared Mahalanobis distance via one forward triangular solve."""
    for i in range(d):
        t = z[i] - mu[i]
        for l in range(i):
            t = t - L[i][l] * y[l]
        y[i] = t / L[i][i]
    acc = 0.0
    for i in range(d):
        acc = acc + y[i] * y[i]
    return acc


def _zeros(d):
    return [[0.0] * d for _ in range(d)]


# ---------------------------------------------------------------------------
# public kernel API (numpy in / numpy out)

def uniform_block(key, start, count):
    """Decision-substream uniforms at positions start..start+count-1."""
    return np.array([uniform_at(key, start + i) for i in range(count)],
                    dtype=np.float64)


def gaussian_block(key, mean, chol_factor, count):
    """`count` correlated Gaussian rows: mean + L @ eps, eps from Box-Muller."""
    d = len(mean)
    mean_l = [float(v) for v in mean]
    L = [[float(v) for v in row] for row in np.asarray(chol_factor)]
    out = np.empty((count, d), dtype=np.float64)
    eps = [0.0] * d
    for m in range(count):
        base = m * d
        for j in range(d):
            eps[j] = normal_at(key, base + j)
        for i in range(d):
            acc = mean_l[i]
            for l in range(i + 1):
                acc = acc + L[i][l] * eps[l]
            out[m, i] = acc
    return out


def categorical_block(key, cum, count):
    """`count` category draws; `cum` is the cumulative probability table."""
    cl = [float(v) for v in cum]
    last = len(cl) - 1
    out = np.empty(count, dtype=np.int64)
    for m in range(count):
        u = uniform_at(key, m)
        idx = 0
        while idx < last and u >= cl[idx]:
            idx += 1
        out[m] = idx
    return out


def cholesky(S):
    """Plain lower Cholesky; raises ValueError when S is not positive definite."""
    S = np.asarray(S, dtype=np.float64)
    d = S.shape[0]
    L = _zeros(d)
    if not _chol(S.tolist(), L, d, 0.0):
        raise ValueError("matrix is not positive definite")
    return np.array(L, dtype=np.float64)


def welford_many(n, mu, cm, Z):
    """Fold all rows of Z into (mu, cm) in place; returns the new count."""
    Z = np.asarray(Z, dtype=np.float64)
    d = mu.shape[0]
    mu_l = mu.tolist()
    cm_l = cm.tolist()
    delta = [0.0] * d
    dz = [0.0] * d
    for z in Z.tolist():
        n = _welford_step(n, mu_l, cm_l, z, d, delta, dz)
    mu[:] = mu_l
    cm[:] = cm_l
    return n


def shrunk_covariance(cm, n, shrink_mode, shrink_lam):
    """Covariance after shrinkage only (no factorization, no jitter)."""
    d = cm.shape[0]
    S = _zeros(d)
    _sigma_from_cm(cm.tolist(), n, d, shrink_mode, shrink_lam, S)
    return np.array(S, dtype=np.float64)


def regularized_factor(cm, n, shrink_mode, shrink_lam, jitter):
    """Covariance + lower factor under the regularization policy.

    Returns (sigma, L, jitter_used); raises SingularCovariance when even the
    capped jitter cannot produce acceptable pivots.
    """
    d = cm.shape[0]
    S = _zeros(d)
    S2 = _zeros(d)
    L = _zeros(d)
    jit = _factor_regularized(cm.tolist(), n, d, shrink_mode, shrink_lam,
                              jitter, S, S2, L)
    return (np.array(S, dtype=np.float64), np.array(L, dtype=np.float64), jit)


def dsq_from_factor(L, mu, z):
    d = len(mu)
    y = [0.0] * d
    return _dsq_solve(np.asarray(L).tolist(), np.asarray(mu).tolist(),
                      np.asarray(z, dtype=np.float64).tolist(), y, d)


def logdet_from_factor(L):
    La = np.asarray(L)
    d = La.shape[0]
    acc = 0.0
    for j in range(d):
        acc = acc + math.log(La[j, j])
    return 2.0 * acc


def run_loop(Z, n0, mu, cm, step0, variant, nu, r_max_sq, rate, n_min_eff,
             shrink_mode, shrink_lam, jitter, scope_all, decision_key):
    """The closed collection loop over pre-embedded rows Z.

    Mutates mu/cm in place and returns (psi, d_sq, draw, accepted, n) where
    d_sq is NaN on steps where no distance was computed.  Decision draw k
    uses counter step0+k, so chunked calls concatenate exactly.
    """
    Z = np.asarray(Z, dtype=np.float64)
    T, d = Z.shape
    Zl = Z.tolist()
    mu_l = mu.tolist()
    cm_l = cm.tolist()
    delta = [0.0] * d
    dz = [0.0] * d
    y = [0.0] * d
    S = _zeros(d)
    S2 = _zeros(d)
    L = _zeros(d)
    nan = float("nan")
    psi_out = [0.0] * T
    dsq_out = [nan] * T
    draw_out = [0.0] * T
    acc_out = [0] * T
    n = n0
    for k in range(T):
        z = Zl[k]
        if scope_all:
            n = _welford_step(n, mu_l, cm_l, z, d, delta, dz)
        dsq = nan
        if n < n_min_eff:
            psi = 1.0
        elif variant == VARIANT_OPEN_LOOP:
            psi = 1.0
        elif variant == VARIANT_RANDOM_RATE:
            psi = rate
        else:
            try:
                _factor_regularized(cm_l, n, d, shrink_mode, shrink_lam,
                                    jitter, S, S2, L)
            except SingularCovariance as exc:
                raise SingularCovariance(f"step {step0 + k}: {exc}") from None
            dsq = _dsq_solve(L, mu_l, z, y, d)
            if variant == VARIANT_COMPLEMENTARY:
                kappa = n / nu
                if kappa > 1.0:
                    kappa = 1.0
                psi = 1.0 - kappa * math.exp(-0.5 * dsq)
            else:
                psi = math.exp(0.5 * (dsq - r_max_sq)) if dsq <= r_max_sq else 0.0
        draw = uniform_at(decision_key, step0 + k)
        accepted = draw < psi
        if accepted and not scope_all:
            n = _welford_step(n, mu_l, cm_l, z, d, delta, dz)
        psi_out[k] = psi
        dsq_out[k] = dsq
        draw_out[k] = draw
        acc_out[k] = 1 if accepted else 0
    mu[:] = mu_l
    cm[:] = cm_l
    return (np.array(psi_out, dtype=np.float64),
            np.array(dsq_out, dtype=np.float64),
            np.array(draw_out, dtype=np.float64),
            np.array(acc_out, dtype=np.uint8),
            n)
