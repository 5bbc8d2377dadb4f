# cython: language_level=3, boundscheck=False, wraparound=False, initializedcheck=False
"""Compiled kernel: hot-loop twin of `_fallback.py`.

Every expression here mirrors the pure-Python reference one-to-one (same
operation order, same libm calls, no fused multiply-adds) so both backends
produce bit-identical doubles.  Keep the two files in sync; the
equivalence tests compare them exactly.
"""

import numpy as np

from libc.math cimport cos, exp, log, sqrt
from libc.stdint cimport int64_t, uint64_t, uint8_t

from .errors import SingularCovariance

BACKEND = "c"

# shrinkage modes / policy variants (shared codes with the fallback kernel)
SHRINK_OFF = 0
SHRINK_FIXED = 1
SHRINK_ANALYTIC = 2

VARIANT_OPEN_LOOP = 0
VARIANT_RANDOM_RATE = 1
VARIANT_COMPLEMENTARY = 2
VARIANT_RECIPROCAL = 3

PIVOT_FLOOR_REL = 1e-12
JITTER_CAP_REL = 1e-3

cdef int _SHRINK_FIXED = 1
cdef int _SHRINK_ANALYTIC = 2
cdef int _VARIANT_OPEN_LOOP = 0
cdef int _VARIANT_RANDOM_RATE = 1
cdef int _VARIANT_COMPLEMENTARY = 2

cdef double _PIVOT_FLOOR_REL = 1e-12
cdef double _JITTER_CAP_X = 1e-3 * 1.0000001

cdef uint64_t _GAMMA = 0x9E3779B97F4A7C15ULL
cdef double _TWO_NEG53 = 2.0 ** -53
cdef double _TWO_PI = 2.0 * 3.141592653589793


cdef inline uint64_t _mix64(uint64_t z) nogil:
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


cdef inline double _uniform_at(uint64_t key, uint64_t counter) nogil:
    cdef uint64_t raw = _mix64(key + ((counter + 1) * _GAMMA))
    return <double>(raw >> 11) * _TWO_NEG53


cdef inline double _normal_at(uint64_t key, uint64_t index) nogil:
    cdef double u1 = 1.0 - _uniform_at(key, 2 * index)
    cdef double u2 = _uniform_at(key, 2 * index + 1)
    return sqrt(-2.0 * log(u1)) * cos(_TWO_PI * u2)


cdef int64_t _welford_step(int64_t n, double[::1] mu, double[:, ::1] cm,
                           double[:] z, int d, double[::1] delta,
                           double[::1] dz) nogil:
    cdef int j, l
    n += 1
    for j in range(d):
        delta[j] = z[j] - mu[j]
    for j in range(d):
        mu[j] = mu[j] + delta[j] / <double>n
    for j in range(d):
        dz[j] = z[j] - mu[j]
    for j in range(d):
        for l in range(j + 1):
            cm[j, l] = cm[j, l] + delta[j] * dz[l]
    for j in range(d):
        for l in range(j + 1, d):
            cm[j, l] = cm[l, j]
    return n


cdef bint _chol(double[:, ::1] S, double[:, ::1] L, int d, double floor) nogil:
    cdef int i, j, l
    cdef double s, t
    for j in range(d):
        s = S[j, j]
        for l in range(j):
            s = s - L[j, l] * L[j, l]
        if s <= 0.0 or s < floor:
            return False
        L[j, j] = sqrt(s)
        for i in range(j + 1, d):
            t = S[i, j]
            for l in range(j):
                t = t - L[i, l] * L[j, l]
            L[i, j] = t / L[j, j]
    return True


cdef double _sigma_from_cm(double[:, ::1] cm, int64_t n, int d,
                           int shrink_mode, double shrink_lam,
                           double[:, ::1] S) nogil:
    cdef int i, j
    cdef int64_t nm1 = n - 1
    cdef double tr = 0.0
    cdef double mu_sc, tr2, num, den, lam
    for j in range(d):
        tr = tr + cm[j, j]
    tr = tr / <double>nm1
    mu_sc = tr / <double>d
    for i in range(d):
        for j in range(d):
            S[i, j] = cm[i, j] / <double>nm1
    lam = 0.0
    if shrink_mode == _SHRINK_FIXED:
        lam = shrink_lam
    elif shrink_mode == _SHRINK_ANALYTIC:
        # Rao-Blackwellized Ledoit-Wolf intensity: a function of the sample
        # covariance alone, so it needs no buffered samples.
        tr2 = 0.0
        for i in range(d):
            for j in range(d):
                tr2 = tr2 + S[i, j] * S[i, j]
        num = (<double>(n - 2) / <double>n) * tr2 + tr * tr
        den = <double>(n + 2) * (tr2 - (tr * tr) / <double>d)
        if den <= 0.0:
            lam = 1.0
        else:
            lam = num / den
            if lam > 1.0:
                lam = 1.0
    if lam != 0.0:
        for i in range(d):
            for j in range(d):
                S[i, j] = (1.0 - lam) * S[i, j]
            S[i, i] = S[i, i] + lam * mu_sc
    return mu_sc


cdef double _factor_regularized(double[:, ::1] cm, int64_t n, int d,
                                int shrink_mode, double shrink_lam,
                                double jitter, double[:, ::1] S,
                                double[:, ::1] S2, double[:, ::1] L) except? -1.0:
    cdef int i, j
    cdef double mu_sc = _sigma_from_cm(cm, n, d, shrink_mode, shrink_lam, S)
    cdef double floor = _PIVOT_FLOOR_REL * mu_sc
    cdef double jit
    if _chol(S, L, d, floor):
        return 0.0
    if jitter > 0.0:
        jit = jitter
        while jit <= _JITTER_CAP_X:
            for i in range(d):
                for j in range(d):
                    S2[i, j] = S[i, j]
                S2[i, i] = S2[i, i] + jit * mu_sc
            if _chol(S2, L, d, floor):
                for i in range(d):
                    for j in range(d):
                        S[i, j] = S2[i, j]
                return jit
            jit = jit * 10.0
    raise SingularCovariance(
        f"covariance not positive definite at n={n} (jitter ladder exhausted)"
    )


cdef double _dsq_solve(double[:, ::1] L, double[::1] mu, double[:] z,
                       double[::1] y, int d) nogil:
    cdef int i, l
    cdef double t
    cdef double acc = 0.0
    for i in range(d):
        t = z[i] - mu[i]
        for l in range(i):
            t = t - L[i, l] * y[l]
        y[i] = t / L[i, i]
    for i in range(d):
        acc = acc + y[i] * y[i]
    return acc


# ---------------------------------------------------------------------------
# public kernel API (numpy in / numpy out)

def uniform_block(key, start, count):
    """Decision-substream uniforms at positions start..start+count-1."""
    cdef uint64_t k = key
    cdef uint64_t s = start
    cdef Py_ssize_t n = count
    cdef Py_ssize_t i
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] out_v = out
    for i in range(n):
        out_v[i] = _uniform_at(k, s + <uint64_t>i)
    return out


def gaussian_block(key, mean, chol_factor, count):
    """`count` correlated Gaussian rows: mean + L @ eps, eps from Box-Muller."""
    cdef uint64_t kk = key
    mean_a = np.ascontiguousarray(mean, dtype=np.float64)
    L_a = np.ascontiguousarray(chol_factor, dtype=np.float64)
    cdef double[::1] mean_v = mean_a
    cdef double[:, ::1] L_v = L_a
    cdef int d = mean_v.shape[0]
    cdef Py_ssize_t n = count
    out = np.empty((n, d), dtype=np.float64)
    eps_a = np.empty(d, dtype=np.float64)
    cdef double[:, ::1] out_v = out
    cdef double[::1] eps = eps_a
    cdef Py_ssize_t m
    cdef int i, j, l
    cdef uint64_t base
    cdef double acc
    for m in range(n):
        base = <uint64_t>m * <uint64_t>d
        for j in range(d):
            eps[j] = _normal_at(kk, base + <uint64_t>j)
        for i in range(d):
            acc = mean_v[i]
            for l in range(i + 1):
                acc = acc + L_v[i, l] * eps[l]
            out_v[m, i] = acc
    return out


def categorical_block(key, cum, count):
    """`count` category draws; `cum` is the cumulative probability table."""
    cdef uint64_t kk = key
    cum_a = np.ascontiguousarray(cum, dtype=np.float64)
    cdef double[::1] cum_v = cum_a
    cdef Py_ssize_t last = cum_v.shape[0] - 1
    cdef Py_ssize_t n = count
    out = np.empty(n, dtype=np.int64)
    cdef int64_t[::1] out_v = out
    cdef Py_ssize_t m, idx
    cdef double u
    for m in range(n):
        u = _uniform_at(kk, <uint64_t>m)
        idx = 0
        while idx < last and u >= cum_v[idx]:
            idx += 1
        out_v[m] = idx
    return out


def cholesky(S):
    """Plain lower Cholesky; raises ValueError when S is not positive definite."""
    S_a = np.ascontiguousarray(S, dtype=np.float64)
    cdef int d = S_a.shape[0]
    L = np.zeros((d, d), dtype=np.float64)
    cdef double[:, ::1] S_v = S_a
    cdef double[:, ::1] L_v = L
    if not _chol(S_v, L_v, d, 0.0):
        raise ValueError("matrix is not positive definite")
    return L


def welford_many(n, mu, cm, Z):
    """Fold all rows of Z into (mu, cm) in place; returns the new count."""
    Z_a = np.ascontiguousarray(Z, dtype=np.float64)
    cdef double[::1] mu_v = mu
    cdef double[:, ::1] cm_v = cm
    cdef double[:, ::1] Z_v = Z_a
    cdef int d = mu_v.shape[0]
    cdef int64_t nn = n
    delta_a = np.empty(d, dtype=np.float64)
    dz_a = np.empty(d, dtype=np.float64)
    cdef double[::1] delta = delta_a
    cdef double[::1] dz = dz_a
    cdef Py_ssize_t i
    for i in range(Z_v.shape[0]):
        nn = _welford_step(nn, mu_v, cm_v, Z_v[i], d, delta, dz)
    return nn


def shrunk_covariance(cm, n, shrink_mode, shrink_lam):
    """Covariance after shrinkage only (no factorization, no jitter)."""
    cm_a = np.ascontiguousarray(cm, dtype=np.float64)
    cdef int d = cm_a.shape[0]
    S = np.zeros((d, d), dtype=np.float64)
    cdef double[:, ::1] cm_v = cm_a
    cdef double[:, ::1] S_v = S
    _sigma_from_cm(cm_v, n, d, shrink_mode, shrink_lam, S_v)
    return S


def regularized_factor(cm, n, shrink_mode, shrink_lam, jitter):
    """Covariance + lower factor under the regularization policy.

    Returns (sigma, L, jitter_used); raises SingularCovariance when even the
    capped jitter cannot produce acceptable pivots.
    """
    cm_a = np.ascontiguousarray(cm, dtype=np.float64)
    cdef int d = cm_a.shape[0]
    S = np.zeros((d, d), dtype=np.float64)
    S2 = np.zeros((d, d), dtype=np.float64)
    L = np.zeros((d, d), dtype=np.float64)
    cdef double[:, ::1] cm_v = cm_a
    cdef double[:, ::1] S_v = S
    cdef double[:, ::1] S2_v = S2
    cdef double[:, ::1] L_v = L
    cdef double jit = _factor_regularized(cm_v, n, d, shrink_mode, shrink_lam,
                                          jitter, S_v, S2_v, L_v)
    return (S, L, jit)


def dsq_from_factor(L, mu, z):
    L_a = np.ascontiguousarray(L, dtype=np.float64)
    mu_a = np.ascontiguousarray(mu, dtype=np.float64)
    z_a = np.ascontiguousarray(z, dtype=np.float64)
    cdef int d = mu_a.shape[0]
    y_a = np.empty(d, dtype=np.float64)
    cdef double[:, ::1] L_v = L_a
    cdef double[::1] mu_v = mu_a
    cdef double[::1] z_v = z_a
    cdef double[::1] y_v = y_a
    return _dsq_solve(L_v, mu_v, z_v, y_v, d)


def logdet_from_factor(L):
    L_a = np.ascontiguousarray(L, dtype=np.float64)
    cdef double[:, ::1] L_v = L_a
    cdef int d = L_v.shape[0]
    cdef int j
    cdef double acc = 0.0
    for j in range(d):
        acc = acc + log(L_v[j, j])
    return 2.0 * acc


def run_loop(Z, n0, mu, cm, step0, variant, nu, r_max_sq, rate, n_min_eff,
             shrink_mode, shrink_lam, jitter, scope_all, decision_key):
    """The closed collection loop over pre-embedded rows Z.

    Mutates mu/cm in place and returns (psi, d_sq, draw, accepted, n) where
    d_sq is NaN on steps where no distance was computed.  Decision draw k
    uses counter step0+k, so chunked calls concatenate exactly.
    """
    Z_a = np.ascontiguousarray(Z, dtype=np.float64)
    cdef Py_ssize_t T = Z_a.shape[0]
    cdef int d = Z_a.shape[1]
    cdef double[:, ::1] Z_v = Z_a
    cdef double[::1] mu_v = mu
    cdef double[:, ::1] cm_v = cm
    cdef int64_t n = n0
    cdef int64_t step0_c = step0
    cdef int vr = variant
    cdef double nu_c = nu
    cdef double r_max_sq_c = r_max_sq
    cdef double rate_c = rate
    cdef int64_t n_min = n_min_eff
    cdef int sh_mode = shrink_mode
    cdef double sh_lam = shrink_lam
    cdef double jitter_c = jitter
    cdef bint scope_all_c = scope_all
    cdef uint64_t key = decision_key

    delta_a = np.empty(d, dtype=np.float64)
    dz_a = np.empty(d, dtype=np.float64)
    y_a = np.empty(d, dtype=np.float64)
    S_a = np.zeros((d, d), dtype=np.float64)
    S2_a = np.zeros((d, d), dtype=np.float64)
    L_a = np.zeros((d, d), dtype=np.float64)
    cdef double[::1] delta = delta_a
    cdef double[::1] dz = dz_a
    cdef double[::1] y = y_a
    cdef double[:, ::1] S_v = S_a
    cdef double[:, ::1] S2_v = S2_a
    cdef double[:, ::1] L_v = L_a

    psi_out = np.empty(T, dtype=np.float64)
    dsq_out = np.full(T, np.nan, dtype=np.float64)
    draw_out = np.empty(T, dtype=np.float64)
    acc_out = np.empty(T, dtype=np.uint8)
    cdef double[::1] psi_v = psi_out
    cdef double[::1] dsq_v = dsq_out
    cdef double[::1] draw_v = draw_out
    cdef uint8_t[::1] acc_v = acc_out

    cdef Py_ssize_t k
    cdef double psi, dsq, draw, kappa
    cdef bint accepted
    cdef bint have_dsq
    for k in range(T):
        if scope_all_c:
            n = _welford_step(n, mu_v, cm_v, Z_v[k], d, delta, dz)
        have_dsq = False
        dsq = 0.0
        if n < n_min:
            psi = 1.0
        elif vr == _VARIANT_OPEN_LOOP:
            psi = 1.0
        elif vr == _VARIANT_RANDOM_RATE:
            psi = rate_c
        else:
            try:
                _factor_regularized(cm_v, n, d, sh_mode, sh_lam, jitter_c,
                                    S_v, S2_v, L_v)
            except SingularCovariance as exc:
                raise SingularCovariance(f"step {step0_c + k}: {exc}") from None
            dsq = _dsq_solve(L_v, mu_v, Z_v[k], y, d)
            have_dsq = True
            if vr == _VARIANT_COMPLEMENTARY:
                kappa = <double>n / nu_c
                if kappa > 1.0:
                    kappa = 1.0
                psi = 1.0 - kappa * exp(-0.5 * dsq)
            else:
                psi = exp(0.5 * (dsq - r_max_sq_c)) if dsq <= r_max_sq_c else 0.0
        draw = _uniform_at(key, <uint64_t>(step0_c + k))
        accepted = draw < psi
        if accepted and not scope_all_c:
            n = _welford_step(n, mu_v, cm_v, Z_v[k], d, delta, dz)
        psi_v[k] = psi
        if have_dsq:
            dsq_v[k] = dsq
        draw_v[k] = draw
        acc_v[k] = 1 if accepted else 0
    return (psi_out, dsq_out, draw_out, acc_out, n)
