"""Streaming Gaussian density estimate.

A single pass over the stream maintains the sample mean and the centered
co-moment matrix with Welford's recursions; the covariance is derived on
demand.  Distances and densities are answered through a Cholesky solve of
the (optionally shrunk, jitter-guarded) covariance; the inverse is never
formed.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import InsufficientSamples, SingularCovariance
from .kernel import SHRINK_ANALYTIC, SHRINK_FIXED, SHRINK_OFF, backend

_LOG_2PI = math.log(2.0 * math.pi)

_SHRINK_CODES = {"off": SHRINK_OFF, "fixed": SHRINK_FIXED, "analytic": SHRINK_ANALYTIC}


@dataclass(frozen=True)
class RegularizationConfig:
    """Covariance regularization used by every estimator query.

    jitter is the starting relative diagonal inflation (in units of
    trace/dim) applied when factorization pivots fall below 1e-12*trace/dim;
    it escalates tenfold per retry up to 1e-3.  jitter=0 disables recovery.
    shrinkage blends the covariance toward (trace/dim)*I: "off", "fixed"
    (with shrinkage_lam in [0, 1]) or "analytic" (Rao-Blackwellized
    Ledoit-Wolf intensity).
    """

    jitter: float = 1e-9
    shrinkage: str = "off"
    shrinkage_lam: float = 0.0

    def validate(self) -> None:
        if not (self.jitter >= 0.0 and math.isfinite(self.jitter)):
            raise ValueError("jitter must be a finite nonnegative real")
        if self.shrinkage not in _SHRINK_CODES:
            raise ValueError(f"unknown shrinkage mode {self.shrinkage!r}")
        if self.shrinkage == "fixed" and not 0.0 <= self.shrinkage_lam <= 1.0:
            raise ValueError("shrinkage_lam must be in [0, 1]")

    def codes(self) -> tuple[int, float]:
        return _SHRINK_CODES[self.shrinkage], float(self.shrinkage_lam)


DEFAULT_REGULARIZATION = RegularizationConfig()


def _check_vector(z, dim: int) -> np.ndarray:
    z = np.asarray(z, dtype=np.float64)
    if z.shape != (dim,):
        raise ValueError(f"expected a vector of dim {dim}, got shape {z.shape}")
    if not np.all(np.isfinite(z)):
        raise ValueError("input vector has non-finite entries")
    return z


class RunningGaussian:
    """Welford state (n, mu, comoment) for a d-dimensional stream.

    Updates are functional: `update`/`update_many` return a new instance and
    never touch the original, so snapshots stay valid.
    """

    __slots__ = ("n", "mu", "comoment", "_factor_cache")

    def __init__(self, dim: int):
        if dim < 1:
            raise ValueError("dim must be >= 1")
        self.n = 0
        self.mu = np.zeros(dim, dtype=np.float64)
        self.comoment = np.zeros((dim, dim), dtype=np.float64)
        self._factor_cache = None

    @classmethod
    def from_moments(cls, n: int, mu, comoment) -> "RunningGaussian":
        mu = np.asarray(mu, dtype=np.float64).copy()
        state = cls(mu.shape[0])
        cm = np.asarray(comoment, dtype=np.float64).copy()
        if cm.shape != (mu.shape[0], mu.shape[0]):
            raise ValueError("comoment shape does not match mu")
        if n < 0:
            raise ValueError("n must be >= 0")
        state.n = int(n)
        state.mu = mu
        state.comoment = cm
        return state

    @property
    def dim(self) -> int:
        return self.mu.shape[0]

    def _copy(self) -> "RunningGaussian":
        out = RunningGaussian(self.dim)
        out.n = self.n
        out.mu = self.mu.copy()
        out.comoment = self.comoment.copy()
        return out

    def update(self, z) -> "RunningGaussian":
        """Absorb one observation; returns the updated state."""
        z = _check_vector(z, self.dim)
        out = self._copy()
        out.n = backend.welford_many(out.n, out.mu, out.comoment, z.reshape(1, -1))
        return out

    def update_many(self, Z) -> "RunningGaussian":
        """Absorb the rows of Z in order; returns the updated state."""
        Z = np.ascontiguousarray(Z, dtype=np.float64)
        if Z.ndim != 2 or Z.shape[1] != self.dim:
            raise ValueError(f"expected rows of dim {self.dim}, got shape {Z.shape}")
        if not np.all(np.isfinite(Z)):
            raise ValueError("input rows have non-finite entries")
        out = self._copy()
        out.n = backend.welford_many(out.n, out.mu, out.comoment, Z)
        return out

    def _factor(self, reg: RegularizationConfig):
        cache = self._factor_cache
        if cache is not None and cache[0] == reg:
            return cache[1], cache[2]
        mode, lam = reg.codes()
        sigma, L, _ = backend.regularized_factor(self.comoment, self.n, mode,
                                                 lam, reg.jitter)
        self._factor_cache = (reg, sigma, L)
        return sigma, L

    def covariance(self, reg: RegularizationConfig = DEFAULT_REGULARIZATION) -> np.ndarray:
        """Covariance C/(n-1) after shrinkage and (if needed) jitter.

        Raises InsufficientSamples for n < 2.  A covariance that cannot be
        factorized (rank-deficient data with jitter disabled) is still a
        valid PSD matrix and is returned without jitter; only the distance
        and density queries require the factorization.
        """
        if self.n < 2:
            raise InsufficientSamples(f"covariance needs n >= 2, have n={self.n}")
        try:
            sigma, _ = self._factor(reg)
        except SingularCovariance:
            mode, lam = reg.codes()
            return backend.shrunk_covariance(self.comoment, self.n, mode, lam)
        return sigma.copy()

    def mahalanobis_sq(self, z, reg: RegularizationConfig = DEFAULT_REGULARIZATION) -> float:
        """Squared Mahalanobis distance of z under the current estimate.

        Requires n >= dim + 1 so the covariance has full rank generically.
        """
        z = _check_vector(z, self.dim)
        if self.n < self.dim + 1:
            raise InsufficientSamples(
                f"mahalanobis_sq needs n >= dim+1 = {self.dim + 1}, have n={self.n}")
        _, L = self._factor(reg)
        return float(backend.dsq_from_factor(L, self.mu, z))

    def log_density(self, z, reg: RegularizationConfig = DEFAULT_REGULARIZATION) -> float:
        """Gaussian log-density of z: log beta - d_M^2 / 2."""
        z = _check_vector(z, self.dim)
        if self.n < self.dim + 1:
            raise InsufficientSamples(
                f"log_density needs n >= dim+1 = {self.dim + 1}, have n={self.n}")
        _, L = self._factor(reg)
        dsq = backend.dsq_from_factor(L, self.mu, z)
        logdet = backend.logdet_from_factor(L)
        return -0.5 * self.dim * _LOG_2PI - 0.5 * logdet - 0.5 * dsq

    # -- serialization ------------------------------------------------------

    def to_json_dict(self) -> dict:
        return {
            "n": self.n,
            "mu": self.mu.tolist(),
            "comoment": self.comoment.tolist(),
            "dim": self.dim,
        }

    def to_json(self) -> str:
        # repr-based float formatting round-trips doubles exactly
        return json.dumps(self.to_json_dict(), sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_json_dict(cls, obj: dict) -> "RunningGaussian":
        state = cls.from_moments(obj["n"], obj["mu"], obj["comoment"])
        if state.dim != obj.get("dim", state.dim):
            raise ValueError("dim field disagrees with mu length")
        return state

    @classmethod
    def from_json(cls, text: str) -> "RunningGaussian":
        return cls.from_json_dict(json.loads(text))

    def __repr__(self) -> str:  # pragma: no cover
        return f"RunningGaussian(n={self.n}, dim={self.dim})"
