"""Acceptance value functions.

Maps the estimator's view of a fresh sample to an acceptance probability.
Two closed-loop shapes: `complementary` rewards low density (coverage);
`reciprocal` rewards high distance inside a trust radius and is zero outside
(bounded support, asymptotically uniform inside).  Open-loop and fixed-rate
baselines round out the set.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import FcdcError
from .estimator import DEFAULT_REGULARIZATION, RegularizationConfig, RunningGaussian

#: complementary warm-up scale: kappa = min(1, n / nu)
DEFAULT_NU = 50

#: reciprocal trust radius (squared); solves (x/2)e^{-x/2} = 877/6000, i.e.
#: a converged 2-D Gaussian match keeps ~14.6 % of the stream
DEFAULT_R_MAX_SQ = 6.064687026134201

#: accept-all phase floor (combined with dim+2 at resolution time)
DEFAULT_WARMUP_FLOOR = 25

VARIANTS = ("complementary", "reciprocal", "open_loop", "random_rate")


@dataclass(frozen=True)
class PolicyConfig:
    """Value-function selection plus its scalar knobs.

    Only the knobs of the active variant matter: nu for complementary,
    r_max_sq for reciprocal, rate for random_rate.  warmup_min_samples
    defaults to max(dim + 2, 25) when left unset.
    """

    variant: str = "complementary"
    nu: int = DEFAULT_NU
    r_max_sq: float = DEFAULT_R_MAX_SQ
    rate: float | None = None
    warmup_min_samples: int | None = None

    def validate(self) -> list[str]:
        """Returns all violations (empty when valid)."""
        problems = []
        if self.variant not in VARIANTS:
            problems.append(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        if self.variant == "complementary" and self.nu < 1:
            problems.append("nu must be a positive integer")
        if self.variant == "reciprocal" and not self.r_max_sq > 0.0:
            problems.append("r_max_sq must be > 0")
        if self.variant == "random_rate":
            if self.rate is None:
                problems.append("rate is required for random_rate")
            elif not 0.0 <= self.rate <= 1.0:
                problems.append("rate must be in [0, 1]")
        if self.warmup_min_samples is not None and self.warmup_min_samples < 0:
            problems.append("warmup_min_samples must be >= 0")
        return problems

    def check(self) -> None:
        problems = self.validate()
        if problems:
            raise FcdcError("; ".join(problems))

    def resolved_warmup(self, dim: int) -> int:
        floor = (DEFAULT_WARMUP_FLOOR if self.warmup_min_samples is None
                 else self.warmup_min_samples)
        return max(floor, dim + 2)


def psi_complementary(d_sq: float, n: int, nu: int) -> float:
    """1 - min(1, n/nu) * exp(-d_sq / 2): high where the estimate is thin."""
    if d_sq < 0.0:
        raise ValueError("d_sq must be >= 0")
    if nu < 1:
        raise ValueError("nu must be >= 1")
    kappa = n / nu
    if kappa > 1.0:
        kappa = 1.0
    return 1.0 - kappa * math.exp(-0.5 * d_sq)


def psi_reciprocal(d_sq: float, r_max_sq: float) -> float:
    """exp((d_sq - r_max_sq)/2) inside the radius, 0 outside."""
    if d_sq < 0.0:
        raise ValueError("d_sq must be >= 0")
    if not r_max_sq > 0.0:
        raise ValueError("r_max_sq must be > 0")
    return math.exp(0.5 * (d_sq - r_max_sq)) if d_sq <= r_max_sq else 0.0


def evaluate(config: PolicyConfig, state: RunningGaussian, z,
             reg: RegularizationConfig = DEFAULT_REGULARIZATION) -> float:
    """Acceptance probability for z under the current estimator state.

    While the estimator is warming up (n below the resolved floor) every
    variant returns 1.0 so the loop starts from an unconditional prefix.
    Estimator errors (singular covariance) propagate.
    """
    config.check()
    if state.n < config.resolved_warmup(state.dim):
        return 1.0
    if config.variant == "open_loop":
        return 1.0
    if config.variant == "random_rate":
        return float(config.rate)
    d_sq = state.mahalanobis_sq(z, reg)
    if config.variant == "complementary":
        return psi_complementary(d_sq, state.n, config.nu)
    return psi_reciprocal(d_sq, config.r_max_sq)
