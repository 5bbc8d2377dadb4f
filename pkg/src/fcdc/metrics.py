"""Coverage and balance diagnostics for collected datasets.

delta_uni is a quantile-space RMSE against the uniform reference: per
dimension the sorted values are normalized into [0, 1] by the supplied
bounds and compared with the plotting positions (i - 0.5)/n, then the
per-dimension RMSEs are combined by a root mean square.  cv is the
population coefficient of variation of per-category counts (sigma/mu,
lower = more balanced).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np


def _dim_columns(values) -> list[np.ndarray]:
    if isinstance(values, np.ndarray) and values.ndim == 2:
        return [values[:, j] for j in range(values.shape[1])]
    return [np.asarray(v, dtype=np.float64) for v in values]


def qq_points(values, bounds) -> list[tuple[np.ndarray, np.ndarray]]:
    """Per dimension: (plotting positions p, normalized sorted values u)."""
    cols = _dim_columns(values)
    if len(cols) != len(bounds):
        raise ValueError("bounds must provide one (lo, hi) pair per dimension")
    out = []
    for v, (lo, hi) in zip(cols, bounds):
        v = np.asarray(v, dtype=np.float64)
        if v.size < 2:
            raise ValueError("need at least 2 values per dimension")
        if not hi > lo:
            raise ValueError(f"degenerate bounds ({lo}, {hi})")
        u = (np.sort(v) - lo) / (hi - lo)
        p = (np.arange(1, v.size + 1) - 0.5) / v.size
        out.append((p, u))
    return out


def delta_uni(values, bounds) -> float:
    """Root-mean-square quantile deviation from uniform over all dimensions.

    0 for values laid out on a uniform grid inside the bounds; at most 1
    when all values fall inside the bounds.
    """
    acc = 0.0
    pairs = qq_points(values, bounds)
    for p, u in pairs:
        acc += float(np.mean((u - p) ** 2))
    return math.sqrt(acc / len(pairs))


def cv(counts) -> float:
    """sigma/mu of per-category counts (population sigma).

    Computed on count fractions so integer rescaling of the histogram leaves
    the value bitwise unchanged.
    """
    c = np.asarray(counts, dtype=np.float64)
    if c.ndim != 1 or c.size < 2:
        raise ValueError("need a 1-D histogram with at least 2 categories")
    if not np.all(np.isfinite(c)) or np.any(c < 0):
        raise ValueError("counts must be finite and nonnegative")
    total = c.sum()
    if not total > 0:
        raise ValueError("at least one category must have data")
    p = c / total
    return float(p.std() / p.mean())


def histogram(values, k_max: int) -> np.ndarray:
    """Counts over categories 0..k_max; values must be integers in range."""
    v = np.asarray(values)
    if v.size and not np.all(np.equal(np.mod(v, 1), 0)):
        raise ValueError("category values must be integral")
    v = v.astype(np.int64)
    if v.size and (v.min() < 0 or v.max() > k_max):
        raise ValueError(f"category values must lie in [0, {k_max}]")
    return np.bincount(v, minlength=k_max + 1).astype(np.int64)


@dataclass(frozen=True)
class MetricsPoint:
    """One row of the in-run metric series."""

    step: int
    n_accepted: int
    delta_uni: float | None
    cv: float | None
    acceptance_rate: float


def write_metrics_csv(path, points: list[MetricsPoint]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["step", "N", "delta_uni", "cv", "acceptance_rate"])
        for pt in points:
            w.writerow([pt.step, pt.n_accepted,
                        "" if pt.delta_uni is None else repr(pt.delta_uni),
                        "" if pt.cv is None else repr(pt.cv),
                        repr(pt.acceptance_rate)])


def write_qq_csv(path, values, bounds) -> None:
    """Long-format Q-Q pairs (dim, p, u) for external plotting."""
    pairs = qq_points(values, bounds)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["dim", "p", "u"])
        for j, (p, u) in enumerate(pairs):
            for pi, ui in zip(p, u):
                w.writerow([j, repr(float(pi)), repr(float(ui))])


def write_histogram_csv(path, counts) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["category", "count"])
        for cat, cnt in enumerate(np.asarray(counts)):
            w.writerow([cat, int(cnt)])
