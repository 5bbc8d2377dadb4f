"""Input stream generators and file readers.

Two synthetic generators (correlated Gaussian vectors; categorical object
counts with a configurable long-tail profile) plus JSONL/CSV readers for
external streams.  Generators are pure functions of (seed, config): they
draw from the counter PRNG keyed by the stream tag, so two iterations of
the same config agree element-wise and never interact with decision draws.
"""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, StreamFormatError
from .kernel import backend
from .pipeline import StreamRecord
from .rng import TAG_STREAM, derive_key

#: count-profile surrogate: flat peak over 8..11, thin tail out to 20
DEFAULT_COUNT_WEIGHTS = (2.0, 3.0, 5.0, 8.0, 12.0, 17.0, 23.0, 30.0,
                         36.0, 36.0, 36.0, 36.0,
                         24.0, 16.0, 10.0, 6.0, 4.0, 2.5, 1.5, 1.0, 0.6)

DEFAULT_COUNT_K_MAX = len(DEFAULT_COUNT_WEIGHTS) - 1


@dataclass(frozen=True)
class GaussianStreamConfig:
    """I.i.d. d-dimensional Gaussian records with the given moments."""

    seed: int = 0
    n_samples: int = 0
    mean: tuple = (0.0, 0.0)
    covariance: tuple = ((1.0, 0.0), (0.0, 1.0))

    @property
    def dim(self) -> int:
        return len(self.mean)

    def validate(self) -> list[str]:
        problems = []
        if self.n_samples < 0:
            problems.append("n_samples must be >= 0")
        d = len(self.mean)
        if d < 1:
            problems.append("mean must have at least one component")
            return problems
        S = np.asarray(self.covariance, dtype=np.float64)
        if S.shape != (d, d):
            problems.append(f"covariance must be {d}x{d} to match mean")
            return problems
        if not np.all(np.isfinite(S)) or not np.all(np.isfinite(self.mean)):
            problems.append("mean and covariance must be finite")
            return problems
        scale = max(float(np.abs(S).max()), 1.0)
        if float(np.abs(S - S.T).max()) > 1e-12 * scale:
            problems.append("covariance must be symmetric")
            return problems
        try:
            backend.cholesky(S)
        except ValueError:
            problems.append("covariance is not positive definite")
        return problems

    def check(self) -> None:
        problems = self.validate()
        if problems:
            raise ConfigError("; ".join(problems))


@dataclass(frozen=True)
class CountStreamConfig:
    """I.i.d. categorical object counts over 0..k_max, proportional to weights."""

    seed: int = 0
    n_samples: int = 0
    weights: tuple = field(default=DEFAULT_COUNT_WEIGHTS)
    k_max: int = DEFAULT_COUNT_K_MAX

    def validate(self) -> list[str]:
        problems = []
        if self.n_samples < 0:
            problems.append("n_samples must be >= 0")
        if self.k_max < 1:
            problems.append("k_max must be >= 1")
        w = np.asarray(self.weights, dtype=np.float64)
        if w.ndim != 1 or w.size != self.k_max + 1:
            problems.append(f"weights must have k_max+1 = {self.k_max + 1} entries")
            return problems
        if not np.all(np.isfinite(w)) or np.any(w < 0):
            problems.append("weights must be finite and nonnegative")
        elif not np.any(w > 0):
            problems.append("at least one weight must be positive")
        return problems

    def check(self) -> None:
        problems = self.validate()
        if problems:
            raise ConfigError("; ".join(problems))


def gaussian_matrix(cfg: GaussianStreamConfig) -> np.ndarray:
    """All records of the stream as an (n_samples, d) matrix."""
    cfg.check()
    L = backend.cholesky(np.asarray(cfg.covariance, dtype=np.float64))
    key = derive_key(cfg.seed, TAG_STREAM)
    mean = np.asarray(cfg.mean, dtype=np.float64)
    return backend.gaussian_block(key, mean, L, cfg.n_samples)


def gaussian_stream(cfg: GaussianStreamConfig):
    """Iterator form of gaussian_matrix; payloads are the row vectors."""
    Z = gaussian_matrix(cfg)
    for k in range(Z.shape[0]):
        yield StreamRecord(k=k, payload=Z[k], source_tag="gaussian")


def count_values(cfg: CountStreamConfig) -> np.ndarray:
    """All count draws of the stream as an int array."""
    cfg.check()
    w = np.asarray(cfg.weights, dtype=np.float64)
    cum = np.cumsum(w) / w.sum()
    cum[-1] = 1.0  # guard the top category against cumsum round-off
    key = derive_key(cfg.seed, TAG_STREAM)
    return backend.categorical_block(key, cum, cfg.n_samples)


def count_stream(cfg: CountStreamConfig):
    """Iterator form of count_values; payloads carry the "vehicles" field."""
    values = count_values(cfg)
    for k in range(values.shape[0]):
        yield StreamRecord(k=k, payload={"vehicles": int(values[k])},
                           source_tag="counts")


# ---------------------------------------------------------------------------
# file formats

def _record_from_obj(obj, k_default: int, where: str, tag: str) -> StreamRecord:
    if not isinstance(obj, dict):
        raise StreamFormatError(f"{where}: record must be a JSON object")
    k = obj.get("k", k_default)
    if not isinstance(k, int) or isinstance(k, bool):
        raise StreamFormatError(f"{where}: k must be an integer")
    if "vec" in obj:
        vec = obj["vec"]
        if (not isinstance(vec, list) or not vec
                or not all(isinstance(v, (int, float)) and not isinstance(v, bool)
                           for v in vec)):
            raise StreamFormatError(f"{where}: vec must be a nonempty number list")
        return StreamRecord(k=k, payload=np.asarray(vec, dtype=np.float64),
                            source_tag=tag)
    if "vehicles" in obj:
        v = obj["vehicles"]
        if not isinstance(v, int) or isinstance(v, bool) or v < 0:
            raise StreamFormatError(f"{where}: vehicles must be a nonnegative integer")
        return StreamRecord(k=k, payload={"vehicles": v}, source_tag=tag)
    raise StreamFormatError(f"{where}: record needs a vec or vehicles field")


def read_jsonl(path):
    """Records from a JSONL file, k assigned sequentially when absent.

    Fails fast: the first malformed line raises StreamFormatError naming
    path and line number.
    """
    if not os.path.exists(path):
        raise StreamFormatError(f"stream file not found: {path}")
    with open(path) as fh:
        k_next = 0
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            where = f"{path}:{lineno}"
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise StreamFormatError(f"{where}: invalid JSON ({exc.msg})") from None
            rec = _record_from_obj(obj, k_next, where, str(path))
            k_next = rec.k + 1
            yield rec


def read_csv(path):
    """Records from a CSV file with a header row.

    A "vehicles" column makes count records; otherwise every non-"k" column
    is one vector component, in header order.  k is taken from the "k"
    column when present, else assigned sequentially.
    """
    if not os.path.exists(path):
        raise StreamFormatError(f"stream file not found: {path}")
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise StreamFormatError(f"{path}:1: missing header row") from None
        names = [h.strip() for h in header]
        k_col = names.index("k") if "k" in names else None
        if "vehicles" in names:
            v_col = names.index("vehicles")
            vec_cols = None
        else:
            v_col = None
            vec_cols = [i for i in range(len(names)) if i != k_col]
            if not vec_cols:
                raise StreamFormatError(f"{path}:1: no data columns in header")
        k_next = 0
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            where = f"{path}:{lineno}"
            if len(row) != len(names):
                raise StreamFormatError(
                    f"{where}: expected {len(names)} fields, got {len(row)}")
            try:
                k = int(row[k_col]) if k_col is not None else k_next
                if v_col is not None:
                    payload = {"vehicles": int(row[v_col])}
                else:
                    payload = np.array([float(row[i]) for i in vec_cols],
                                       dtype=np.float64)
            except ValueError as exc:
                raise StreamFormatError(f"{where}: {exc}") from None
            k_next = k + 1
            yield StreamRecord(k=k, payload=payload, source_tag=str(path))


def write_jsonl(path, records) -> None:
    """Serialize records to JSONL ({"k", "vec"} or {"k", "vehicles"} lines)."""
    with open(path, "w") as fh:
        for rec in records:
            if isinstance(rec.payload, dict):
                obj = {"k": rec.k, "vehicles": int(rec.payload["vehicles"])}
            else:
                obj = {"k": rec.k, "vec": np.asarray(rec.payload).tolist()}
            fh.write(json.dumps(obj, sort_keys=True, separators=(",", ":")) + "\n")
