"""The collection loop: embed, estimate, value, decide, append.

Per sample, in order: the embedding turns the payload into a vector; the
estimator absorbs it (all_samples scope) or waits for acceptance
(accepted_only); the policy turns the estimator's view into psi; one
Bernoulli draw decides; accepted samples land in the append-only dataset.
The whole loop runs inside the selected kernel, so step-by-step use and
bulk runs produce bitwise identical traces.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from .control import Decision
from .errors import (IncompatiblePayload, InsufficientSamples,
                     SingularCovariance, StreamFormatError)
from .estimator import DEFAULT_REGULARIZATION, RegularizationConfig, RunningGaussian
from .kernel import (VARIANT_COMPLEMENTARY, VARIANT_OPEN_LOOP,
                     VARIANT_RANDOM_RATE, VARIANT_RECIPROCAL, backend)
from .metrics import MetricsPoint, cv, delta_uni, histogram
from .rng import TAG_DECISION, derive_key
from .value import PolicyConfig

_VARIANT_CODES = {
    "open_loop": VARIANT_OPEN_LOOP,
    "random_rate": VARIANT_RANDOM_RATE,
    "complementary": VARIANT_COMPLEMENTARY,
    "reciprocal": VARIANT_RECIPROCAL,
}

SCOPES = ("all_samples", "accepted_only")


@dataclass(frozen=True)
class StreamRecord:
    """One stream element: position k, raw payload, origin tag."""

    k: int
    payload: object
    source_tag: str = ""


@dataclass(frozen=True)
class EmbeddingSpec:
    """identity: payload is already the vector; count_field: payload is a
    mapping and `field` holds a scalar count embedded as a 1-D vector."""

    kind: str = "identity"
    field: str = "vehicles"

    def validate(self) -> list[str]:
        if self.kind not in ("identity", "count_field"):
            return [f"embedding kind must be identity or count_field, got {self.kind!r}"]
        return []


def embed(spec: EmbeddingSpec, record: StreamRecord) -> np.ndarray:
    """Vector for one record; raises IncompatiblePayload on shape mismatch."""
    if spec.kind == "identity":
        try:
            z = np.asarray(record.payload, dtype=np.float64)
        except (TypeError, ValueError):
            z = np.empty(0)
        if z.ndim != 1 or z.size == 0:
            raise IncompatiblePayload(
                f"record k={record.k}: identity embedding needs a 1-D vector")
        return z
    if not isinstance(record.payload, dict) or spec.field not in record.payload:
        raise IncompatiblePayload(
            f"record k={record.k}: payload has no field {spec.field!r}")
    value = record.payload[spec.field]
    if (isinstance(value, bool) or not isinstance(value, (int, np.integer))
            or value < 0):
        raise IncompatiblePayload(
            f"record k={record.k}: field {spec.field!r} must be a nonnegative integer")
    return np.array([float(value)], dtype=np.float64)


@dataclass(frozen=True)
class PipelineConfig:
    """Everything the loop needs besides the stream itself."""

    policy: PolicyConfig
    regularization: RegularizationConfig = DEFAULT_REGULARIZATION
    embedding: EmbeddingSpec = EmbeddingSpec()
    decision_seed: int = 0
    estimator_scope: str = "all_samples"
    metrics_interval: int = 100
    #: histogram width for balance metrics on count streams (None: observed max)
    count_k_max: int | None = None

    def validate(self) -> list[str]:
        problems = list(self.policy.validate())
        problems += self.embedding.validate()
        try:
            self.regularization.validate()
        except ValueError as exc:
            problems.append(str(exc))
        if self.estimator_scope not in SCOPES:
            problems.append(f"estimator_scope must be one of {SCOPES}")
        if self.metrics_interval < 1:
            problems.append("metrics_interval must be >= 1")
        return problems

    def check(self) -> None:
        problems = self.validate()
        if problems:
            from .errors import ConfigError
            raise ConfigError("; ".join(problems))


class DecisionLog:
    """Columnar, append-only record of every control step."""

    def __init__(self):
        self._ks: list[int] = []
        self._psi: list[float] = []
        self._dsq: list[float] = []
        self._draw: list[float] = []
        self._acc: list[bool] = []

    def extend(self, ks, psi, dsq, draw, acc) -> None:
        self._ks.extend(int(k) for k in ks)
        self._psi.extend(float(x) for x in psi)
        self._dsq.extend(float(x) for x in dsq)
        self._draw.extend(float(x) for x in draw)
        self._acc.extend(bool(x) for x in acc)

    def __len__(self) -> int:
        return len(self._ks)

    def __getitem__(self, i: int) -> Decision:
        dsq = self._dsq[i]
        return Decision(step=self._ks[i], psi=self._psi[i],
                        d_sq=None if np.isnan(dsq) else dsq,
                        draw=self._draw[i], accepted=self._acc[i])

    def __iter__(self):
        return (self[i] for i in range(len(self)))

    def accepted_flags(self) -> np.ndarray:
        return np.asarray(self._acc, dtype=bool)

    def to_jsonl(self) -> str:
        return "".join(d.to_json() + "\n" for d in self)

    def write_jsonl(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(self.to_jsonl())


class DatasetState:
    """Append-only accepted set: (k, z, payload reference) triples."""

    def __init__(self, dim: int):
        self.dim = dim
        self._ks: list[int] = []
        self._rows: list[np.ndarray] = []
        self._refs: list[str] = []
        self._matrix_cache: np.ndarray | None = None

    def append(self, k: int, z: np.ndarray, ref: str) -> None:
        self._ks.append(int(k))
        self._rows.append(np.asarray(z, dtype=np.float64))
        self._refs.append(ref)
        self._matrix_cache = None

    def extend_rows(self, ks, Z, refs) -> None:
        self._ks.extend(int(k) for k in ks)
        self._rows.extend(np.asarray(Z, dtype=np.float64))
        self._refs.extend(refs)
        self._matrix_cache = None

    def __len__(self) -> int:
        return len(self._ks)

    @property
    def ks(self) -> list[int]:
        return list(self._ks)

    @property
    def refs(self) -> list[str]:
        return list(self._refs)

    def matrix(self) -> np.ndarray:
        if self._matrix_cache is None:
            if self._rows:
                self._matrix_cache = np.vstack(self._rows)
            else:
                self._matrix_cache = np.empty((0, self.dim), dtype=np.float64)
        return self._matrix_cache

    def write_jsonl(self, path) -> None:
        with open(path, "w") as fh:
            for k, row, ref in zip(self._ks, self._rows, self._refs):
                fh.write(json.dumps({"k": k, "z": row.tolist(), "ref": ref},
                                    sort_keys=True, separators=(",", ":")) + "\n")


@dataclass
class RunReport:
    """Everything a finished run exposes."""

    steps: int
    accepted: int
    acceptance_rate: float
    dataset: DatasetState
    decisions: DecisionLog
    estimator: RunningGaussian
    metrics: list[MetricsPoint] = field(default_factory=list)
    final_delta_uni: float | None = None
    final_cv: float | None = None
    bounds: list[tuple[float, float]] | None = None
    embedded_sha256: str = ""

    def summary_dict(self) -> dict:
        return {
            "steps": self.steps,
            "accepted": self.accepted,
            "acceptance_rate": self.acceptance_rate,
            "final": {
                "delta_uni": self.final_delta_uni,
                "cv": self.final_cv,
                "bounds": None if self.bounds is None
                else [[lo, hi] for lo, hi in self.bounds],
            },
            "embedded_sha256": self.embedded_sha256,
        }


def normalization_bounds(policy: PolicyConfig, estimator: RunningGaussian,
                         accepted_Z: np.ndarray,
                         reg: RegularizationConfig = DEFAULT_REGULARIZATION):
    """Per-dimension (lo, hi) for quantile normalization.

    The bounded policy gets the axis-aligned box of its trust ellipsoid from
    the final estimator state; everything else is normalized by the
    empirical extent of the accepted set.  None when no usable bounds exist.
    """
    if policy.variant == "reciprocal" and estimator.n >= estimator.dim + 2:
        try:
            sigma = estimator.covariance(reg)
        except (InsufficientSamples, SingularCovariance):
            sigma = None
        if sigma is not None:
            half = np.sqrt(policy.r_max_sq * np.diag(sigma))
            if np.all(half > 0):
                return [(float(m - h), float(m + h))
                        for m, h in zip(estimator.mu, half)]
    if accepted_Z.shape[0] < 2:
        return None
    lo = accepted_Z.min(axis=0)
    hi = accepted_Z.max(axis=0)
    if not np.all(hi > lo):
        return None
    return [(float(a), float(b)) for a, b in zip(lo, hi)]


class Pipeline:
    """Stateful wrapper for step-by-step use; run() is the bulk path.

    Both paths execute the same kernel, so interleaving them (or chunking a
    stream across calls) cannot change any decision.
    """

    def __init__(self, dim: int, config: PipelineConfig, source_tag: str = "stream"):
        config.check()
        self.dim = dim
        self.config = config
        self.source_tag = source_tag
        self._n = 0
        self._mu = np.zeros(dim, dtype=np.float64)
        self._cm = np.zeros((dim, dim), dtype=np.float64)
        self._step = 0
        self._key = derive_key(config.decision_seed, TAG_DECISION)
        self.dataset = DatasetState(dim)
        self.decisions = DecisionLog()
        policy = config.policy
        self._params = dict(
            variant=_VARIANT_CODES[policy.variant],
            nu=policy.nu,
            r_max_sq=policy.r_max_sq,
            rate=0.0 if policy.rate is None else policy.rate,
            n_min_eff=policy.resolved_warmup(dim),
            scope_all=config.estimator_scope == "all_samples",
        )
        mode, lam = config.regularization.codes()
        self._params.update(shrink_mode=mode, shrink_lam=lam,
                            jitter=config.regularization.jitter)

    @property
    def estimator(self) -> RunningGaussian:
        return RunningGaussian.from_moments(self._n, self._mu, self._cm)

    @property
    def steps(self) -> int:
        return self._step

    def _loop(self, Z: np.ndarray):
        p = self._params
        psi, dsq, draw, acc, self._n = backend.run_loop(
            Z, self._n, self._mu, self._cm, self._step,
            p["variant"], p["nu"], p["r_max_sq"], p["rate"], p["n_min_eff"],
            p["shrink_mode"], p["shrink_lam"], p["jitter"], p["scope_all"],
            self._key)
        self._step += Z.shape[0]
        return psi, dsq, draw, acc

    def step(self, record: StreamRecord) -> Decision:
        """Process one record; returns its Decision."""
        z = embed(self.config.embedding, record)
        if z.shape[0] != self.dim:
            raise IncompatiblePayload(
                f"record k={record.k}: expected dim {self.dim}, got {z.shape[0]}")
        psi, dsq, draw, acc = self._loop(np.ascontiguousarray(z.reshape(1, -1)))
        self.decisions.extend([record.k], psi, dsq, draw, acc)
        if acc[0]:
            tag = record.source_tag or self.source_tag
            self.dataset.append(record.k, z, f"{tag}#{record.k}")
        return self.decisions[len(self.decisions) - 1]

    def run_embedded(self, Z: np.ndarray, ks=None, tags=None) -> RunReport:
        """Bulk path over pre-embedded rows; appends to the current state."""
        Z = np.ascontiguousarray(Z, dtype=np.float64)
        if Z.ndim != 2 or Z.shape[1] != self.dim:
            raise IncompatiblePayload(f"expected rows of dim {self.dim}")
        if Z.size and not np.all(np.isfinite(Z)):
            bad = int(np.argwhere(~np.isfinite(Z).all(axis=1))[0][0])
            raise IncompatiblePayload(f"row {bad}: non-finite embedded value")
        if ks is None:
            ks = np.arange(self._step, self._step + Z.shape[0])
        ks = np.asarray(ks, dtype=np.int64)
        psi, dsq, draw, acc = self._loop(Z)
        self.decisions.extend(ks, psi, dsq, draw, acc)
        acc_idx = np.nonzero(acc)[0]
        if tags is None:
            refs = [f"{self.source_tag}#{int(ks[i])}" for i in acc_idx]
        else:
            refs = [f"{tags[i]}#{int(ks[i])}" for i in acc_idx]
        self.dataset.extend_rows(ks[acc_idx], Z[acc_idx], refs)
        return self.report(embedded=Z)

    def report(self, embedded: np.ndarray | None = None) -> RunReport:
        """Assemble the report (metric series, final stats) for all steps so far."""
        acc = self.decisions.accepted_flags()
        T = acc.size
        n_acc = int(acc.sum())
        acc_Z = self.dataset.matrix()
        est = self.estimator
        bounds = normalization_bounds(self.config.policy, est, acc_Z,
                                      self.config.regularization)
        is_counts = self.config.embedding.kind == "count_field"
        if is_counts:
            if self.config.count_k_max is not None:
                k_max = self.config.count_k_max
            elif embedded is not None and embedded.size:
                k_max = int(embedded.max())
            elif n_acc:
                k_max = int(acc_Z.max())
            else:
                k_max = 0
        else:
            k_max = 0
        series = []
        if T:
            interval = self.config.metrics_interval
            cum = np.cumsum(acc)
            checkpoints = list(range(interval, T + 1, interval))
            if not checkpoints or checkpoints[-1] != T:
                checkpoints.append(T)
            for s in checkpoints:
                na = int(cum[s - 1])
                window = float(np.mean(acc[max(0, s - interval):s]))
                series.append(MetricsPoint(
                    step=s, n_accepted=na,
                    delta_uni=self._delta_prefix(acc_Z[:na], bounds),
                    cv=self._cv_prefix(acc_Z[:na], k_max) if is_counts else None,
                    acceptance_rate=window))
        final_delta = series[-1].delta_uni if series else None
        final_cv = series[-1].cv if series else None
        sha = ""
        if embedded is not None:
            sha = hashlib.sha256(np.ascontiguousarray(embedded).tobytes()).hexdigest()
        return RunReport(
            steps=T, accepted=n_acc,
            acceptance_rate=(n_acc / T) if T else 0.0,
            dataset=self.dataset, decisions=self.decisions, estimator=est,
            metrics=series, final_delta_uni=final_delta, final_cv=final_cv,
            bounds=bounds, embedded_sha256=sha)

    def _delta_prefix(self, prefix: np.ndarray, final_bounds):
        if prefix.shape[0] < 2:
            return None
        if self.config.policy.variant == "reciprocal" and final_bounds is not None:
            bounds = final_bounds
        else:
            lo = prefix.min(axis=0)
            hi = prefix.max(axis=0)
            if not np.all(hi > lo):
                return None
            bounds = list(zip(lo, hi))
        return delta_uni(prefix, bounds)

    def _cv_prefix(self, prefix: np.ndarray, k_max: int):
        if prefix.shape[0] == 0 or k_max < 1:
            return None
        return cv(histogram(prefix[:, 0], k_max))


def embed_records(records, embedding: EmbeddingSpec, max_steps: int | None = None):
    """Materialize an iterable of StreamRecord into (Z, ks, tags).

    Enforces strictly increasing k and a consistent dimension; Z is empty
    with 0 columns when the stream yields nothing.
    """
    ks: list[int] = []
    rows: list[np.ndarray] = []
    tags: list[str] = []
    last_k = None
    for rec in records:
        if max_steps is not None and len(ks) >= max_steps:
            break
        if last_k is not None and rec.k <= last_k:
            raise StreamFormatError(
                f"record k={rec.k}: k must be strictly increasing (previous {last_k})")
        last_k = rec.k
        z = embed(embedding, rec)
        ks.append(rec.k)
        rows.append(z)
        tags.append(rec.source_tag or "stream")
    if not rows:
        return np.empty((0, 0)), np.empty(0, dtype=np.int64), []
    try:
        Z = np.vstack(rows)
    except ValueError:
        raise IncompatiblePayload("records have inconsistent dimensions") from None
    return Z, np.asarray(ks, dtype=np.int64), tags


def run(records, config: PipelineConfig, dim: int | None = None,
        max_steps: int | None = None) -> RunReport:
    """Drive the pipeline over an iterable of StreamRecord.

    dim is inferred from the first record when not given.  Records are
    embedded up front and handed to the kernel as one block.
    """
    Z, ks, tags = embed_records(records, config.embedding, max_steps)
    if Z.shape[0] == 0:
        pipe = Pipeline(dim or 1, config)
        return pipe.report(embedded=np.empty((0, dim or 1)))
    if dim is not None and Z.shape[1] != dim:
        raise IncompatiblePayload(f"expected dim {dim}, stream has {Z.shape[1]}")
    pipe = Pipeline(Z.shape[1], config)
    return pipe.run_embedded(Z, ks=ks, tags=tags)
