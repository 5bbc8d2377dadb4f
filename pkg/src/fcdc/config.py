"""Experiment configuration: one JSON document in, executed runs out.

A run config describes a stream (generator or file), an embedding, one
policy, regularization, seeds, and output options.  A compare config is the
same with a `policies` list instead of a single policy: every member runs
on the bit-identical embedded stream, so differences in the collected sets
are attributable to the policies alone.

Violations are collected, not first-error-only: parse functions return
(spec, problems) and the CLI echoes every problem at once.
"""

from __future__ import annotations

import dataclasses
import json
import os
from dataclasses import dataclass
from importlib import resources

import numpy as np

from .errors import ConfigError
from .estimator import RegularizationConfig
from .pipeline import (EmbeddingSpec, Pipeline, PipelineConfig, RunReport,
                       SCOPES, embed_records)
from .streams import (CountStreamConfig, DEFAULT_COUNT_K_MAX,
                      DEFAULT_COUNT_WEIGHTS, GaussianStreamConfig,
                      count_values, gaussian_matrix, read_csv, read_jsonl)
from .value import PolicyConfig

STREAM_KINDS = ("gaussian", "counts", "jsonl", "csv")

DEFAULT_OUT_DIR = "fcdc_out"


def load_json(path) -> dict:
    """Parse a JSON config file; ConfigError names the path on any failure."""
    if not os.path.exists(path):
        raise ConfigError(f"config file not found: {path}")
    try:
        with open(path) as fh:
            obj = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc.msg} at line {exc.lineno})") from None
    except OSError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    if not isinstance(obj, dict):
        raise ConfigError(f"{path}: top level must be a JSON object")
    return obj


def packaged_config_names() -> list[str]:
    root = resources.files("fcdc.configs")
    return sorted(p.name for p in root.iterdir() if p.name.endswith(".json"))


def resolve_config_path(path) -> str:
    """Filesystem path as given, else the packaged config of that name."""
    if os.path.exists(path):
        return str(path)
    candidate = resources.files("fcdc.configs") / str(path)
    if os.path.basename(str(path)) == str(path) and candidate.is_file():
        return str(candidate)
    raise ConfigError(f"config file not found: {path}")


# ---------------------------------------------------------------------------
# stream spec

@dataclass(frozen=True)
class StreamSpec:
    """Where records come from: a generator (gaussian, counts) or a file."""

    kind: str
    seed: int = 0
    n_samples: int = 0
    mean: tuple | None = None
    covariance: tuple | None = None
    weights: tuple | None = None
    k_max: int | None = None
    path: str | None = None

    def gaussian_config(self) -> GaussianStreamConfig:
        return GaussianStreamConfig(seed=self.seed, n_samples=self.n_samples,
                                    mean=self.mean, covariance=self.covariance)

    def count_config(self) -> CountStreamConfig:
        return CountStreamConfig(seed=self.seed, n_samples=self.n_samples,
                                 weights=self.weights, k_max=self.k_max)

    def dim(self) -> int | None:
        """Embedded dimension when knowable without reading a file."""
        if self.kind == "gaussian":
            return len(self.mean)
        if self.kind == "counts":
            return 1
        return None

    def resolved_dict(self) -> dict:
        out = {"kind": self.kind}
        if self.kind in ("gaussian", "counts"):
            out["seed"] = self.seed
            out["n_samples"] = self.n_samples
        if self.kind == "gaussian":
            out["mean"] = list(self.mean)
            out["covariance"] = [list(r) for r in self.covariance]
        elif self.kind == "counts":
            out["weights"] = list(self.weights)
            out["k_max"] = self.k_max
        else:
            out["path"] = self.path
        return out


def _check_keys(obj: dict, allowed, where: str, problems: list[str]) -> None:
    for key in obj:
        if key not in allowed:
            problems.append(f"unknown key {key!r} in {where}")


def _as_int(obj, key, default, where, problems):
    v = obj.get(key, default)
    if v is None and default is None:
        return None
    if not isinstance(v, int) or isinstance(v, bool):
        problems.append(f"{where}.{key} must be an integer")
        return default
    return v


def parse_stream_spec(obj, problems: list[str]) -> StreamSpec | None:
    if not isinstance(obj, dict):
        problems.append("stream must be an object")
        return None
    kind = obj.get("kind")
    if kind not in STREAM_KINDS:
        problems.append(f"stream.kind must be one of {STREAM_KINDS}, got {kind!r}")
        return None
    if kind in ("gaussian", "counts"):
        allowed = {"kind", "seed", "n_samples"}
        allowed |= {"mean", "covariance"} if kind == "gaussian" else {"weights", "k_max"}
        _check_keys(obj, allowed, "stream", problems)
        seed = _as_int(obj, "seed", 0, "stream", problems)
        n_samples = _as_int(obj, "n_samples", 0, "stream", problems)
        if kind == "gaussian":
            mean = obj.get("mean", [0.0, 0.0])
            d = len(mean) if isinstance(mean, list) and mean else 0
            cov = obj.get("covariance")
            if cov is None and d:
                cov = np.eye(d).tolist()
            try:
                spec = StreamSpec(kind=kind, seed=seed, n_samples=n_samples,
                                  mean=tuple(float(v) for v in mean),
                                  covariance=tuple(tuple(float(v) for v in row)
                                                   for row in cov))
                problems.extend(f"stream: {p}" for p in spec.gaussian_config().validate())
            except (TypeError, ValueError):
                problems.append("stream: mean must be a number list and covariance a square matrix")
                return None
            return spec
        weights = obj.get("weights", list(DEFAULT_COUNT_WEIGHTS))
        k_max = _as_int(obj, "k_max", None, "stream", problems)
        if k_max is None:
            k_max = (len(weights) - 1 if isinstance(weights, list) and weights
                     else DEFAULT_COUNT_K_MAX)
        try:
            spec = StreamSpec(kind=kind, seed=seed, n_samples=n_samples,
                              weights=tuple(float(v) for v in weights), k_max=k_max)
            problems.extend(f"stream: {p}" for p in spec.count_config().validate())
        except (TypeError, ValueError):
            problems.append("stream: weights must be a number list")
            return None
        return spec
    _check_keys(obj, {"kind", "path"}, "stream", problems)
    path = obj.get("path")
    if not isinstance(path, str) or not path:
        problems.append("stream.path is required for file streams")
        return None
    if not os.path.exists(path):
        problems.append(f"stream file not found: {path}")
    return StreamSpec(kind=kind, path=path)


# ---------------------------------------------------------------------------
# policy / embedding / regularization blocks

_POLICY_KEYS = ("variant", "nu", "r_max_sq", "rate", "warmup_min_samples")


def _parse_policy(obj, problems, where="policy", allow_deferred_rate=False):
    if not isinstance(obj, dict):
        problems.append(f"{where} must be an object")
        return None
    _check_keys(obj, set(_POLICY_KEYS) | {"name", "decision_seed"}, where, problems)
    kwargs = {k: obj[k] for k in _POLICY_KEYS if k in obj}
    try:
        policy = PolicyConfig(**kwargs)
    except TypeError:
        problems.append(f"{where}: malformed policy fields")
        return None
    found = policy.validate()
    if allow_deferred_rate:
        # in a comparison the rate may be matched to an earlier policy's yield
        found = [p for p in found if p != "rate is required for random_rate"]
    problems.extend(f"{where}: {p}" for p in found)
    return policy


def _parse_regularization(obj, problems) -> RegularizationConfig:
    if obj is None:
        return RegularizationConfig()
    if not isinstance(obj, dict):
        problems.append("regularization must be an object")
        return RegularizationConfig()
    _check_keys(obj, {"jitter", "shrinkage", "shrinkage_lam"}, "regularization", problems)
    try:
        reg = RegularizationConfig(**obj)
    except TypeError:
        problems.append("regularization: malformed fields")
        return RegularizationConfig()
    try:
        reg.validate()
    except ValueError as exc:
        problems.append(f"regularization: {exc}")
    return reg


def _parse_embedding(obj, stream: StreamSpec | None, problems) -> EmbeddingSpec:
    if obj is None:
        if stream is not None and stream.kind == "counts":
            return EmbeddingSpec(kind="count_field", field="vehicles")
        return EmbeddingSpec(kind="identity")
    if not isinstance(obj, dict):
        problems.append("embedding must be an object")
        return EmbeddingSpec()
    _check_keys(obj, {"kind", "field"}, "embedding", problems)
    try:
        spec = EmbeddingSpec(**obj)
    except TypeError:
        problems.append("embedding: malformed fields")
        return EmbeddingSpec()
    problems.extend(f"embedding: {p}" for p in spec.validate())
    return spec


# ---------------------------------------------------------------------------
# run config

_RUN_KEYS = {"mode", "stream", "embedding", "policy", "regularization",
             "decision_seed", "estimator_scope", "metrics_interval",
             "count_k_max", "max_steps", "out_dir"}


@dataclass(frozen=True)
class RunSpec:
    stream: StreamSpec
    pipeline: PipelineConfig
    out_dir: str = DEFAULT_OUT_DIR
    max_steps: int | None = None

    def with_overrides(self, seed: int | None = None,
                       out_dir: str | None = None) -> "RunSpec":
        spec = self
        if seed is not None:
            spec = dataclasses.replace(
                spec,
                stream=dataclasses.replace(spec.stream, seed=seed),
                pipeline=dataclasses.replace(spec.pipeline, decision_seed=seed))
        if out_dir is not None:
            spec = dataclasses.replace(spec, out_dir=out_dir)
        return spec

    def resolved_dict(self) -> dict:
        pipe = self.pipeline
        return {
            "mode": "run",
            "stream": self.stream.resolved_dict(),
            "embedding": {"kind": pipe.embedding.kind, "field": pipe.embedding.field},
            "policy": dataclasses.asdict(pipe.policy),
            "regularization": dataclasses.asdict(pipe.regularization),
            "decision_seed": pipe.decision_seed,
            "estimator_scope": pipe.estimator_scope,
            "metrics_interval": pipe.metrics_interval,
            "count_k_max": pipe.count_k_max,
            "max_steps": self.max_steps,
        }


def parse_run_config(obj: dict) -> tuple[RunSpec | None, list[str]]:
    problems: list[str] = []
    _check_keys(obj, _RUN_KEYS, "config", problems)
    mode = obj.get("mode", "run")
    if mode != "run":
        problems.append(f"config: mode must be 'run', got {mode!r}")
    if "policies" in obj:
        problems.append("config: 'policies' belongs to compare configs; use 'policy'")
    stream = parse_stream_spec(obj.get("stream"), problems) if "stream" in obj else None
    if stream is None and "stream" not in obj:
        problems.append("config: stream is required")
    policy = _parse_policy(obj.get("policy", {}), problems)
    reg = _parse_regularization(obj.get("regularization"), problems)
    embedding = _parse_embedding(obj.get("embedding"), stream, problems)
    decision_seed = _as_int(obj, "decision_seed", 0, "config", problems)
    scope = obj.get("estimator_scope", "all_samples")
    if scope not in SCOPES:
        problems.append(f"config: estimator_scope must be one of {SCOPES}")
        scope = "all_samples"
    interval = _as_int(obj, "metrics_interval", 100, "config", problems)
    if isinstance(interval, int) and interval < 1:
        problems.append("config: metrics_interval must be >= 1")
        interval = 100
    count_k_max = _as_int(obj, "count_k_max", None, "config", problems)
    if count_k_max is None and stream is not None and stream.kind == "counts":
        count_k_max = stream.k_max
    max_steps = _as_int(obj, "max_steps", None, "config", problems)
    out_dir = obj.get("out_dir", DEFAULT_OUT_DIR)
    if not isinstance(out_dir, str) or not out_dir:
        problems.append("config: out_dir must be a nonempty string")
        out_dir = DEFAULT_OUT_DIR
    if problems or stream is None or policy is None:
        return None, problems
    pipeline = PipelineConfig(policy=policy, regularization=reg,
                              embedding=embedding, decision_seed=decision_seed,
                              estimator_scope=scope, metrics_interval=interval,
                              count_k_max=count_k_max)
    spec = RunSpec(stream=stream, pipeline=pipeline, out_dir=out_dir,
                   max_steps=max_steps)
    return spec, problems


# ---------------------------------------------------------------------------
# compare config

_COMPARE_KEYS = (_RUN_KEYS - {"policy"}) | {"policies"}


@dataclass(frozen=True)
class PolicyEntry:
    name: str
    policy: PolicyConfig
    decision_seed: int


@dataclass(frozen=True)
class CompareSpec:
    stream: StreamSpec
    embedding: EmbeddingSpec
    regularization: RegularizationConfig
    entries: tuple[PolicyEntry, ...]
    estimator_scope: str = "all_samples"
    metrics_interval: int = 100
    count_k_max: int | None = None
    max_steps: int | None = None
    out_dir: str = DEFAULT_OUT_DIR

    def with_overrides(self, seed: int | None = None,
                       out_dir: str | None = None) -> "CompareSpec":
        spec = self
        if seed is not None:
            entries = tuple(dataclasses.replace(e, decision_seed=seed + i)
                            for i, e in enumerate(spec.entries))
            spec = dataclasses.replace(
                spec, stream=dataclasses.replace(spec.stream, seed=seed),
                entries=entries)
        if out_dir is not None:
            spec = dataclasses.replace(spec, out_dir=out_dir)
        return spec

    def pipeline_config(self, entry: PolicyEntry) -> PipelineConfig:
        return PipelineConfig(policy=entry.policy,
                              regularization=self.regularization,
                              embedding=self.embedding,
                              decision_seed=entry.decision_seed,
                              estimator_scope=self.estimator_scope,
                              metrics_interval=self.metrics_interval,
                              count_k_max=self.count_k_max)


def parse_compare_config(obj: dict) -> tuple[CompareSpec | None, list[str]]:
    problems: list[str] = []
    _check_keys(obj, _COMPARE_KEYS, "config", problems)
    mode = obj.get("mode", "compare")
    if mode != "compare":
        problems.append(f"config: mode must be 'compare', got {mode!r}")
    stream = parse_stream_spec(obj.get("stream"), problems) if "stream" in obj else None
    if stream is None and "stream" not in obj:
        problems.append("config: stream is required")
    reg = _parse_regularization(obj.get("regularization"), problems)
    embedding = _parse_embedding(obj.get("embedding"), stream, problems)
    decision_seed = _as_int(obj, "decision_seed", 0, "config", problems)
    scope = obj.get("estimator_scope", "all_samples")
    if scope not in SCOPES:
        problems.append(f"config: estimator_scope must be one of {SCOPES}")
        scope = "all_samples"
    interval = _as_int(obj, "metrics_interval", 100, "config", problems)
    if isinstance(interval, int) and interval < 1:
        problems.append("config: metrics_interval must be >= 1")
        interval = 100
    count_k_max = _as_int(obj, "count_k_max", None, "config", problems)
    if count_k_max is None and stream is not None and stream.kind == "counts":
        count_k_max = stream.k_max
    max_steps = _as_int(obj, "max_steps", None, "config", problems)
    out_dir = obj.get("out_dir", DEFAULT_OUT_DIR)
    if not isinstance(out_dir, str) or not out_dir:
        problems.append("config: out_dir must be a nonempty string")
        out_dir = DEFAULT_OUT_DIR
    raw_policies = obj.get("policies")
    entries: list[PolicyEntry] = []
    if not isinstance(raw_policies, list) or len(raw_policies) < 2:
        problems.append("config: compare needs a policies list with at least 2 entries")
    else:
        seen: dict[str, int] = {}
        closed_loop_before = False
        for i, p_obj in enumerate(raw_policies):
            where = f"policies[{i}]"
            policy = _parse_policy(p_obj, problems, where=where,
                                   allow_deferred_rate=closed_loop_before)
            if policy is None:
                continue
            if policy.variant in ("complementary", "reciprocal"):
                closed_loop_before = True
            name = p_obj.get("name", policy.variant)
            if not isinstance(name, str) or not name:
                problems.append(f"{where}: name must be a nonempty string")
                name = policy.variant
            seen[name] = seen.get(name, 0) + 1
            if seen[name] > 1:
                name = f"{name}-{seen[name]}"
            entry_seed = _as_int(p_obj, "decision_seed", decision_seed + i,
                                 where, problems)
            entries.append(PolicyEntry(name=name, policy=policy,
                                       decision_seed=entry_seed))
    if problems or stream is None or not entries:
        return None, problems
    spec = CompareSpec(stream=stream, embedding=embedding, regularization=reg,
                       entries=tuple(entries), estimator_scope=scope,
                       metrics_interval=interval, count_k_max=count_k_max,
                       max_steps=max_steps, out_dir=out_dir)
    return spec, problems


def detect_mode(obj: dict) -> str:
    if "policies" in obj:
        return "compare"
    return obj.get("mode", "run")


# ---------------------------------------------------------------------------
# execution

def _materialize(stream: StreamSpec, embedding: EmbeddingSpec,
                 max_steps: int | None):
    """Embedded matrix plus record keys/tags for any stream kind."""
    if stream.kind == "gaussian":
        Z = gaussian_matrix(stream.gaussian_config())
        if max_steps is not None:
            Z = Z[:max_steps]
        ks = np.arange(Z.shape[0], dtype=np.int64)
        return Z, ks, None, "gaussian"
    if stream.kind == "counts":
        values = count_values(stream.count_config())
        if max_steps is not None:
            values = values[:max_steps]
        Z = values.astype(np.float64).reshape(-1, 1)
        ks = np.arange(Z.shape[0], dtype=np.int64)
        return Z, ks, None, "counts"
    reader = read_jsonl if stream.kind == "jsonl" else read_csv
    Z, ks, tags = embed_records(reader(stream.path), embedding, max_steps)
    return Z, ks, tags, str(stream.path)


def execute_run(spec: RunSpec) -> RunReport:
    """Run one policy over the configured stream; returns the full report."""
    Z, ks, tags, source_tag = _materialize(spec.stream, spec.pipeline.embedding,
                                           spec.max_steps)
    dim = spec.stream.dim() or (Z.shape[1] if Z.shape[0] else 1)
    pipe = Pipeline(dim, spec.pipeline, source_tag=source_tag)
    if Z.shape[0] == 0:
        return pipe.report(embedded=np.empty((0, dim)))
    return pipe.run_embedded(Z, ks=ks, tags=tags)


def execute_compare(spec: CompareSpec) -> list[tuple[PolicyEntry, RunReport]]:
    """Run every policy entry over the bit-identical embedded stream.

    A random_rate entry with no explicit rate is matched to the realized
    acceptance rate of the first closed-loop entry that already ran.
    """
    Z, ks, tags, source_tag = _materialize(spec.stream, spec.embedding,
                                           spec.max_steps)
    dim = spec.stream.dim() or (Z.shape[1] if Z.shape[0] else 1)
    results: list[tuple[PolicyEntry, RunReport]] = []
    matched_rate: float | None = None
    for entry in spec.entries:
        policy = entry.policy
        if policy.variant == "random_rate" and policy.rate is None:
            if matched_rate is None:
                raise ConfigError(
                    f"policy {entry.name!r}: rate omitted but no closed-loop "
                    "policy ran before it to match against")
            policy = dataclasses.replace(policy, rate=matched_rate)
            entry = dataclasses.replace(entry, policy=policy)
        pipe = Pipeline(dim, spec.pipeline_config(entry), source_tag=source_tag)
        if Z.shape[0] == 0:
            report = pipe.report(embedded=np.empty((0, dim)))
        else:
            report = pipe.run_embedded(Z, ks=ks, tags=tags)
        if (matched_rate is None
                and policy.variant in ("complementary", "reciprocal")):
            matched_rate = report.acceptance_rate
        results.append((entry, report))
    hashes = {report.embedded_sha256 for _, report in results}
    if len(hashes) > 1:  # pragma: no cover - guarded by construction
        raise RuntimeError("compare members saw different embedded streams")
    return results
