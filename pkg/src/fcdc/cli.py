"""Command-line interface.

Three subcommands over a single JSON config document:

  run       execute one policy, write report/metrics/decision artifacts
  compare   execute >= 2 policies on the bit-identical stream, tabulate
  validate  parse and sanity-check a config, echo resolved defaults

--config accepts a filesystem path or the name of a packaged reference
config.  Flags only override seeds (--seed) and the output directory
(--out); everything else lives in the config file.  Exit codes: 0 success,
1 config or I/O error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import itertools
import json
import os
import sys

from .config import (CompareSpec, RunSpec, detect_mode, execute_compare,
                     execute_run, load_json, packaged_config_names,
                     parse_compare_config, parse_run_config,
                     resolve_config_path)
from .errors import (ConfigError, FcdcError, InsufficientSamples,
                     SingularCovariance)
from .kernel import BACKEND_NAME
from .metrics import write_metrics_csv
from .pipeline import embed
from .streams import read_csv, read_jsonl

RUN_ARTIFACTS = ("report.json", "metrics.csv", "decisions.jsonl",
                 "accepted.jsonl", "estimator.json")


def _write_run_outputs(out_dir: str, spec: RunSpec, report) -> None:
    os.makedirs(out_dir, exist_ok=True)
    obj = report.summary_dict()
    obj["config"] = spec.resolved_dict()
    with open(os.path.join(out_dir, "report.json"), "w") as fh:
        fh.write(json.dumps(obj, sort_keys=True, indent=2) + "\n")
    write_metrics_csv(os.path.join(out_dir, "metrics.csv"), report.metrics)
    report.decisions.write_jsonl(os.path.join(out_dir, "decisions.jsonl"))
    report.dataset.write_jsonl(os.path.join(out_dir, "accepted.jsonl"))
    with open(os.path.join(out_dir, "estimator.json"), "w") as fh:
        fh.write(report.estimator.to_json() + "\n")


def cmd_run(config_path, seed: int | None = None, out: str | None = None) -> int:
    path = resolve_config_path(config_path)
    obj = load_json(path)
    if detect_mode(obj) == "compare":
        raise ConfigError(f"{path}: this is a compare config; use the compare subcommand")
    spec, problems = parse_run_config(obj)
    if problems or spec is None:
        raise ConfigError("\n".join(problems) or f"{path}: invalid run config")
    spec = spec.with_overrides(seed=seed, out_dir=out)
    report = execute_run(spec)
    _write_run_outputs(spec.out_dir, spec, report)
    print(f"backend: {BACKEND_NAME}")
    print(f"accepted {report.accepted} of {report.steps} steps "
          f"(rate {report.acceptance_rate:.5f})")
    print(f"outputs: {spec.out_dir}/{{{','.join(RUN_ARTIFACTS)}}}")
    return 0


def _fmt_cell(x, width: int) -> str:
    if x is None:
        return "-".rjust(width)
    return f"{x:.4f}".rjust(width)


def cmd_compare(config_path, seed: int | None = None, out: str | None = None) -> int:
    path = resolve_config_path(config_path)
    obj = load_json(path)
    if detect_mode(obj) != "compare":
        raise ConfigError(f"{path}: this is a run config; use the run subcommand")
    spec, problems = parse_compare_config(obj)
    if problems or spec is None:
        raise ConfigError("\n".join(problems) or f"{path}: invalid compare config")
    spec = spec.with_overrides(seed=seed, out_dir=out)
    results = execute_compare(spec)
    os.makedirs(spec.out_dir, exist_ok=True)

    with open(os.path.join(spec.out_dir, "comparison.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["policy", "step", "N", "delta_uni", "cv", "acceptance_rate"])
        for entry, report in results:
            for pt in report.metrics:
                w.writerow([entry.name, pt.step, pt.n_accepted,
                            "" if pt.delta_uni is None else repr(pt.delta_uni),
                            "" if pt.cv is None else repr(pt.cv),
                            repr(pt.acceptance_rate)])
    with open(os.path.join(spec.out_dir, "summary.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["policy", "steps", "N", "acceptance_rate", "delta_uni",
                    "cv", "embedded_sha256"])
        for entry, report in results:
            w.writerow([entry.name, report.steps, report.accepted,
                        repr(report.acceptance_rate),
                        "" if report.final_delta_uni is None else repr(report.final_delta_uni),
                        "" if report.final_cv is None else repr(report.final_cv),
                        report.embedded_sha256])

    name_w = max(6, max(len(e.name) for e, _ in results))
    print(f"backend: {BACKEND_NAME}")
    print(f"stream sha256: {results[0][1].embedded_sha256[:16]}... "
          f"({results[0][1].steps} steps, shared by all policies)")
    print(f"{'policy'.ljust(name_w)} {'steps':>7} {'N':>7} {'rate':>7} "
          f"{'delta_uni':>10} {'cv':>8}")
    for entry, report in results:
        print(f"{entry.name.ljust(name_w)} {report.steps:>7} {report.accepted:>7} "
              f"{report.acceptance_rate:>7.4f} "
              f"{_fmt_cell(report.final_delta_uni, 10)} "
              f"{_fmt_cell(report.final_cv, 8)}")
    print(f"outputs: {spec.out_dir}/{{comparison.csv,summary.csv}}")
    return 0


def _probe_dim(spec, embedding) -> int | None:
    """Embedded dimension; peeks at the first record of file streams."""
    dim = spec.dim()
    if dim is not None or spec.path is None or not os.path.exists(spec.path):
        return dim
    reader = read_jsonl if spec.kind == "jsonl" else read_csv
    try:
        first = next(iter(itertools.islice(reader(spec.path), 1)), None)
        if first is None:
            return None
        return embed(embedding, first).shape[0]
    except FcdcError:
        return None


def _echo_policy(policy, dim: int | None, indent: str = "") -> None:
    print(f"{indent}variant: {policy.variant}")
    print(f"{indent}nu: {policy.nu}")
    print(f"{indent}r_max_sq: {policy.r_max_sq!r}")
    if policy.rate is not None:
        print(f"{indent}rate: {policy.rate!r}")
    if dim is None:
        floor = policy.resolved_warmup(1)
        print(f"{indent}warmup n_min: >= {floor} (dim unknown: max(floor, dim+2))")
    else:
        print(f"{indent}warmup n_min: {policy.resolved_warmup(dim)}")


def cmd_validate(config_path, seed: int | None = None, out: str | None = None) -> int:
    path = resolve_config_path(config_path)
    obj = load_json(path)
    mode = detect_mode(obj)
    if mode == "compare":
        spec, problems = parse_compare_config(obj)
    else:
        spec, problems = parse_run_config(obj)
    if problems or spec is None:
        print(f"invalid {mode} config: {path}", file=sys.stderr)
        for p in problems or ["unparseable config"]:
            print(f"  violation: {p}", file=sys.stderr)
        return 1
    spec = spec.with_overrides(seed=seed, out_dir=out)
    print(f"ok: {mode} config {path}")
    stream = spec.stream
    extra = ""
    if stream.kind in ("gaussian", "counts"):
        extra = f" seed={stream.seed} n_samples={stream.n_samples}"
    else:
        extra = f" path={stream.path}"
    print(f"stream: {stream.kind}{extra}")
    embedding = spec.pipeline.embedding if isinstance(spec, RunSpec) else spec.embedding
    dim = _probe_dim(stream, embedding)
    print(f"embedding: {embedding.kind}"
          + (f" (field {embedding.field!r})" if embedding.kind == "count_field" else "")
          + (f", dim {dim}" if dim is not None else ", dim unknown"))
    if isinstance(spec, RunSpec):
        print("policy:")
        _echo_policy(spec.pipeline.policy, dim, indent="  ")
        reg = spec.pipeline.regularization
        print(f"decision seed: {spec.pipeline.decision_seed}")
        scope = spec.pipeline.estimator_scope
        interval = spec.pipeline.metrics_interval
    else:
        for entry in spec.entries:
            rate_note = ("" if entry.policy.variant != "random_rate"
                         or entry.policy.rate is not None
                         else " (rate matched at compare time)")
            print(f"policy {entry.name!r} (decision seed {entry.decision_seed})"
                  f"{rate_note}:")
            _echo_policy(entry.policy, dim, indent="  ")
        reg = spec.regularization
        scope = spec.estimator_scope
        interval = spec.metrics_interval
    print(f"regularization: jitter={reg.jitter!r} shrinkage={reg.shrinkage}"
          + (f" lam={reg.shrinkage_lam!r}" if reg.shrinkage == "fixed" else ""))
    print(f"estimator scope: {scope}")
    print(f"metrics interval: {interval}")
    print(f"out dir: {spec.out_dir}")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fcdc",
        description="Feedback-controlled data collection: run, compare and "
                    "validate stream-selection policies.")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    helps = {
        "run": "execute one policy and write its artifacts",
        "compare": "execute several policies on the identical stream",
        "validate": "check a config file and echo resolved defaults",
    }
    for name in ("run", "compare", "validate"):
        p = sub.add_parser(name, help=helps[name])
        p.add_argument("--config", required=True, metavar="PATH",
                       help="JSON config file or packaged config name "
                            f"({', '.join(packaged_config_names())})")
        p.add_argument("--seed", type=int, default=None, metavar="N",
                       help="override stream and decision seeds")
        p.add_argument("--out", default=None, metavar="DIR",
                       help="override the output directory")
    return parser


_HANDLERS = {"run": cmd_run, "compare": cmd_compare, "validate": cmd_validate}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _HANDLERS[args.command](args.config, seed=args.seed, out=args.out)
    except (SingularCovariance, InsufficientSamples, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    except FcdcError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
