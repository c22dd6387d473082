"""Command-line entry point: declare an experiment, run it, inspect the
component registries, or re-render a comparison plot from saved records.

Commands
--------
``run``      execute a configuration (JSON file plus flag overrides) and
             write records, summary, plots, and a manifest into the output
             directory.
``list``     print every registered model, strategy, stream, and detector.
``compare``  rebuild the comparison SVG from an existing run directory.

Exit codes: 0 on success, 1 when any job failed, 2 on configuration or
registry errors (nothing is written in that case).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path
from typing import Dict, List, Optional, Tuple

from .core import ConfigError, OlstreamError, RegistryError
from .evaluate import (
    DETECTOR_REGISTRY,
    MODEL_REGISTRY,
    STRATEGY_REGISTRY,
    STREAM_REGISTRY,
    ExperimentConfig,
    JobResult,
    MetricSeries,
    macro_f1,
    resolve,
    run_experiment,
    summarize,
    windowed_accuracy,
    windowed_mae,
    windowed_query_rate,
)
from .report import (
    ComparisonSpec,
    read_records_csv,
    render_comparison_svg,
    write_manifest,
    write_records_csv,
    write_summary,
)

ENV_OUT_DIR = "AWESOME_OL_OUT"
DEFAULT_WINDOW = 500

CONFIG_KEYS = {"n_samples", "n_pretrain", "n_rounds", "seed", "out_dir",
               "models", "streams", "strategy"}


def _normalize_component(item, kind: str) -> Tuple[str, dict]:
    if isinstance(item, str):
        return item, {}
    if isinstance(item, dict):
        unknown = set(item) - {"name", "params"}
        if unknown:
            raise ConfigError(f"unknown {kind} key(s): {', '.join(sorted(unknown))}")
        if "name" not in item:
            raise ConfigError(f"{kind} entry needs a 'name'")
        params = item.get("params", {})
        if not isinstance(params, dict):
            raise ConfigError(f"{kind} params must be an object")
        return str(item["name"]), dict(params)
    raise ConfigError(f"{kind} entries must be names or objects, got {item!r}")


def _resolve_paths(params: dict, base: Path) -> dict:
    # Relative CSV paths in a config file are taken relative to the file.
    if "path" in params and not Path(params["path"]).is_absolute():
        params = dict(params)
        params["path"] = str((base / params["path"]).resolve())
    return params


def parse_config(config_path: Optional[str], overrides: Dict) -> ExperimentConfig:
    """Merge a JSON config file with flag overrides into a validated config.

    Flags win over file values.  Unknown file keys are rejected.  The output
    directory falls back to the AWESOME_OL_OUT environment variable.
    """
    raw: Dict = {}
    base = Path(".")
    if config_path:
        path = Path(config_path)
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(
                f"malformed JSON in {path} at line {exc.lineno}, "
                f"column {exc.colno}: {exc.msg}") from exc
        if not isinstance(raw, dict):
            raise ConfigError("config file must contain a JSON object")
        unknown = set(raw) - CONFIG_KEYS
        if unknown:
            raise ConfigError(f"unknown config key(s): {', '.join(sorted(unknown))}")
        base = path.parent

    merged = dict(raw)
    for key, value in overrides.items():
        if value is not None:
            merged[key] = value

    for required in ("n_samples", "n_pretrain", "models", "streams"):
        if required not in merged:
            raise ConfigError(f"missing required config key {required!r}")

    models = [_normalize_component(m, "model") for m in merged["models"]]
    streams = [
        (name, _resolve_paths(params, base))
        for name, params in (_normalize_component(s, "stream") for s in merged["streams"])
    ]

    strategy = merged.get("strategy", "supervised")
    if isinstance(strategy, str) and strategy.lower() == "supervised":
        strategy = ("Supervised", {})
    else:
        strategy = _normalize_component(strategy, "strategy")

    out_dir = merged.get("out_dir") or os.environ.get(ENV_OUT_DIR)

    try:
        config = ExperimentConfig(
            n_samples=int(merged["n_samples"]),
            n_pretrain=int(merged["n_pretrain"]),
            models=models,
            streams=streams,
            strategy=strategy,
            n_rounds=int(merged.get("n_rounds", 1)),
            seed=int(merged.get("seed", 42)),
            out_dir=Path(out_dir) if out_dir else None,
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid config value: {exc}") from exc
    return config.validate()


def _config_echo(config: ExperimentConfig) -> Dict[str, str]:
    # out_dir is intentionally omitted: rerunning the same experiment into a
    # fresh directory must produce an identical manifest.
    return {
        "n_samples": str(config.n_samples),
        "n_pretrain": str(config.n_pretrain),
        "n_rounds": str(config.n_rounds),
        "seed": str(config.seed),
        "models": ";".join(f"{n}{json.dumps(p, sort_keys=True)}" for n, p in config.models),
        "streams": ";".join(f"{n}{json.dumps(p, sort_keys=True)}" for n, p in config.streams),
        "strategy": f"{config.strategy[0]}{json.dumps(config.strategy[1], sort_keys=True)}",
    }


def _job_file_name(result: JobResult) -> str:
    job = result.job
    return f"records__{job.model}__{job.stream}__round{job.round_index}.csv"


def _comparison_spec(results: List[JobResult], window: int) -> Optional[ComparisonSpec]:
    """Average the per-round metric curves of each (model, stream) pair."""
    groups: Dict[Tuple[str, str], List[JobResult]] = {}
    for result in results:
        if result.ok and result.records:
            groups.setdefault((result.job.model, result.job.stream), []).append(result)
    if not groups:
        return None

    classification = all(
        g[0].job.schema.is_classification for g in groups.values())
    metric = windowed_accuracy if classification else windowed_mae
    multi_stream = len({key[1] for key in groups}) > 1

    series = []
    peak = 0.0
    for color, ((model, stream), group) in enumerate(sorted(groups.items())):
        curves = [metric(result.records, window) for result in group]
        steps = curves[0].steps
        values = [
            sum(curve.values[i] for curve in curves) / len(curves)
            for i in range(len(steps))
        ]
        label = f"{model} on {stream}" if multi_stream else model
        series.append((label, MetricSeries(steps, list(values)), color))
        peak = max(peak, max(values))

    if classification:
        y_label, y_range = "accuracy", (0.0, 1.0)
    else:
        y_label, y_range = "mean absolute error", (0.0, max(1e-9, peak * 1.1))
    return ComparisonSpec(series=series, title="model comparison",
                          y_label=y_label, y_range=y_range)


def _spend_spec(results: List[JobResult], window: int) -> Optional[ComparisonSpec]:
    groups: Dict[Tuple[str, str], List[JobResult]] = {}
    for result in results:
        if result.ok and result.records:
            groups.setdefault((result.job.model, result.job.stream), []).append(result)
    if not groups:
        return None
    multi_stream = len({key[1] for key in groups}) > 1
    series = []
    for color, ((model, stream), group) in enumerate(sorted(groups.items())):
        curves = [windowed_query_rate(result.records, window) for result in group]
        steps = curves[0].steps
        values = [
            sum(curve.values[i] for curve in curves) / len(curves)
            for i in range(len(steps))
        ]
        label = f"{model} on {stream}" if multi_stream else model
        series.append((label, MetricSeries(steps, list(values)), color))
    return ComparisonSpec(series=series, title="label query rate",
                          y_label="query rate", y_range=(0.0, 1.0))


def cmd_run(args) -> int:
    overrides = {
        "n_samples": args.samples,
        "n_pretrain": args.pretrain,
        "n_rounds": args.rounds,
        "seed": args.seed,
        "out_dir": args.out,
        "models": args.models.split(",") if args.models else None,
        "streams": args.streams.split(",") if args.streams else None,
        "strategy": args.strategy,
    }
    try:
        config = parse_config(args.config, overrides)
        if config.out_dir is None:
            raise ConfigError(
                f"no output directory: pass --out, set out_dir in the config, "
                f"or set {ENV_OUT_DIR}")
        resolve(config)  # fail fast before touching the filesystem
    except (ConfigError, RegistryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    results = run_experiment(config, n_jobs=args.jobs)

    out_dir = config.out_dir
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    job_statuses = []
    for result in results:
        job = result.job
        name = f"{job.model}|{job.stream}|round{job.round_index}"
        if result.ok:
            job_statuses.append((name, "ok"))
            records_path = out_dir / _job_file_name(result)
            write_records_csv(result.records, records_path)
            written.append(records_path)
        else:
            job_statuses.append((name, f"failed ({result.error})"))

    rows = summarize(results)
    if rows:
        summary_path = out_dir / "summary.csv"
        write_summary(rows, summary_path)
        written.append(summary_path)

    spec = _comparison_spec(results, DEFAULT_WINDOW)
    if spec is not None:
        svg_path = out_dir / "comparison.svg"
        render_comparison_svg(spec, svg_path)
        written.append(svg_path)
    if config.strategy[0] != "Supervised":
        spend = _spend_spec(results, DEFAULT_WINDOW)
        if spend is not None:
            spend_path = out_dir / "spend.svg"
            render_comparison_svg(spend, spend_path)
            written.append(spend_path)

    write_manifest(out_dir / "manifest.txt", _config_echo(config), job_statuses, written)

    print(f"{'model':<16} {'stream':<12} {'rounds':>6} {'mean_acc':>10} "
          f"{'std_acc':>9} {'macro_f1':>9} {'spend':>7}")
    for row in sorted(rows, key=lambda r: (r.model, r.stream)):
        print(f"{row.model:<16} {row.stream:<12} {row.rounds:>6} "
              f"{row.mean_score:>10.4f} {row.std_score:>9.4f} "
              f"{row.mean_macro_f1:>9.4f} {row.spend:>7.4f}")
    failed = [name for name, status in job_statuses if status != "ok"]
    if failed:
        print(f"{len(failed)} job(s) failed:", file=sys.stderr)
        for name, status in job_statuses:
            if status != "ok":
                print(f"  {name}: {status}", file=sys.stderr)
        return 1
    print(f"results written to {out_dir}")
    return 0


def _caps_text(caps) -> str:
    parts = ["regression" if caps.supports_regression else "classification"]
    if caps.supports_multiclass:
        parts.append("multi-class")
    if caps.drift_adaptive:
        parts.append("drift-adaptive")
    return ", ".join(parts)


def cmd_list(args) -> int:
    print("models:")
    for name in sorted(MODEL_REGISTRY):
        entry = MODEL_REGISTRY[name]
        print(f"  {name:<16} {_caps_text(entry.caps):<42} {entry.summary}")
    print("strategies:")
    for name in sorted(STRATEGY_REGISTRY):
        print(f"  {name:<16} {STRATEGY_REGISTRY[name].summary}")
    print("streams:")
    for name in sorted(STREAM_REGISTRY):
        print(f"  {name:<16} {STREAM_REGISTRY[name].summary}")
    print("detectors:")
    for name in sorted(DETECTOR_REGISTRY):
        print(f"  {name:<16} {DETECTOR_REGISTRY[name].summary}")
    return 0


def cmd_compare(args) -> int:
    run_dir = Path(args.dir)
    record_files = sorted(run_dir.glob("records__*.csv"))
    if not record_files:
        print(f"error: no records__*.csv files in {run_dir}", file=sys.stderr)
        return 2
    groups: Dict[Tuple[str, str], List] = {}
    for path in record_files:
        for record in read_records_csv(path):
            groups.setdefault((record.model, record.stream), []).append(record)

    multi_stream = len({key[1] for key in groups}) > 1
    series = []
    for color, ((model, stream), records) in enumerate(sorted(groups.items())):
        by_round: Dict[int, List] = {}
        for record in records:
            by_round.setdefault(record.round_index, []).append(record)
        curves = [
            windowed_accuracy(sorted(recs, key=lambda r: r.step), args.window)
            for _, recs in sorted(by_round.items())
        ]
        steps = curves[0].steps
        values = [
            sum(curve.values[i] for curve in curves) / len(curves)
            for i in range(len(steps))
        ]
        label = f"{model} on {stream}" if multi_stream else model
        series.append((label, MetricSeries(steps, values), color))

    out_path = Path(args.out) if args.out else run_dir / "comparison.svg"
    render_comparison_svg(
        ComparisonSpec(series=series, title="model comparison"), out_path)
    print(f"wrote {out_path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="olstream",
        description="Run and compare incremental learners on drifting streams.")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment configuration")
    run.add_argument("--config", help="JSON configuration file")
    run.add_argument("--out", help="output directory")
    run.add_argument("--seed", type=int)
    run.add_argument("--samples", type=int, help="stream length cap")
    run.add_argument("--pretrain", type=int, help="pretraining batch size")
    run.add_argument("--rounds", type=int, help="independent seeded repetitions")
    run.add_argument("--models", help="comma-separated model names")
    run.add_argument("--streams", help="comma-separated stream names")
    run.add_argument("--strategy", help="query strategy name or 'supervised'")
    run.add_argument("--jobs", type=int, default=1, help="parallel job limit")
    run.set_defaults(func=cmd_run)

    lst = sub.add_parser("list", help="list registered components")
    lst.set_defaults(func=cmd_list)

    compare = sub.add_parser("compare", help="re-render a comparison plot")
    compare.add_argument("dir", help="run directory containing records__*.csv")
    compare.add_argument("--out", help="target SVG path")
    compare.add_argument("--window", type=int, default=DEFAULT_WINDOW)
    compare.set_defaults(func=cmd_compare)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except OlstreamError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
