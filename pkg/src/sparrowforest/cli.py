"""Command-line entry point.

Subcommands: stats, preprocess, tune, train, evaluate, bench, report.
Exit codes: 0 success, 1 I/O error, 2 schema/config error, 3 runtime
(optimizer or training) failure. All artifacts land under --output.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import benchfns, tuner
from . import dataset as ds
from . import forest as rf
from .errors import (
    ConfigError,
    DataError,
    ModelFormatError,
    OptimizationError,
    SparrowForestError,
)
from .issa import IssaConfig
from .ssa import SsaConfig

EXIT_OK = 0
EXIT_IO = 1
EXIT_SCHEMA = 2
EXIT_RUNTIME = 3

_TOP_KEYS = {
    "input_csv",
    "output_dir",
    "seed",
    "train_fraction",
    "folds",
    "threads",
    "optimizer",
    "forest",
}
_OPT_KEYS = {
    "population_size",
    "max_iterations",
    "producer_fraction",
    "scout_fraction",
    "safety_threshold",
    "chaos_seed",
    "weight_max",
    "weight_min",
    "cauchy_scale",
    "ils_restarts",
    "acceptance_temperature",
}
_FOREST_KEYS = {
    "n_trees",
    "max_depth",
    "split_criterion",
    "min_samples_leaf",
    "mtry",
    "feature_mask",
}


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: config root must be an object")
    for section, allowed in (
        (doc, _TOP_KEYS),
        (doc.get("optimizer", {}), _OPT_KEYS),
        (doc.get("forest", {}), _FOREST_KEYS),
    ):
        unknown = set(section) - allowed
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    return doc


def _experiment_config(doc: dict, args) -> tuner.ExperimentConfig:
    seed = args.seed if args.seed is not None else doc.get("seed", 0)
    threads = args.threads if getattr(args, "threads", None) is not None else doc.get("threads", 1)
    opt = doc.get("optimizer", {})
    fo = doc.get("forest", {})
    base = SsaConfig(
        population_size=opt.get("population_size", 20),
        max_iterations=opt.get("max_iterations", 40),
        producer_fraction=opt.get("producer_fraction", 0.2),
        scout_fraction=opt.get("scout_fraction", 0.1),
        safety_threshold=opt.get("safety_threshold", 0.8),
        seed=seed,
    )
    issa = IssaConfig(
        base=base,
        chaos_seed=opt.get("chaos_seed", 0.7),
        weight_max=opt.get("weight_max", 0.9),
        weight_min=opt.get("weight_min", 0.4),
        cauchy_scale=opt.get("cauchy_scale", 0.1),
        ils_restarts=opt.get("ils_restarts", 5),
        acceptance_temperature=opt.get("acceptance_temperature", 0.01),
    )
    forest_params = _hyperparams_from_doc(fo)
    return tuner.ExperimentConfig(
        seed=seed,
        train_fraction=doc.get("train_fraction", 0.7),
        folds=doc.get("folds", 5),
        n_trees=fo.get("n_trees", 100),
        threads=threads,
        forest=forest_params,
        ssa=base,
        issa=issa,
    )


def _hyperparams_from_doc(fo: dict) -> rf.HyperParams:
    mask = fo.get("feature_mask")
    return rf.HyperParams(
        n_trees=fo.get("n_trees", 100),
        max_depth=fo.get("max_depth", 20),
        split_criterion=fo.get("split_criterion", "gini"),
        min_samples_leaf=fo.get("min_samples_leaf", 1),
        mtry=fo.get("mtry"),
        feature_mask=None if mask is None else tuple(bool(b) for b in mask),
    )


def _out_dir(args, doc: dict) -> Path:
    out = args.output if getattr(args, "output", None) else doc.get("output_dir", ".")
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _input_csv(args, doc: dict) -> str:
    csv_path = getattr(args, "csv", None) or doc.get("input_csv")
    if not csv_path:
        raise ConfigError("no input CSV given (positional argument or config input_csv)")
    return csv_path


def _clean(d: ds.Dataset) -> tuple[ds.Dataset, dict]:
    deduped = ds.deduplicate(d)
    cleaned = ds.remove_outliers_3sigma(deduped)
    counts = {
        "rows_in": len(d),
        "duplicates_removed": len(d) - len(deduped),
        "outliers_removed": len(deduped) - len(cleaned),
        "rows_out": len(cleaned),
    }
    return cleaned, counts


def cmd_stats(args) -> int:
    doc = _load_config(args.config)
    data = ds.load_csv(_input_csv(args, doc))
    text = ds.stats_to_json(ds.describe(data))
    print(text)
    out = _out_dir(args, doc)
    (out / "stats.json").write_text(text + "\n", encoding="utf-8")
    return EXIT_OK


def cmd_preprocess(args) -> int:
    doc = _load_config(args.config)
    data = ds.load_csv(_input_csv(args, doc))
    cleaned, counts = _clean(data)
    out = _out_dir(args, doc)
    ds.write_csv(cleaned, out / "cleaned.csv")
    (out / "cleaned_sidecar.json").write_text(json.dumps(counts, indent=2) + "\n", encoding="utf-8")
    print(json.dumps(counts, indent=2))
    return EXIT_OK


def cmd_tune(args) -> int:
    doc = _load_config(args.config)
    config = _experiment_config(doc, args)
    data = ds.load_csv(_input_csv(args, doc))
    cleaned, _ = _clean(data)
    out = _out_dir(args, doc)

    report, model = tuner.run_experiment(cleaned, args.method, config)
    if report.trace is not None:
        trace_name = f"trace_{args.method}.csv"
        report.trace.write_csv(out / trace_name)
        report.trace_csv = trace_name
    rf.save_forest(model, out / f"model_{args.method}.json")
    report_path = out / f"report_{args.method}.json"
    report_path.write_text(json.dumps(report.to_dict(), indent=2) + "\n", encoding="utf-8")
    print(
        f"{args.method}: train {report.train_accuracy:.3f}, test {report.test_accuracy:.3f} "
        f"({report.optimizer_evaluations} fitness evaluations)"
    )
    return EXIT_OK


def cmd_train(args) -> int:
    doc = _load_config(args.config)
    seed = args.seed if args.seed is not None else doc.get("seed", 0)
    threads = args.threads if args.threads is not None else doc.get("threads", 1)
    params = _hyperparams_from_doc(doc.get("forest", {}))
    data = ds.load_csv(_input_csv(args, doc))
    X, y = ds.encode(data)
    model = rf.fit(X, y, params, seed, threads=threads)
    out = _out_dir(args, doc)
    rf.save_forest(model, out / "model.json")
    _, acc = rf.evaluate(model, X, y)
    print(f"trained {params.n_trees} trees; training accuracy {acc:.3f}")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    model = rf.load_forest(args.model)
    data = ds.load_csv(args.csv)
    X, y = ds.encode(data)
    cm, acc = rf.evaluate(model, X, y)
    print(json.dumps({"accuracy": acc, "confusion": cm.to_lists()}, indent=2))
    return EXIT_OK


def cmd_bench(args) -> int:
    doc = _load_config(args.config)
    out = _out_dir(args, doc)
    trace_dir = out / "bench_traces"
    trace_dir.mkdir(exist_ok=True)
    pop = doc.get("optimizer", {}).get("population_size", 30)
    runners = [
        benchfns.make_ssa_runner(args.budget, pop),
        benchfns.make_issa_runner(args.budget, pop),
        benchfns.make_random_runner(args.budget),
    ]
    objectives = [make(args.dimension) for make in benchfns.DEFAULT_OBJECTIVES]
    seeds = list(range(args.seeds))
    rows, summary = benchfns.run_suite(runners, objectives, seeds, args.budget, trace_dir)
    benchfns.write_results_csv(rows, out / "bench_results.csv")
    for (opt, obj), s in summary.items():
        print(f"{opt:>8} on {obj:<12} median {s['median']:.6g}  min {s['min']:.6g}  max {s['max']:.6g}")
    return EXIT_OK


def cmd_report(args) -> int:
    reports = []
    for path in args.reports:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
        reports.append(_report_from_dict(doc))
    comparison = tuner.compare(reports)
    out = _out_dir(args, {})
    table = comparison.text_table()
    (out / "comparison.txt").write_text(table, encoding="utf-8")
    (out / "comparison.json").write_text(
        json.dumps(comparison.to_dict(), indent=2) + "\n", encoding="utf-8"
    )
    print(table, end="")
    return EXIT_OK


def _report_from_dict(doc: dict) -> tuner.MethodReport:
    try:
        return tuner.MethodReport(
            method=doc["method"],
            train_accuracy=doc["train_accuracy"],
            test_accuracy=doc["test_accuracy"],
            train_confusion=doc["train_confusion"],
            test_confusion=doc["test_confusion"],
            hyperparams=doc["hyperparams"],
            best_cv_fitness=doc.get("best_cv_fitness"),
            optimizer_evaluations=doc.get("optimizer_evaluations", 0),
            seeds=doc.get("seeds", {}),
            metadata=doc.get("metadata", {}),
            wall_time_s=doc.get("timing", {}).get("wall_time_s", 0.0),
            trace_csv=doc.get("trace_csv"),
        )
    except KeyError as exc:
        raise ConfigError(f"report document missing key {exc}") from exc


def _add_common(p: argparse.ArgumentParser, *, method: bool = False) -> None:
    p.add_argument("--config", help="JSON run configuration")
    p.add_argument("--seed", type=int, default=None, help="master seed (overrides config)")
    p.add_argument("--threads", type=int, default=None, help="library parallelism cap")
    p.add_argument("--output", help="output directory (default from config, else .)")
    if method:
        p.add_argument(
            "--method",
            choices=list(tuner.METHODS),
            default="rf",
            help="which pipeline variant to run",
        )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sparrowforest",
        description="VR immersion prediction: random forest tuned by sparrow search",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("stats", help="summary statistics of a CSV, as JSON")
    p.add_argument("csv", nargs="?", help="input CSV (or config input_csv)")
    _add_common(p)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("preprocess", help="deduplicate, then drop 3-sigma outliers")
    p.add_argument("csv", nargs="?", help="input CSV (or config input_csv)")
    _add_common(p)
    p.set_defaults(func=cmd_preprocess)

    p = sub.add_parser("tune", help="run one method end to end and write its report")
    p.add_argument("csv", nargs="?", help="input CSV (or config input_csv)")
    _add_common(p, method=True)
    p.set_defaults(func=cmd_tune)

    p = sub.add_parser("train", help="fit a forest from explicit hyperparameters")
    p.add_argument("csv", nargs="?", help="input CSV (or config input_csv)")
    _add_common(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="score a serialized model against a CSV")
    p.add_argument("model", help="model JSON written by tune/train")
    p.add_argument("csv", help="evaluation CSV")
    _add_common(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("bench", help="compare SSA, ISSA and random search on test objectives")
    # 6030 = 30 x 201: lands within 1% of every runner's plan at population 30
    p.add_argument("--budget", type=int, default=6030, help="fitness evaluations per run")
    p.add_argument("--dimension", type=int, default=10)
    p.add_argument("--seeds", type=int, default=5, help="number of seeds (0..n-1)")
    _add_common(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("report", help="merge per-method reports into the comparison grid")
    p.add_argument("reports", nargs="+", help="report_<method>.json files")
    p.add_argument("--output", help="output directory")
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (DataError, ConfigError, ModelFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (OptimizationError, SparrowForestError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
