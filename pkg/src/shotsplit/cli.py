"""Command-line entry point.

    shotsplit run --experiment SharedPoint --out results/shared [--seeds 20] [--benchmarks MackeyGlass,Lorenz]
    shotsplit analyze --record rec.csv --protocol Split [--k auto|INT] [--series series.csv] --out results/rec
    shotsplit single --config run.json --out results/one

Exit codes: 0 success, 1 configuration error, 2 runtime error, 3 partial
completion (rerun the same command to resume).
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from pathlib import Path

from .harness.experiments import EXPERIMENTS, ExperimentSpec, PartialRunError, run_experiment
from .harness.records import RecordFormatError, import_series, import_shot_record
from .protocol import METHODS, RunConfig, budget_for_record, evaluate_method, prepare_from_record, run_pipeline

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME, EXIT_PARTIAL = 0, 1, 2, 3

log = logging.getLogger("shotsplit")


class ConfigError(ValueError):
    pass


def _k_arg(value):
    if value == "auto":
        return None
    try:
        return int(value)
    except ValueError:
        raise argparse.ArgumentTypeError("--k must be 'auto' or an integer") from None


def build_parser():
    p = argparse.ArgumentParser(prog="shotsplit", description="Finite-shot QRC shot-organization experiments.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a registered experiment")
    run.add_argument("--experiment", required=True, choices=sorted(EXPERIMENTS))
    run.add_argument("--out", required=True, type=Path)
    run.add_argument("--seeds", type=int, default=20, help="use seeds 1..N")
    run.add_argument("--benchmarks", default="MackeyGlass,Lorenz,Narma10", help="comma-separated task names")
    run.add_argument("--workers", type=int, default=1)

    an = sub.add_parser("analyze", help="analyze an imported shot record")
    an.add_argument("--record", required=True, type=Path)
    an.add_argument("--protocol", required=True, choices=METHODS)
    an.add_argument("--k", type=_k_arg, default=None, help="'auto' (validation) or a fixed group size")
    an.add_argument("--series", type=Path, help="raw series CSV (t,value) with T+1 samples")
    an.add_argument("--lam", type=float, default=10.0)
    an.add_argument("--leak", type=float, default=0.2)
    an.add_argument("--window", type=int, default=10)
    an.add_argument("--washout", type=int, default=30)
    an.add_argument("--out", required=True, type=Path)

    single = sub.add_parser("single", help="run one configuration from a JSON file")
    single.add_argument("--config", required=True, type=Path)
    single.add_argument("--out", required=True, type=Path)
    return p


def _write_result(result, out_dir):
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / "result.json"
    path.write_text(json.dumps(dataclasses.asdict(result), indent=2, default=str) + "\n")
    return path


def cmd_run(args):
    try:
        spec = ExperimentSpec(
            id=args.experiment,
            out_dir=args.out,
            benchmarks=tuple(b.strip() for b in args.benchmarks.split(",") if b.strip()),
            seeds=tuple(range(1, args.seeds + 1)),
            workers=args.workers,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    table = run_experiment(spec)
    print(f"{spec.id}: {len(table.rows)} rows -> {spec.out_dir}")


def cmd_analyze(args):
    try:
        record = import_shot_record(args.record)
        series = import_series(args.series) if args.series else None
    except (RecordFormatError, OSError) as exc:
        raise ConfigError(str(exc)) from None
    try:
        config = RunConfig(
            task=record.task,
            n_qubits=record.n_qubits,
            leak=args.leak,
            window=args.window,
            lam=args.lam,
            budget=budget_for_record(record, washout=args.washout),
            method=args.protocol,
            k=args.k,
        )
        data = prepare_from_record(record, config, series)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    result = evaluate_method(data, config, args.protocol, args.k)
    path = _write_result(result, args.out)
    print(f"{args.protocol} k={result.k_selected} test NRMSE={result.nrmse_test:.4f} -> {path}")


def cmd_single(args):
    try:
        config = RunConfig.from_dict(json.loads(args.config.read_text()))
    except (OSError, ValueError, TypeError) as exc:
        raise ConfigError(f"bad config {args.config}: {exc}") from None
    result = run_pipeline(config)
    path = _write_result(result, args.out)
    print(f"{config.method} k={result.k_selected} test NRMSE={result.nrmse_test:.4f} -> {path}")


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    handler = {"run": cmd_run, "analyze": cmd_analyze, "single": cmd_single}[args.command]
    try:
        handler(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except PartialRunError as exc:
        print(f"partial completion: {exc}", file=sys.stderr)
        return EXIT_PARTIAL
    except Exception as exc:  # noqa: BLE001
        log.debug("runtime failure", exc_info=True)
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
