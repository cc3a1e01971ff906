"""Command-line front end.

Subcommands:
  run        execute a sweep described by a config file, write CSVs
  report     render one of the t1..t7 table layouts from a results directory
  reproduce  run only the cells a table needs, render it, grade it against
             the built-in reference values

Exit codes: 0 success, 1 configuration or missing-data error, 2 I/O error,
3 (reproduce only) at least one reference check failed.  Progress goes to
stderr; stdout carries only the rendered tables and check report.
"""

from __future__ import annotations

import argparse
import os
import sys

from . import reference, report
from .experiment import ConfigError, load_config, run_experiment
from .report import HISTOGRAMS_CSV, SUMMARY_CSV, ReportError, TABLE_IDS

LOW_RUNS_WARNING = 5000
DEFAULT_REPRODUCE_SEED = 20000101


def _progress(message: str) -> None:
    print(message, file=sys.stderr)


def _write_outputs(results, output_dir):
    os.makedirs(output_dir, exist_ok=True)
    report.write_histograms_csv(results, os.path.join(output_dir, HISTOGRAMS_CSV))
    report.write_summary_csv(results, os.path.join(output_dir, SUMMARY_CSV))


def cmd_run(args) -> int:
    try:
        config = load_config(args.config, args.set or ())
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 2
    results = run_experiment(config, progress=_progress, workers=args.workers)
    try:
        _write_outputs(results, config.output_dir)
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 2
    _progress(f"wrote {len(results)} cells to {config.output_dir}/")
    return 0


def cmd_report(args) -> int:
    try:
        table = report.load_result_table(args.dir)
        rendered = report.render_table(args.table, table)
    except (ReportError, OSError) as exc:
        print(f"report error: {exc}", file=sys.stderr)
        return 1
    print(rendered, end="")
    return 0


def cmd_reproduce(args) -> int:
    if args.runs < LOW_RUNS_WARNING:
        _progress(f"warning: runs={args.runs} is low; reference tolerances are "
                  f"calibrated for runs=20000 and may not be met")
    try:
        config = reference.preset_config(args.table, args.seed, args.runs, args.out)
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    results = run_experiment(config, progress=_progress, workers=args.workers)
    try:
        _write_outputs(results, config.output_dir)
        table = report.load_result_table(config.output_dir)
        rendered = report.render_table(args.table, table)
    except ReportError as exc:
        print(f"report error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 2
    print(rendered)
    checks = reference.CHECKS[args.table](results)
    failed = 0
    for check in checks:
        status = "PASS" if check.passed else "FAIL"
        if not check.passed:
            failed += 1
        print(f"{status}  {check.name}: {check.detail}")
    print(f"\n{len(checks) - failed}/{len(checks)} reference checks passed")
    return 0 if failed == 0 else 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="beliefsim",
        description="Monte Carlo robustness of uncertain-reasoning procedures "
                    "under calibration error")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a sweep from a config file")
    p_run.add_argument("--config", required=True, help="flat key=value config file")
    p_run.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="override a config key (repeatable)")
    p_run.add_argument("--workers", type=int, default=1,
                       help="process count for slice parallelism (results identical)")
    p_run.set_defaults(func=cmd_run)

    p_rep = sub.add_parser("report", help="render a table layout from CSV results")
    p_rep.add_argument("--dir", required=True, help="directory holding the CSV files")
    p_rep.add_argument("--table", required=True, choices=TABLE_IDS)
    p_rep.set_defaults(func=cmd_report)

    p_rpr = sub.add_parser("reproduce",
                           help="run a table's cells and grade against references")
    p_rpr.add_argument("--table", required=True, choices=TABLE_IDS)
    p_rpr.add_argument("--seed", type=int, default=DEFAULT_REPRODUCE_SEED)
    p_rpr.add_argument("--runs", type=int, default=20000)
    p_rpr.add_argument("--out", default="results")
    p_rpr.add_argument("--workers", type=int, default=1)
    p_rpr.set_defaults(func=cmd_reproduce)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
