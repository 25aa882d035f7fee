#!/usr/bin/env python3

import argparse
import logging
import os
from dataclasses import replace
from pathlib import Path
from typing import List, Optional

from rich.console import Console
from rich.table import Table

from .campaign import load_config, mean_losses, read_results, run_campaign
from .core import summarize
from .datasets import SYNTHETIC_GENERATORS, dataset_name, generate_synthetic, load_dataset, write_csv
from .report import build_comparisons, emit_radar_svg, metric_tables, render_console, render_summary, write_reports
from .stats import write_metric_table


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog='rrcbench',
        description='Benchmark RRC/SCM-corrected classifiers and compare them statistically',
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    parser.add_argument('-v', '--verbose', action='store_true', help='Log debug messages')
    groups = parser.add_subparsers(dest='group', required=True)

    bench = groups.add_parser('bench', help='Run and analyse benchmark campaigns')
    bench_commands = bench.add_subparsers(dest='command', required=True)

    run = bench_commands.add_parser('run', help='Run a campaign from a config file',
                                    formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    run.add_argument('config', help='Campaign config (key = value lines or JSON)')
    run.add_argument('--output', metavar='DIR', default=None,
                     help='Results directory (overrides the config "output" key)')
    run.add_argument('--workers', type=int, default=None,
                     help='Worker processes (overrides the config "workers" key)')

    summarize_cmd = bench_commands.add_parser('summarize', help='Mean losses and per-criterion metric tables',
                                              formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    summarize_cmd.add_argument('results', help='Results directory or results.csv')

    compare = bench_commands.add_parser('compare', help='Friedman, Wilcoxon and Bergmann-Hommel comparison',
                                        formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    compare.add_argument('results', help='Results directory or results.csv')
    compare.add_argument('--alpha', type=float, default=0.05, help='Significance level')
    compare.add_argument('--output', metavar='DIR', default=None,
                         help='Directory for the CSV/HTML reports (default: the results directory)')

    radar = bench_commands.add_parser('radar', help='Radar plot of average ranks per classifier kind',
                                      formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    radar.add_argument('results', help='Results directory or results.csv')
    radar.add_argument('--output', metavar='DIR', default=None,
                       help='Directory for the SVG files (default: the results directory)')

    data = groups.add_parser('data', help='Inspect or generate datasets')
    data_commands = data.add_subparsers(dest='command', required=True)
    info = data_commands.add_parser('info', help='Print |S|, d, C and IR of datasets',
                                    formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    info.add_argument('paths', nargs='+', help='ARFF/CSV files or synthetic:<name>')
    info.add_argument('--class-attribute', default=None, help='Class attribute name (default: last)')
    generate = data_commands.add_parser('generate', help='Write the synthetic benchmark sets as CSV',
                                        formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    generate.add_argument('directory', help='Target directory')
    generate.add_argument('--names', nargs='+', choices=sorted(SYNTHETIC_GENERATORS),
                          default=sorted(SYNTHETIC_GENERATORS), help='Sets to generate')
    return parser


def _results_dir(results: str) -> str:
    return results if os.path.isdir(results) else os.path.dirname(results) or '.'


def _bench_run(args, parser: argparse.ArgumentParser) -> int:
    try:
        config = load_config(Path(args.config))
    except ValueError as e:
        parser.error(str(e))
    if args.workers is not None:
        if args.workers < 1:
            parser.error('--workers must be at least 1')
        config = replace(config, workers=args.workers)
    outcome = run_campaign(config, Path(args.output) if args.output else None)
    if not outcome.ok:
        logging.error("%d dataset/kind pair(s) failed: %s", len(outcome.failures),
                      ", ".join(f"{d}/{k}" for d, k in outcome.failures))
        return 1
    return 0


def _bench_summarize(args) -> int:
    results = read_results(Path(args.results))
    render_summary(mean_losses(results))
    tables_dir = Path(_results_dir(args.results)) / 'tables'
    for kind in sorted(results['kind'].unique()):
        for table in metric_tables(results, kind):
            path = write_metric_table(table, tables_dir / kind)
            logging.info("Metric table written to %s", path)
    return 0


def _bench_compare(args) -> int:
    results = read_results(Path(args.results))
    reports = build_comparisons(results, args.alpha)
    render_console(reports)
    for report in reports:
        write_reports(report, args.output or _results_dir(args.results))
    return 0


def _bench_radar(args) -> int:
    reports = build_comparisons(read_results(Path(args.results)))
    for report in reports:
        emit_radar_svg(report, args.output or _results_dir(args.results))
    return 0


def _data_info(args) -> int:
    table = Table(title="Dataset characteristics")
    for column in ("dataset", "|S|", "d", "C", "IR", "dropped"):
        table.add_column(column, justify="left" if column == "dataset" else "right")
    status = 0
    for path in args.paths:
        try:
            dataset = load_dataset(path, class_attribute=args.class_attribute)
            summary = summarize(dataset)
        except (OSError, ValueError) as e:
            logging.error("%s: %s", path, e)
            status = 1
            continue
        table.add_row(dataset_name(path), str(summary.instance_count), str(summary.dimensionality),
                      str(summary.class_count), f"{summary.imbalance_ratio:.2f}", str(dataset.dropped_rows))
    Console().print(table)
    return status


def _data_generate(args) -> int:
    for name in args.names:
        path = write_csv(generate_synthetic(name), Path(args.directory) / f"{name}.csv")
        logging.info("Dataset written to %s", path)
    return 0


def main(argv: Optional[List[str]] = None) -> int:
    """CLI entry point: `bench run|summarize|compare|radar` and `data info|generate`."""
    parser = _build_parser()
    args = parser.parse_args(argv)

    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO, format='%(levelname)s: %(message)s')

    if args.group == 'bench':
        if args.command == 'run':
            return _bench_run(args, parser)
        if args.command == 'summarize':
            return _bench_summarize(args)
        if args.command == 'compare':
            return _bench_compare(args)
        return _bench_radar(args)
    if args.command == 'info':
        return _data_info(args)
    return _data_generate(args)
