"""Benchmark front end: experiment configs, runners, reports and the CLI."""

from .config import KINDS, ExperimentConfig, load_config_file
from .report import CSV_HEADER, BenchRow, emit_report, parse_csv, rows_to_csv, rows_to_json
from .runners import (
    bootstrap_percentiles,
    run,
    run_dominance_scan,
    run_ea_bias,
    run_figure1,
    run_multi_policy,
)

__all__ = [
    "KINDS",
    "ExperimentConfig",
    "load_config_file",
    "CSV_HEADER",
    "BenchRow",
    "emit_report",
    "parse_csv",
    "rows_to_csv",
    "rows_to_json",
    "bootstrap_percentiles",
    "run",
    "run_figure1",
    "run_multi_policy",
    "run_ea_bias",
    "run_dominance_scan",
]
