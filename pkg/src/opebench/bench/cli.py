"""Command line front end.

Usage::

    ope-bench run <figure1|multi-policy|ea-bias|dominance>
                  [--config FILE] [--seed U64] [--reps R]
                  [--out PATH] [--format csv|json] [--plot [PATH]]

Exit status: 0 on success, 1 on configuration errors, 2 on I/O errors.
``--reps`` sets the natural replication knob of the chosen experiment
(replications, episodes, or scanned instances).  ``--plot`` renders the
standard figure for the experiment next to the report.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from ..errors import ConfigInvalid, IoFailure, OpeBenchError
from .config import ExperimentConfig, load_config_file
from .report import emit_report
from .runners import run

_KIND_TOKENS = {
    "figure1": "figure1",
    "multi-policy": "multi_policy",
    "ea-bias": "ea_bias",
    "dominance": "dominance_scan",
}

#: Which config field ``--reps`` maps to, per experiment kind.
_REPS_FIELD = {
    "figure1": "reps",
    "multi_policy": "reps",
    "ea_bias": "episodes",
    "dominance_scan": "instances",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ope-bench",
        description="Benchmark off-policy value estimators on synthetic logged data.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    run_p = sub.add_parser("run", help="run one experiment and emit a report")
    run_p.add_argument("kind", choices=sorted(_KIND_TOKENS), help="experiment to run")
    run_p.add_argument("--config", help="flat key = value config file")
    run_p.add_argument("--seed", type=int, help="master seed (non-negative integer)")
    run_p.add_argument("--reps", type=int, help="replications / episodes / instances")
    run_p.add_argument("--out", help="report path (default: stdout)")
    run_p.add_argument("--format", choices=("csv", "json"), help="report format (default csv)")
    run_p.add_argument(
        "--plot",
        nargs="?",
        const="",
        default=None,
        metavar="PATH",
        help="also render a figure (default path: report path with .png suffix)",
    )
    return parser


def _build_config(args: argparse.Namespace) -> ExperimentConfig:
    kind = _KIND_TOKENS[args.kind]
    cfg = ExperimentConfig.defaults(kind)
    if args.config:
        cfg = load_config_file(args.config, cfg)
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.reps is not None:
        overrides[_REPS_FIELD[kind]] = args.reps
    if args.out is not None:
        overrides["out"] = args.out
    if args.format is not None:
        overrides["format"] = args.format
    if args.plot is not None:
        overrides["plot"] = args.plot
    cfg = replace(cfg, **overrides)
    if cfg.plot == "":
        if cfg.out is None:
            raise ConfigInvalid("--plot without a path needs --out to derive one from")
        cfg = replace(cfg, plot=str(Path(cfg.out).with_suffix(".png")))
    return cfg.validate()


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _build_config(args)
    except ConfigInvalid as exc:
        print(f"ope-bench: config error: {exc}", file=sys.stderr)
        return 1
    try:
        rows = run(cfg)
        emit_report(rows, fmt=cfg.format, path=cfg.out)
        if cfg.plot:
            from .figures import render_figure

            render_figure(rows, cfg.kind, cfg.plot)
    except IoFailure as exc:
        print(f"ope-bench: i/o error: {exc}", file=sys.stderr)
        return 2
    except ConfigInvalid as exc:
        print(f"ope-bench: config error: {exc}", file=sys.stderr)
        return 1
    except OpeBenchError as exc:
        print(f"ope-bench: error: {exc}", file=sys.stderr)
        return 1
    return 0


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
