"""Command-line entry point: ``mubo run | prep | report``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import yaml

from .errors import DivergenceError, MuboError
from .harness import (
    RunConfig,
    all_diverged,
    emit_report,
    format_summary,
    reaggregate,
    run_experiment,
)
from .prep import RECIPES, prepare

EXIT_OK, EXIT_CONFIG, EXIT_DIVERGED = 0, 1, 2
log = logging.getLogger("mubo")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mubo", description="Imbalanced classification with MUBO undersampling.")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment from a YAML config")
    run.add_argument("--config", required=True, type=Path)
    run.add_argument("--method", help="override the configured method (none, random_undersample, smote, mubo)")
    run.add_argument("--seed", type=int, help="override base_seed")
    run.add_argument("--runs", type=int, help="override n_runs")
    run.add_argument("--out", type=Path, help="output directory")
    run.add_argument("--workers", type=int, help="parallel runs")

    prep = sub.add_parser("prep", help="binarize a raw UCI dataset into a label CSV")
    prep.add_argument("dataset", choices=sorted(RECIPES))
    prep.add_argument("src", type=Path)
    prep.add_argument("dest", type=Path)
    prep.add_argument("--labels", type=Path, help="label file (gisette only)")

    report = sub.add_parser("report", help="re-aggregate existing runs.csv files")
    report.add_argument("paths", nargs="+", type=Path, help="run directories or runs.csv files")
    report.add_argument("--json", action="store_true", help="print the aggregate as JSON")
    return parser


def _cmd_run(args) -> int:
    cfg = RunConfig.load(args.config)
    overrides = {}
    if args.method:
        overrides["method"] = args.method
    if args.seed is not None:
        overrides["base_seed"] = args.seed
    if args.runs is not None:
        overrides["n_runs"] = args.runs
    if args.workers is not None:
        overrides["workers"] = args.workers
    if overrides:
        cfg = RunConfig(**{**cfg.to_dict(), **overrides})
    out = args.out or (Path(cfg.out_dir) if cfg.out_dir else Path("results") / f"{Path(cfg.dataset).stem}-{cfg.method}")

    report = run_experiment(cfg)
    written = emit_report(report, out)
    print(format_summary(report.aggregate))
    print(f"report written to {written['report']}")
    if all_diverged(report):
        log.error("every run diverged")
        return EXIT_DIVERGED
    return EXIT_OK


def _cmd_prep(args) -> int:
    kwargs = {"labels": args.labels} if args.dataset == "gisette" and args.labels else {}
    path = prepare(args.dataset, args.src, args.dest, **kwargs)
    print(f"wrote {path}")
    return EXIT_OK


def _cmd_report(args) -> int:
    agg = reaggregate(args.paths)
    print(json.dumps(agg, indent=2) if args.json else format_summary(agg))
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose > 1 else logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    handlers = {"run": _cmd_run, "prep": _cmd_prep, "report": _cmd_report}
    try:
        return handlers[args.command](args)
    except DivergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except (MuboError, OSError, ValueError, KeyError, yaml.YAMLError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
