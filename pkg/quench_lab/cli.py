from __future__ import annotations

import argparse
import logging
import sys

import pandas as pd

from quench_lab.common import format_number, load_json_document, print_table, resolve_output_path
from quench_lab.errors import ConfigError, QuenchLabError
from quench_lab.experiments import (
    FORMATS,
    build_config,
    experiments_frame,
    read_result,
    result_metadata,
    run_experiment,
    validate_document,
    write_result,
)


logger = logging.getLogger("quench_lab")

EXIT_OK = 0
EXIT_MODULE_ERROR = 1
EXIT_CONFIG_ERROR = 2


def configure_logging(verbose: bool) -> None:
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
        force=True,
    )


def report_error(exc: BaseException) -> None:
    category = getattr(exc, "category", "io" if isinstance(exc, OSError) else "error")
    print(f"error[{category}]: {exc}", file=sys.stderr)


def display_frame(frame: pd.DataFrame, limit: int = 20) -> pd.DataFrame:
    view = frame.head(limit).copy()
    for column in view.columns:
        if pd.api.types.is_float_dtype(view[column]):
            view[column] = view[column].map(format_number)
    return view


def cmd_run(args: argparse.Namespace) -> int:
    doc = load_json_document(args.config)
    config = build_config(doc, seed=args.seed, output=args.out, fmt=args.format)
    tables = run_experiment(config, threads=args.threads)
    path = resolve_output_path(config.output, config.experiment, config.format)
    written = write_result(tables, path, config.format, result_metadata(config, tables))

    print(f"Experiment: {config.experiment}")
    print(f"Seed: {config.seed}")
    for target in written:
        print(f"Wrote: {target}")
    for name, frame in tables.items():
        print()
        print_table(display_frame(frame), title=f"[{name}]")
    return EXIT_OK


def cmd_validate(args: argparse.Namespace) -> int:
    report = validate_document(load_json_document(args.config))
    for warning in report.warnings:
        print(f"warning: {warning}")
    for error in report.errors:
        print(f"error: {error}")
    if report.ok:
        print("ok")
        return EXIT_OK
    return EXIT_CONFIG_ERROR


def cmd_list(args: argparse.Namespace) -> int:
    print_table(experiments_frame())
    return EXIT_OK


def cmd_show(args: argparse.Namespace) -> int:
    result = read_result(args.path)
    for key in ("generator", "experiment", "seed", "created"):
        print(f"{key.capitalize()}: {result.metadata.get(key, '-')}")
    for name, frame in result.tables.items():
        print()
        print_table(display_frame(frame, args.limit), title=f"[{name}]")
    return EXIT_OK


def parse_args(argv: list[str] | None = None) -> argparse.Namespace:
    parser = argparse.ArgumentParser(
        prog="quench-lab",
        description="Run quantum phase transition sweep experiments from JSON configs.",
    )
    parser.add_argument("--verbose", action="store_true", help="Log debug diagnostics to stderr.")
    subparsers = parser.add_subparsers(dest="command", required=True)

    run = subparsers.add_parser("run", help="Run one experiment and write its result tables.")
    run.add_argument("--config", required=True, help="Path to the experiment JSON config.")
    run.add_argument("--seed", type=int, default=None, help="Unsigned 64-bit seed. Overrides the config file.")
    run.add_argument("--out", default=None, help="Output path. Defaults to results/<experiment>.<format>.")
    run.add_argument("--format", choices=FORMATS, default=None, help="Output format. Overrides the config file.")
    run.add_argument("--threads", type=int, default=1, help="Worker threads; results do not depend on this.")
    run.set_defaults(handler=cmd_run)

    validate = subparsers.add_parser("validate", help="Check a config against the experiment schema.")
    validate.add_argument("--config", required=True, help="Path to the experiment JSON config.")
    validate.set_defaults(handler=cmd_validate)

    listing = subparsers.add_parser("list-experiments", help="List experiments and their required parameters.")
    listing.set_defaults(handler=cmd_list)

    show = subparsers.add_parser("show", help="Print a result file and its sibling tables.")
    show.add_argument("path", help="Result file written by `run`.")
    show.add_argument("--limit", type=int, default=20, help="Rows to print per table.")
    show.set_defaults(handler=cmd_show)
    return parser.parse_args(argv)


def main(argv: list[str] | None = None) -> int:
    args = parse_args(argv)
    configure_logging(args.verbose)
    try:
        return args.handler(args)
    except (ConfigError, OSError) as exc:
        report_error(exc)
        return EXIT_CONFIG_ERROR
    except QuenchLabError as exc:
        logger.debug("module error", exc_info=True)
        report_error(exc)
        return EXIT_MODULE_ERROR


if __name__ == "__main__":
    sys.exit(main())
