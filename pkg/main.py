"""
main.py

The main entry point of the recursion-tensor verification toolkit.
- Sets up system-wide logging.
- Parses the `check` command line, runs the requested suites and prints the report.
- Maps outcomes to exit codes: 0 passed, 1 failed, 2 usage, 3 scenario, 4 numeric.
"""

import argparse
import logging
import sys
from logging.handlers import RotatingFileHandler
from typing import List, Optional

import config
from report_manager import ReportManager
from scenario_manager import SamplingExhaustedError, ScenarioError, ScenarioManager
from suite_runner import SUITES, NumericCheckError, SuiteRunner

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2
EXIT_SCENARIO = 3
EXIT_NUMERIC = 4


def setup_logging(quiet: bool = False):
    """
    Configures the global logger for the application.
    - Logs to both a file and stderr; stdout is reserved for the report.
    - Uses a rotating file handler to prevent log files from growing indefinitely.
    """
    logger = logging.getLogger()
    logger.setLevel(config.LOG_LEVEL)
    for handler in list(logger.handlers):
        logger.removeHandler(handler)

    formatter = logging.Formatter(config.LOG_FORMAT)

    # Up to 5 rotated files of 5 MB each
    file_handler = RotatingFileHandler(
        config.LOG_FILE,
        maxBytes=5 * 1024 * 1024,  # 5 MB
        backupCount=5
    )
    file_handler.setFormatter(formatter)

    stream_handler = logging.StreamHandler(sys.stderr)
    stream_handler.setFormatter(formatter)
    if quiet:
        stream_handler.setLevel(logging.WARNING)

    logger.addHandler(file_handler)
    logger.addHandler(stream_handler)

    logger.debug("Logging configured. Logging to file and stderr.")
    logger.debug(f"Log level set to: {config.LOG_LEVEL}")

    # Capture unhandled exceptions with the logger
    def handle_exception(exc_type, exc_value, exc_traceback):
        if issubclass(exc_type, KeyboardInterrupt):
            sys.__excepthook__(exc_type, exc_value, exc_traceback)
            return
        logger.critical("Unhandled exception", exc_info=(exc_type, exc_value, exc_traceback))

    sys.excepthook = handle_exception


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return value


def _positive_float(text: str) -> float:
    value = float(text)
    if not value > 0:
        raise argparse.ArgumentTypeError("must be a positive number")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pn-check",
        description="Verify the identities of a Poisson-Nijenhuis recursion tensor on sample points.",
    )
    commands = parser.add_subparsers(dest="command", required=True)
    check = commands.add_parser("check", help="Run check suites on a scenario")
    check.add_argument("--scenario", help="Scenario JSON file or bundled fixture name (e.g. E3)")
    check.add_argument("--suite", default="all", choices=("all",) + SUITES)
    check.add_argument("--points", type=_positive_int, default=None, help="Number of sample points")
    check.add_argument("--seed", type=int, default=None, help="PRNG seed")
    check.add_argument("--tol", type=_positive_float, default=None, help="Residual tolerance")
    check.add_argument("--json", dest="json_path", default=None, help="Also write the JSON report here")
    check.add_argument("--quiet", action="store_true", help="Only warnings and errors on stderr")
    check.add_argument("--list", action="store_true", help="List the bundled scenarios and exit")
    return parser


def _list_scenarios(manager: ScenarioManager) -> None:
    for entry in manager.list_bundled():
        print(f"{entry['name']:<6} dim={entry['dim']}  {entry['mode']:<10}  {entry['description']}")


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code else EXIT_OK

    setup_logging(quiet=args.quiet)
    logger = logging.getLogger(__name__)
    manager = ScenarioManager()

    if args.list:
        _list_scenarios(manager)
        return EXIT_OK
    if not args.scenario:
        parser.print_usage(sys.stderr)
        print("pn-check check: error: --scenario is required unless --list is given", file=sys.stderr)
        return EXIT_USAGE

    try:
        scenario = manager.load(args.scenario)
        runner = SuiteRunner(scenario, points=args.points, seed=args.seed, tol=args.tol)
    except (ScenarioError, SamplingExhaustedError) as e:
        logger.error(f"Could not load scenario '{args.scenario}': {e}")
        print(f"scenario error: {e}", file=sys.stderr)
        return EXIT_SCENARIO

    try:
        report = runner.run(args.suite)
    except NumericCheckError as e:
        logger.critical(f"[{scenario.name}] Aborted: {e}", exc_info=True)
        print(f"numeric error in check {e.check_id}: {e.cause}", file=sys.stderr)
        return EXIT_NUMERIC

    sys.stdout.write(report.to_text())
    if args.json_path:
        ReportManager().write_json(report, args.json_path)

    return EXIT_OK if report.passed else EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
