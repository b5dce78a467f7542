import argparse
import sys
from pathlib import Path
from typing import List, Optional

from src.enums import ExperimentKind
from src.errors import ConfigValidationError, DomainError
from src.experiments.runner import describe, parse_config, run_experiment
from src.log_setup import configure_logging

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_FAILED = 3


def build_parser() -> argparse.ArgumentParser:
    """
    Command line with three subcommands: run, validate and list-experiments.
    The overrides apply to run and validate.
    """
    parser = argparse.ArgumentParser(
        prog="radar-interference",
        description="Automotive radar interference and coordination experiments",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    parser.add_argument("-v", "--verbose", action="store_true", help="log DEBUG records on the console")
    commands = parser.add_subparsers(dest="command", required=True)

    for name, text in (("run", "run the experiment a configuration describes"),
                       ("validate", "check a configuration without running it")):
        sub = commands.add_parser(name, help=text, formatter_class=argparse.ArgumentDefaultsHelpFormatter)
        sub.add_argument("config", type=Path, help="experiment configuration file (.cfg)")
        sub.add_argument("-s", "--seed", type=int, default=None, help="master seed, overrides [run] seed")
        sub.add_argument("-o", "--out-dir", default=None, help="output directory, overrides [run] output_dir")
        sub.add_argument("-t", "--trials", type=int, default=None, help="Monte-Carlo trials, overrides [run] trials")

    commands.add_parser("list-experiments", help="list the experiment kinds a configuration can select")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """
    Parses the command line and runs the selected subcommand.

    Returns:
        0 on success, 2 for an invalid configuration, 3 if the experiment failed
    """
    args = build_parser().parse_args(argv)

    if args.command == "list-experiments":
        for kind in ExperimentKind:
            print(f"{kind.value:<12} {describe(kind)}")
        return EXIT_OK

    logger = configure_logging(args.verbose)
    try:
        cfg = parse_config(args.config, seed=args.seed, output_dir=args.out_dir, trials=args.trials)
    except (ConfigValidationError, DomainError) as err:
        logger.error("invalid configuration: %s", err)
        return EXIT_INVALID

    if args.command == "validate":
        logger.info("%s: valid %s configuration", args.config, cfg.kind.value)
        return EXIT_OK

    logger = configure_logging(args.verbose, cfg.output_dir / "run.log")
    try:
        run_experiment(cfg)
    except KeyboardInterrupt:
        logger.error("interrupted by user")
        return EXIT_FAILED
    except Exception as err:
        logger.exception("experiment failed: %s", err)
        return EXIT_FAILED
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
