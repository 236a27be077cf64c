"""
Command-line entry point for the channel prediction benchmark
"""
import argparse
import json
import sys
from typing import List, Optional

from app.config import config, load_config_file, parse_overrides
from app.logger import logger, setup_logging
from app.models import Command


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="channelbench",
        description="Fading-channel prediction benchmark: simulate, preprocess, train and sweep predictors",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key=value experiment file (sections as dotted prefixes)")
    common.add_argument("--seed", type=int, default=None, help="base seed (overrides experiment.seed)")
    common.add_argument("--out", default=config.OUTPUT_DIR, help="output directory")
    common.add_argument("--jobs", type=int, default=config.MAX_JOBS, help="parallel experiments in a sweep")
    common.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                        help="override one config key; repeatable")
    common.add_argument("--format", dest="fmt", choices=("csv", "json"), default="csv",
                        help="extra result format next to the CSV files")
    common.add_argument("--plots", action="store_true", help="render PNG charts with matplotlib")
    common.add_argument("--log-level", default=None, help="console log level")

    from app.commands import command_registry

    descriptions = command_registry.list_commands()
    subparsers = parser.add_subparsers(dest="command", required=True)
    for command in Command:
        sub = subparsers.add_parser(
            command.value, parents=[common], help=descriptions[command.value], description=descriptions[command.value]
        )
        if command == Command.EVALUATE:
            sub.add_argument("--model", dest="model_path", required=True, help="saved model JSON")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    if args.log_level:
        setup_logging(args.log_level)
    config.validate()
    if args.jobs < 1:
        logger.error("--jobs must be at least 1")
        return 2

    from app.commands import command_registry

    try:
        sections = load_config_file(args.config, parse_overrides(args.overrides))
    except (OSError, ValueError) as e:
        logger.error(f"Invalid configuration: {e}")
        return 2

    params = {
        "sections": sections,
        "seed": args.seed,
        "out_dir": args.out,
        "jobs": args.jobs,
        "fmt": args.fmt,
        "plots": args.plots,
        "model_path": getattr(args, "model_path", None),
    }
    result = command_registry.execute(Command(args.command), params)
    print(json.dumps(result, indent=2, default=str))
    if result.get("status") == "error":
        return 1
    return 0 if result.get("all_succeeded", True) else 1


if __name__ == "__main__":
    sys.exit(main())
