"""Command-line entry point.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 numeric failure.
"""

import argparse
import logging
import sys

from .config import dump_config, load_config, with_overrides
from .errors import EcogTdaError
from .pipeline import STAGES, run_pipeline

COMMANDS = ("validate", "generate", "features", "tune", "report", "all")


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="JSON configuration (defaults if omitted)")
    common.add_argument("--seed", type=int, metavar="N", help="override the configured seed")
    common.add_argument("--threads", type=int, metavar="N", help="cap on worker threads")
    common.add_argument("--out", metavar="DIR", help="override the output directory")
    common.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")

    parser = argparse.ArgumentParser(
        prog="ecogtda", description="Topological and band-power feature pipeline.")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "validate": "check a configuration and print it normalized",
        "generate": "write the synthetic recording and events",
        "features": "compute feature matrices for every variant",
        "tune": "tune models by Bayesian optimization",
        "report": "write summaries, importances, MI and correlation",
        "all": "run every stage in order",
    }
    for name in COMMANDS:
        sub.add_parser(name, parents=[common], help=helps[name])
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        cfg = with_overrides(load_config(args.config), args.seed, args.threads, args.out)
        if args.command == "validate":
            sys.stdout.write(dump_config(cfg))
        elif args.command == "all":
            run_pipeline(cfg)
        else:
            STAGES[args.command](cfg)
    except EcogTdaError as err:
        where = getattr(err, "stage", None) or ("config" if err.exit_code == 2 else args.command)
        print(f"ecogtda: error [{where}]: {err}", file=sys.stderr)
        return err.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
