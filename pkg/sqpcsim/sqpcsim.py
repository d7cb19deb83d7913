"""Handle invoking sqpcsim from the command line."""
#   Copyright 2026 The sqpcsim developers
#
#   Licensed under the Apache License, Version 2.0 (the "License");
#   you may not use this file except in compliance with the License.
#   You may obtain a copy of the License at
#
#       http://www.apache.org/licenses/LICENSE-2.0
#
#   Unless required by applicable law or agreed to in writing, software
#   distributed under the License is distributed on an "AS IS" BASIS,
#   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
#   See the License for the specific language governing permissions and
#   limitations under the License.

import logging
import math
import sys
from dataclasses import replace

import configargparse

from . import __version__
from .metrics import EFFICIENCY_FUNCTIONS
from .qsim import InvalidArgument
from .run_scenarios import (
    ConfigError,
    load_config,
    run_efficiency,
    run_scenario,
    run_theorem1,
    write_report,
)

_DEFAULT_THEOREM1_TRIALS = 1000


class _ArgParser(configargparse.ArgParser):
    """Parser whose usage errors exit with status 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, "{}: error: {}\n".format(self.prog, message))


def positive_int(x):
    """Argparse type function for counts that must be at least 1."""
    val = int(x)
    if val < 1:
        raise ValueError("must be at least 1")
    return val


def _parse_args(argv):
    """Parse arguments from the given list."""
    parser = _ArgParser(
        # Replace the default config file help with custom message
        add_config_file_help=False,
        description="""
        Simulate semi-quantum comparison, key agreement, summation and ranking
        protocols under attack. Commands: run <scenario.json>, efficiency
        <sqpc2|sqka>, theorem1. Args that start with '--' can also be set in a
        config file (specified via -c); command line values override config
        file values which override defaults.
        """,
    )

    parser.add_argument(
        "command",
        choices=["run", "efficiency", "theorem1"],
        help="What to do",
    )
    parser.add_argument(
        "target",
        nargs="?",
        default=None,
        help="Scenario file for run, protocol for efficiency",
    )
    parser.add_argument(
        "--version",
        action="version",
        version=__version__,
        help="Print version number and exit",
    )
    parser.add_argument(
        "-c",
        "--config",
        is_config_file=True,
        help="sqpcsim configuration file with defaults for these CLI parameters",
    )
    parser.add_argument(
        "-l",
        "--log-level",
        default="INFO",
        choices=["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"],
        help="Determines what level of logs to display",
    )
    parser.add_argument(
        "--n",
        type=positive_int,
        default=8,
        help="Secret length in bits for efficiency",
    )
    parser.add_argument(
        "--theta",
        type=float,
        default=math.pi / 8,
        help="Entangler angle for theorem1",
    )
    parser.add_argument(
        "--trials",
        type=positive_int,
        default=None,
        help="Monte Carlo trials; overrides the scenario's value for run",
    )
    parser.add_argument(
        "--seed",
        type=int,
        default=None,
        help="Master seed; overrides the scenario's value for run",
    )
    parser.add_argument(
        "-o",
        "--out",
        default=None,
        help="Report file; defaults to the scenario's output_path, else stdout",
    )
    parser.add_argument(
        "-q",
        "--quiet",
        action="store_true",
        default=False,
        help="Only log warnings and errors",
    )
    parser.add_argument(
        "--transcript",
        action="store_true",
        default=False,
        help="Include the session transcript in run reports",
    )
    parser.add_argument(
        "--workers",
        type=positive_int,
        default=1,
        help="Worker processes for Monte Carlo trials",
    )
    args = parser.parse_args(argv)

    if args.command == "run" and args.target is None:
        parser.error("run needs a scenario file")
    if args.command == "efficiency" and args.target not in EFFICIENCY_FUNCTIONS:
        parser.error(
            "efficiency needs one of: {}".format(", ".join(sorted(EFFICIENCY_FUNCTIONS)))
        )
    if args.command == "theorem1" and args.target is not None:
        parser.error("theorem1 takes no positional target")
    if args.seed is not None and not 0 <= args.seed < 2 ** 64:
        parser.error("--seed must be a 64-bit unsigned integer")
    return args


def _run(args):
    """Run the chosen command and return (report, output path)."""
    if args.command == "run":
        config = load_config(args.target)
        overrides = {}
        if args.trials is not None:
            overrides["trials"] = args.trials
        if args.seed is not None:
            overrides["seed"] = args.seed
        if overrides:
            config = replace(config, **overrides)
        report = run_scenario(config, args.transcript, args.workers)
        return report, args.out or config.output_path
    if args.command == "efficiency":
        return run_efficiency(args.target, args.n), args.out
    trials = _DEFAULT_THEOREM1_TRIALS if args.trials is None else args.trials
    seed = 0 if args.seed is None else args.seed
    return run_theorem1(args.theta, trials, seed, args.workers), args.out


def main(argv=sys.argv[1:]):
    """sqpcsim tool entry point."""
    args = _parse_args(argv)

    log_level = logging.getLevelName("WARNING" if args.quiet else args.log_level)
    logging.basicConfig(format="%(levelname)s %(message)s", level=log_level)

    try:
        report, output_path = _run(args)
        write_report(report, output_path)
    except ConfigError as e:
        for error in e.errors:
            logging.error("%s", error)
        sys.exit(1)
    except InvalidArgument as e:
        logging.error("%s", e)
        sys.exit(1)
    except OSError:
        logging.error("Failed to read or write a file", exc_info=True)
        sys.exit(2)


if __name__ == "__main__":
    main()
