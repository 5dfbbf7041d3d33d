# SPDX-License-Identifier: MIT
"""A module containing the command-line application.

Subcommands
-----------
run
    Runs an experiment file and writes CSV files and an SVG figure
    to ``<out>/<experiment name>/``.
validate
    Checks an experiment file and lists every problem found.
list-figures
    Lists the checked-in experiment files.

Exit codes are ``0`` on success, ``1`` for an invalid or unknown config
and ``2`` for runtime errors.

Examples
-------- ::

    python main.py run pnr_finite --out results --seed 7
    python main.py validate data/experiments/dark_counts_1e8.json
    python main.py list-figures
"""

from __future__ import annotations

import argparse
import asyncio
import os
from pathlib import Path
from typing import Sequence

import dotenv

from . import __title__, __version__
from .console import Console, FontColour
from .errors import (
    ConfigNotFoundError,
    ExceptionData,
    InvalidConfigFile,
    PnrMonError,
)
from .experiments import ExperimentController, ExperimentModel, RunMode
from .utils import CommandUtils, PathUtils

_CONFIG_ERRORS = [
    ExceptionData(InvalidConfigFile, exit_code=1, with_traceback_in_log=False),
    ExceptionData(ConfigNotFoundError, exit_code=1, with_traceback_in_log=False),
]
_RUNTIME_ERRORS = [
    ExceptionData(PnrMonError, exit_code=2),
    ExceptionData(OSError, exit_code=2),
]


class PnrMonApp:
    """The command-line application.

    Environment variables are read from a ``.env`` file if there is one:

    - ``PNRMON_LOG_DIR``: directory of the log files (``logs/`` by default,
      an empty value disables file logging),
    - ``PNRMON_DEBUG``: ``1`` prints debug messages.
    """

    __slots__ = ("_parser",)

    _parser: argparse.ArgumentParser

    def __init__(self) -> None:
        dotenv.load_dotenv()
        self._parser = self._create_parser()

    def _create_parser(self) -> argparse.ArgumentParser:
        parser = argparse.ArgumentParser(
            prog=__title__,
            description="Passive PNR monitoring of untrusted QKD sources.",
        )
        parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
        parser.add_argument("--debug", action="store_true", help="print debug messages")
        subparsers = parser.add_subparsers(dest="command", required=True)

        run = subparsers.add_parser("run", help="run an experiment file")
        run.add_argument("config", help="config path or checked-in name")
        run.add_argument("--out", type=Path, default=Path("results"), help="output directory")
        run.add_argument("--seed", type=int, default=None, help="override the seed")
        run.add_argument(
            "--mode",
            choices=[m.value for m in RunMode],
            default=None,
            help="override the run mode",
        )
        run.add_argument("--no-plot", action="store_true", help="skip the SVG figure")
        run.set_defaults(handler=self._run)

        validate = subparsers.add_parser("validate", help="check an experiment file")
        validate.add_argument("config", help="config path or checked-in name")
        validate.set_defaults(handler=self._validate)

        list_figures = subparsers.add_parser(
            "list-figures", help="list the checked-in experiment files"
        )
        list_figures.set_defaults(handler=self._list_figures)
        return parser

    def main(self, argv: Sequence[str] | None = None) -> int:
        """Parses the arguments and runs the command.

        Returns
        -------
        :class:`int`
            The exit code.
        """
        args = self._parser.parse_args(argv)
        Console.configure(
            log_dir=os.getenv("PNRMON_LOG_DIR", "logs/"),
            debug=args.debug or os.getenv("PNRMON_DEBUG") == "1",
        )
        return args.handler(args)

    @CommandUtils.with_log(FontColour.PINK)
    @CommandUtils.with_info(
        before="Running '{config}'...",
        after="Done.",
        catch_exceptions=_CONFIG_ERRORS + _RUNTIME_ERRORS,
    )
    def _run(self, args: argparse.Namespace) -> int:
        model = ExperimentModel(PathUtils.resolve_config(args.config))
        controller = ExperimentController(model)
        mode = RunMode(args.mode) if args.mode else None
        configs = model.with_overrides(seed=args.seed, mode=mode)

        tables = asyncio.run(controller.run_all(configs))
        out_dir = args.out / PathUtils.slugify(model.name)
        controller.write_outputs(tables, out_dir, plot=not args.no_plot)
        return 0

    @CommandUtils.with_log(FontColour.CYAN)
    @CommandUtils.with_info(
        before="Validating '{config}'...",
        catch_exceptions=_CONFIG_ERRORS + _RUNTIME_ERRORS,
    )
    def _validate(self, args: argparse.Namespace) -> int:
        model = ExperimentModel(PathUtils.resolve_config(args.config))
        Console.info(f"'{model.path}' is valid ({len(model.configs)} series).")
        return 0

    @CommandUtils.with_log(FontColour.CYAN)
    @CommandUtils.with_info(catch_exceptions=_RUNTIME_ERRORS)
    def _list_figures(self, _: argparse.Namespace) -> int:
        names = PathUtils.config_names()
        if not names:
            Console.warn(f"No configs in '{PathUtils.experiments_directory}'.")
            return 0
        for name in names:
            try:
                model = ExperimentModel(PathUtils.experiments_directory / f"{name}.json")
            except InvalidConfigFile:
                print(f"{name}: (invalid)")
                continue
            labels = ", ".join(c.label for c in model.configs)
            print(f"{name}: {labels}")
        return 0


def main(argv: Sequence[str] | None = None) -> int:
    """Runs the application and returns the exit code."""
    return PnrMonApp().main(argv)
