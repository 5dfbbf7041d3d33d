# SPDX-License-Identifier: MIT
"""A module containing utility classes and functions."""

from __future__ import annotations

import argparse
import functools
import re
from abc import ABC
from dataclasses import KW_ONLY, dataclass
from difflib import SequenceMatcher
from pathlib import Path
from typing import Any, Callable, Generic, TypeVar

from .console import Console, FontColour
from .errors import ConfigNotFoundError, ExceptionData

_CommandT = Callable[[Any, argparse.Namespace], int]


class CommandUtils(ABC):
    """A class containing static methods that can be used to decorate CLI commands.

    A command is a method taking the parsed :class:`argparse.Namespace`
    and returning the exit code.

    This class should not be instantiated.
    """

    @staticmethod
    def _command_name(args: argparse.Namespace) -> str:
        return getattr(args, "command", None) or "?"

    @staticmethod
    def with_log(colour: FontColour = FontColour.PINK) -> Callable[[_CommandT], _CommandT]:
        """Logs the command and its non-empty arguments to the console.

        Parameters
        ----------
        colour: :class:`FontColour`
            The colour of the log message.
        """

        def decorator(func: _CommandT) -> _CommandT:
            @functools.wraps(func)
            def wrapper(self, args: argparse.Namespace) -> int:
                args_info = " ".join(
                    f"{k}:{v}"
                    for k, v in sorted(vars(args).items())
                    if v not in (None, False) and k not in ("command", "handler")
                )
                Console.specific(
                    f"used {CommandUtils._command_name(args)} {args_info}",
                    "COMMAND",
                    colour,
                )
                return func(self, args)

            return wrapper

        return decorator

    @staticmethod
    def with_info(
        *,
        before: str | None = None,
        after: str | None = None,
        catch_exceptions: list[type[Exception] | ExceptionData] | None = None,
    ) -> Callable[[_CommandT], _CommandT]:
        """Prints messages around a command and turns exceptions into exit codes.

        Examples
        --------

        The command below prints 'Validating...' first and
        'Config is valid.' after it returns. If the config is invalid,
        the error is logged without a traceback and the exit code is 1. ::

            @CommandUtils.with_info(
                before="Validating {config}...",
                after="Config is valid.",
                catch_exceptions=[
                    ExceptionData(InvalidConfigFile, exit_code=1, with_traceback_in_log=False)
                ],
            )
            def _validate(self, args: argparse.Namespace) -> int:
                ...

        Parameters
        ----------
        before: :class:`str`
            The message printed before the command is run.
            Formatted with the command arguments.
        after: :class:`str`
            The message printed after the command returns 0.
        catch_exceptions: list[type[:class:`Exception`] | :class:`ExceptionData`] | `None`
            Exceptions to catch. The first matching entry decides the exit code.
            A bare exception type exits with ``2``.
        """

        def decorator(func: _CommandT) -> _CommandT:
            @functools.wraps(func)
            def wrapper(self, args: argparse.Namespace) -> int:
                params = vars(args)
                if before:
                    Console.info(before.format(**params))

                try:
                    exit_code = func(self, args)
                except Exception as e:  # pylint: disable=broad-except
                    for exc_data in catch_exceptions or []:
                        if isinstance(exc_data, type):
                            exc_data = ExceptionData(exc_data)

                        if isinstance(e, exc_data.type):
                            name = CommandUtils._command_name(args)
                            if exc_data.with_traceback_in_log:
                                Console.error(f"Error while using {name}.", exception=e)
                            else:
                                Console.error(f"Error while using {name}. {e}")
                            return exc_data.exit_code
                    raise e

                if after and exit_code == 0:
                    Console.info(after.format(**params))
                return exit_code

            return wrapper

        return decorator


class PathUtils(ABC):
    """A class containing utility methods for paths."""

    experiments_directory = Path("data/experiments/")

    @staticmethod
    def slugify(text: str) -> str:
        """Converts a label to a file-name friendly string.

        Examples
        -------- ::

            PathUtils.slugify("N=1e9, lambda=0.1")  # 'n-1e9-lambda-0-1'
        """
        return re.sub(r"[^a-z0-9]+", "-", text.lower()).strip("-")

    @classmethod
    def config_names(cls) -> list[str]:
        """Names of the checked-in experiment configs."""
        if not cls.experiments_directory.exists():
            return []
        return sorted(p.stem for p in cls.experiments_directory.glob("*.json"))

    @classmethod
    def resolve_config(cls, name_or_path: str | Path) -> Path:
        """Returns the path of a config given by path or by checked-in name.

        Raises
        ------
        ConfigNotFoundError
            Neither a file nor a checked-in name. The closest name is suggested.
        """
        path = Path(name_or_path)
        if path.is_file():
            return path
        candidate = cls.experiments_directory / f"{path.stem}.json"
        if candidate.is_file():
            return candidate

        names = cls.config_names()
        suggestion = None
        if names:
            best = Matcher(names, ignore_case=True).match_max(str(name_or_path))
            if best.ratio >= 0.5:
                suggestion = best.item
        raise ConfigNotFoundError(str(name_or_path), suggestion)


_MatcherT = TypeVar("_MatcherT")
_MatcherResultT = TypeVar("_MatcherResultT")


@dataclass(slots=True)
class Matcher(Generic[_MatcherT]):
    """Ranks candidate names by their similarity to a mistyped one.

    Used for the "did you mean" hints of unknown config names and keys.
    Similarity is the :class:`difflib.SequenceMatcher` ratio.

    Attributes
    ----------
    items: :class:`list`[:class:`_MatcherT`]
        The candidates, e.g. config names or allowed keys.
    ignore_case: :class:`bool`
        Whether ``Seed`` and ``seed`` count as the same. Defaults to `False`.

    Examples
    -------- ::

        matcher = Matcher(["pnr_finite", "pna_finite", "trusted"])
        result = matcher.match_max("pnr")
        result.item   # 'pnr_finite'
    """

    items: list[_MatcherT]
    _: KW_ONLY
    ignore_case: bool = False

    @dataclass(slots=True)
    class Result(Generic[_MatcherResultT]):
        """One candidate and its similarity.

        Attributes
        ----------
        item: :class:`_MatcherResultT`
            The candidate.
        ratio: :class:`float`
            Similarity in ``[0, 1]``, ``1`` for equal strings.
        """

        item: _MatcherResultT
        ratio: float

    def match_max(
        self,
        value: str,
        key: Callable[[_MatcherT], str] = str,
    ) -> Matcher.Result[_MatcherT]:
        """The most similar candidate.

        Ties go to the earlier item.

        Raises
        ------
        ValueError
            There are no items.
        """
        matches = self.match_all(value, key)
        return max(matches, key=lambda match: match.ratio)

    def match_all(
        self,
        value: str,
        key: Callable[[_MatcherT], str] = str,
    ) -> list[Matcher.Result[_MatcherT]]:
        """Every candidate with its similarity, in the order of :attr:`items`."""

        def prepare(text: str) -> str:
            return text.lower() if self.ignore_case else text

        return [
            Matcher.Result(
                item,
                SequenceMatcher(lambda i: i.isspace(), prepare(value), prepare(key(item))).ratio(),
            )
            for item in self.items
        ]
