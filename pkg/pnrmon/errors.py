# SPDX-License-Identifier: MIT
"""A module containing all custom exceptions."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Type


class PnrMonError(Exception):
    """Base exception for all pnrmon exceptions."""


class InvalidParameterError(PnrMonError, ValueError):
    """A parameter is outside its domain."""


class SingularDeconvolutionError(PnrMonError):
    """The noise distribution has no vacuum component."""


class CalibrationError(PnrMonError):
    """The optical path does not satisfy the calibration condition."""


class UnsupportedForCustomError(PnrMonError):
    """The operation is defined only for Poissonian sources."""


class CapacityError(PnrMonError):
    """A pulse count does not fit the counter type."""


class DegenerateBoundsError(PnrMonError):
    """The bounds give a zero or negative denominator."""


class NoUntaggedGuaranteeError(PnrMonError):
    """No untagged pulses are guaranteed (1 - delta - eps <= 0)."""


class PreconditionError(PnrMonError):
    """A formula is used outside its validity condition."""


class DegenerateDetectorError(PnrMonError):
    """The threshold detector always clicks."""


class SingularSweepError(PnrMonError):
    """The attenuator settings do not allow the sweep inversion."""


class FigureError(PnrMonError):
    """Cannot render the figure."""


class InvalidConfigFile(PnrMonError):
    """Invalid experiment config file.

    All problems found during validation are stored in :attr:`problems`,
    one ``field: message`` line each.
    """

    __slots__ = ("problems",)

    problems: list[str]

    def __init__(self, problems: list[str], source: str = "config") -> None:
        self.problems = problems
        details = "\n".join(f"  - {p}" for p in problems)
        super().__init__(f"Invalid {source}:\n{details}")


class ConfigNotFoundError(PnrMonError):
    """Experiment config not found."""

    __slots__ = ("config_name", "suggestion")

    config_name: str
    suggestion: str | None

    def __init__(self, config_name: str, suggestion: str | None = None) -> None:
        self.config_name = config_name
        self.suggestion = suggestion
        msg = f"Config '{config_name}' not found."
        if suggestion:
            msg += f" Did you mean '{suggestion}'?"
        super().__init__(msg)


@dataclass
class ExceptionData:
    """Exception data with attributes to be passed to the error handler.

    Attributes
    ----------
    type: Type[Exception]
        Exception type.
    exit_code: :class:`int`
        The exit code returned by the command. Defaults to ``2``.
    with_traceback_in_log: :class:`bool`
        Whether to include traceback in log.
        Defaults to ``True``.

    Examples
    -------- ::

        @CommandUtils.with_info(catch_exceptions=[
            ExceptionData(InvalidConfigFile, exit_code=1, with_traceback_in_log=False)
        ])
        def _validate(self, args: argparse.Namespace) -> int:
            ...
    """

    type: Type[Exception]
    exit_code: int = field(default=2, kw_only=True)
    with_traceback_in_log: bool = field(default=True, kw_only=True)
