# SPDX-License-Identifier: MIT
"""A module containing the configuration-driven experiment runner.

An experiment file is a JSON object describing one series, optionally
followed by ``variants``: partial overrides, each giving one more series.
Every series is run over the same distance grid and becomes one
:class:`ResultTable`; the tables are written as CSV files and drawn
as one figure.

Examples
-------- ::

    model = ExperimentModel(Path("data/experiments/pnr_finite.json"))
    controller = ExperimentController(model)
    tables = asyncio.run(controller.run_all())
    controller.write_outputs(tables, Path("results/pnr_finite"))
"""

from __future__ import annotations

import asyncio
import hashlib
import json
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Any, Callable, Iterable, Mapping, Sequence, TypeVar, cast

import numpy as np
import pandas as pd

from .bounds import SourceBounds, estimate_bounds, resolution_from_confidence
from .channel import (
    ChannelObservables,
    GysParameters,
    cutoff_distance,
    simulate_observables,
)
from .console import Console
from .detector_decoy import (
    DEFAULT_ETAS,
    DarkCountModel,
    VoaSweep,
    simulate_sweep,
    sweep_to_source_bounds,
)
from .errors import InvalidConfigFile, InvalidParameterError, PnrMonError
from .figures import PlotSpec
from .keyrate import KeyRateReport, RateFlag, trusted_rate, untrusted_rate
from .models import ControllerWithFigure, FigureModel, Model
from .optics import (
    OpticalPath,
    PulseClass,
    SourceSpec,
    mean_at_p4,
    pnd_at_p3,
)
from .photon_stats import (
    DEFAULT_N_MAX,
    NoiseKind,
    NoiseModel,
    PhotonNumberDistribution,
    poisson_pnd,
)
from .pna import (
    PnaKeyRateReport,
    UntaggedWindow,
    analytic_untagged_stats,
    pna_key_rate,
    sample_untagged_stats,
)
from .sampling import (
    CountHistogram,
    PulseBudget,
    expected_histogram,
    sample_histogram_pair,
    split_budget,
)
from .utils import Matcher, PathUtils

SCHEMA_VERSION = 1

_PROVENANCE_COLUMNS = (
    "schema_version",
    "config_hash",
    "seed",
    "label",
    "scenario",
    "mode",
    "n_total",
)
_OBSERVABLE_COLUMNS = ("distance_km", "q0", "qd", "qs", "ed", "es")

RATE_COLUMNS = (
    _PROVENANCE_COLUMNS
    + _OBSERVABLE_COLUMNS
    + (
        "a0p_lower",
        "a1p_lower",
        "a2p_lower",
        "a0_upper",
        "a1_upper",
        "a2_upper",
        "eps_signal",
        "eps_decoy",
        "confidence",
        "noise",
        "rate",
        "delta1_s",
        "e1_s",
        "flags",
    )
)
PNA_COLUMNS = (
    _PROVENANCE_COLUMNS
    + _OBSERVABLE_COLUMNS
    + (
        "rate",
        "delta",
        "eps",
        "confidence",
        "m_min",
        "m_max",
        "q1_lower",
        "e1_upper",
        "flags",
    )
)
HISTOGRAM_COLUMNS = _PROVENANCE_COLUMNS + (
    "class",
    "n_pulses",
    "k0",
    "k1",
    "k2",
    "k_more",
)
SWEEP_COLUMNS = _PROVENANCE_COLUMNS + (
    "class",
    "eta",
    "clicks",
    "no_clicks",
    "n_pulses",
)

_INT64_MAX = int(np.iinfo(np.int64).max)
_SEED_LIMIT = 2**64
_DEFAULT_CONFIDENCE = 1 - 1e-6
_DEFAULT_GRID = (0.0, 150.0, 2.0)


class Scenario(Enum):
    """What an experiment series computes."""

    TRUSTED_REFERENCE = "trusted_reference"
    PNR_NOISELESS = "pnr_noiseless"
    PNR_POISSON_DARK = "pnr_poisson_dark"
    PNR_GENERAL_NOISE = "pnr_general_noise"
    PNA_SCHEME = "pna_scheme"
    DETECTOR_DECOY = "detector_decoy"


class RunMode(Enum):
    """Whether detector records are sampled or set to their expected values."""

    MONTE_CARLO = "monte_carlo"
    DETERMINISTIC = "deterministic"


class Calibration(Enum):
    """How the monitor distributions are derived from the optical path.

    ``EXACT`` uses the configured means at P4 for both the channel and the
    monitor. ``OPTICAL_PATH`` propagates the P1 mean through the configured
    transmittances, so the monitor sees the calibration mismatch.
    """

    EXACT = "exact"
    OPTICAL_PATH = "optical_path"


_SCENARIO_NOISE = {
    Scenario.PNR_NOISELESS: NoiseKind.NONE,
    Scenario.PNR_POISSON_DARK: NoiseKind.POISSON_DARK,
    Scenario.PNR_GENERAL_NOISE: NoiseKind.GENERAL,
}
_TOP_LEVEL_KEYS = (
    "name",
    "label",
    "scenario",
    "mode",
    "seed",
    "n_total",
    "confidence",
    "distances",
    "source",
    "optical_path",
    "gys",
    "budget",
    "noise",
    "pna",
    "voa",
)

_EnumT = TypeVar("_EnumT", bound=Enum)
_T = TypeVar("_T")


class _SectionReader:
    """Reads typed values of one config section and collects the problems.

    Every problem is stored as ``<path>: <message>`` and the reader keeps
    going with the default value, so one pass reports all of them.
    """

    __slots__ = ("_data", "_prefix", "problems")

    _data: Mapping[str, Any]
    _prefix: str
    problems: list[str]

    def __init__(
        self,
        data: Mapping[str, Any],
        prefix: str = "",
        problems: list[str] | None = None,
    ) -> None:
        self._data = data
        self._prefix = prefix
        self.problems = [] if problems is None else problems

    def report(self, key: str, message: str) -> None:
        """Stores a problem with the field ``key``."""
        self.problems.append(f"{self._prefix}{key}: {message}")

    def get(self, key: str, default: Any = None) -> Any:
        """The raw value of ``key``."""
        return self._data.get(key, default)

    def check_keys(self, allowed: Iterable[str]) -> None:
        """Reports every key that is not allowed, with the closest allowed key."""
        names = list(allowed)
        for key in sorted(set(self._data) - set(names)):
            best = Matcher(names).match_max(key) if names else None
            if best is not None and best.ratio >= 0.6:
                self.report(key, f"unknown key, did you mean '{best.item}'?")
            else:
                self.report(key, "unknown key")

    def section(self, key: str) -> _SectionReader:
        """A reader of the nested object ``key`` (empty if missing)."""
        value = self._data.get(key)
        if value is None:
            value = {}
        elif not isinstance(value, dict):
            self.report(key, "must be an object")
            value = {}
        return _SectionReader(value, f"{self._prefix}{key}.", self.problems)

    def number(
        self,
        key: str,
        default: float,
        check: Callable[[float], bool] = lambda _: True,
        expected: str = "",
    ) -> float:
        """A finite number passing ``check``."""
        value = self._data.get(key, default)
        if (
            isinstance(value, bool)
            or not isinstance(value, (int, float))
            or not math.isfinite(value)
        ):
            self.report(key, f"must be a number, got {value!r}")
            return default
        if not check(float(value)):
            self.report(key, f"must be {expected}, got {value!r}")
            return default
        return float(value)

    def integer(
        self,
        key: str,
        default: int | None,
        check: Callable[[int], bool] = lambda _: True,
        expected: str = "",
    ) -> int | None:
        """An integer passing ``check``; integral floats such as ``1e9`` are accepted."""
        value = self._data.get(key, default)
        if value is None and default is None:
            return None
        if isinstance(value, float) and value.is_integer():
            value = int(value)
        if isinstance(value, bool) or not isinstance(value, int):
            self.report(key, f"must be an integer, got {value!r}")
            return default
        if not check(value):
            self.report(key, f"must be {expected}, got {value!r}")
            return default
        return value

    def text(self, key: str, default: str) -> str:
        """A string."""
        value = self._data.get(key, default)
        if not isinstance(value, str):
            self.report(key, f"must be a string, got {value!r}")
            return default
        return value

    def choice(self, key: str, enum_type: type[_EnumT], default: _EnumT | None) -> _EnumT | None:
        """A member of ``enum_type`` given by its value. Required if there is no default."""
        if key not in self._data:
            if default is None:
                self.report(key, "is required")
            return default
        value = self._data[key]
        try:
            return enum_type(value)
        except ValueError:
            options = ", ".join(f"'{m.value}'" for m in enum_type)
            self.report(key, f"must be one of {options}, got {value!r}")
            return default

    def build(self, key: str, factory: Callable[[dict[str, Any]], _T], default: _T) -> _T:
        """An object created by ``factory`` from the nested object ``key``."""
        value = self._data.get(key)
        if value is None:
            return default
        if not isinstance(value, dict):
            self.report(key, "must be an object")
            return default
        try:
            return factory(value)
        except (TypeError, ValueError) as e:
            self.report(key, str(e))
            return default

    def distribution(self, key: str, n_max: int | None) -> PhotonNumberDistribution | None:
        """A photon-number distribution given as a list of probabilities."""
        value = self._data.get(key)
        if not isinstance(value, list) or not all(
            isinstance(p, (int, float)) and not isinstance(p, bool) for p in value
        ):
            self.report(key, "must be a list of probabilities")
            return None
        try:
            return PhotonNumberDistribution.from_probs(value, n_max)
        except InvalidParameterError as e:
            self.report(key, str(e))
            return None


def _grid(start: float, stop: float, step: float) -> tuple[float, ...]:
    count = math.floor((stop - start) / step + 1e-9) + 1
    return tuple(round(start + i * step, 10) for i in range(count))


def _read_distances(r: _SectionReader) -> tuple[float, ...]:
    raw = r.get("distances")
    if raw is None:
        return _grid(*_DEFAULT_GRID)
    if isinstance(raw, dict):
        grid = r.section("distances")
        grid.check_keys(("start", "stop", "step"))
        start = grid.number("start", _DEFAULT_GRID[0], lambda x: x >= 0, ">= 0")
        stop = grid.number("stop", _DEFAULT_GRID[1], lambda x: x >= start, ">= start")
        step = grid.number("step", _DEFAULT_GRID[2], lambda x: x > 0, "> 0")
        return _grid(start, stop, step)
    if not isinstance(raw, list) or not raw:
        r.report("distances", "must be a non-empty list or {start, stop, step}")
        return _grid(*_DEFAULT_GRID)
    if not all(isinstance(d, (int, float)) and not isinstance(d, bool) for d in raw):
        r.report("distances", "must contain numbers only")
        return _grid(*_DEFAULT_GRID)
    distances = tuple(float(d) for d in raw)
    if distances[0] < 0:
        r.report("distances", "must be non-negative")
    if any(b <= a for a, b in zip(distances, distances[1:])):
        r.report("distances", "must be strictly increasing")
    return distances


@dataclass(slots=True, frozen=True)
class SourceSettings:
    """The ``source`` section of a config.

    Attributes
    ----------
    mu_signal, mu_decoy: :class:`float`
        Mean photon numbers sent to Bob.
    apn_p1: :class:`float`
        Mean photon number at P1, used with :attr:`Calibration.OPTICAL_PATH`.
    calibration: :class:`Calibration`
        How the monitor distributions are derived.
    n_max: :class:`int`
        Truncation bound of the distributions.
    custom: tuple[:class:`PhotonNumberDistribution`, :class:`PhotonNumberDistribution`] | `None`
        Signal and decoy distributions of a non-Poissonian source.
    """

    mu_signal: float = 0.5
    mu_decoy: float = 0.1
    apn_p1: float = 7.69e6
    calibration: Calibration = Calibration.EXACT
    n_max: int = DEFAULT_N_MAX
    custom: tuple[PhotonNumberDistribution, PhotonNumberDistribution] | None = field(
        default=None, compare=False
    )

    @classmethod
    def read(cls, r: _SectionReader) -> SourceSettings:
        """Reads the section, reporting problems to ``r``."""
        r.check_keys(("mu_signal", "mu_decoy", "apn_p1", "calibration", "n_max", "custom"))
        n_max = r.integer("n_max", DEFAULT_N_MAX, lambda n: n >= 2, ">= 2")
        custom = None
        if r.get("custom") is not None:
            cr = r.section("custom")
            cr.check_keys(("signal", "decoy"))
            signal = cr.distribution("signal", n_max)
            decoy = cr.distribution("decoy", n_max)
            if signal is not None and decoy is not None:
                custom = (signal, decoy)
        return cls(
            mu_signal=r.number("mu_signal", 0.5, lambda x: x > 0, "> 0"),
            mu_decoy=r.number("mu_decoy", 0.1, lambda x: x > 0, "> 0"),
            apn_p1=r.number("apn_p1", 7.69e6, lambda x: x > 0, "> 0"),
            calibration=cast(Calibration, r.choice("calibration", Calibration, Calibration.EXACT)),
            n_max=cast(int, n_max),
            custom=custom,
        )

    def to_dict(self) -> dict[str, Any]:
        """Returns the section as a config object."""
        data: dict[str, Any] = {
            "mu_signal": self.mu_signal,
            "mu_decoy": self.mu_decoy,
            "apn_p1": self.apn_p1,
            "calibration": self.calibration.value,
            "n_max": self.n_max,
        }
        if self.custom is not None:
            data["custom"] = {
                "signal": self.custom[0].probs.tolist(),
                "decoy": self.custom[1].probs.tolist(),
            }
        return data

    @property
    def spec(self) -> SourceSpec:
        """The source as seen by the optics model."""
        if self.custom is not None:
            return SourceSpec.from_custom(*self.custom)
        return SourceSpec.poissonian(self.apn_p1, self.n_max)


@dataclass(slots=True, frozen=True)
class PnaSettings:
    """The ``pna`` section: the untagged window and an optional fixed resolution."""

    window_fraction: float = 0.1
    m_min: int | None = None
    m_max: int | None = None
    eps: float | None = None

    @classmethod
    def read(cls, r: _SectionReader) -> PnaSettings:
        """Reads the section, reporting problems to ``r``."""
        r.check_keys(("window_fraction", "m_min", "m_max", "eps"))
        m_min = r.integer("m_min", None, lambda m: m >= 0, ">= 0")
        m_max = r.integer("m_max", None, lambda m: m >= 0, ">= 0")
        if (m_min is None) != (m_max is None):
            r.report("m_min", "m_min and m_max must be given together")
            m_min = m_max = None
        eps = None
        if r.get("eps") is not None:
            eps = r.number("eps", 0.0, lambda x: x >= 0, ">= 0")
        return cls(
            r.number("window_fraction", 0.1, lambda x: 0 <= x < 1, "in [0, 1)"),
            m_min,
            m_max,
            eps,
        )

    def to_dict(self) -> dict[str, Any]:
        """Returns the section as a config object."""
        return {
            "window_fraction": self.window_fraction,
            "m_min": self.m_min,
            "m_max": self.m_max,
            "eps": self.eps,
        }


@dataclass(slots=True, frozen=True)
class VoaSettings:
    """The ``voa`` section: the detector-decoy sweep settings."""

    etas: tuple[float, float, float] = DEFAULT_ETAS
    dark_rate: float = 0.0
    dark_model: DarkCountModel = DarkCountModel.BERNOULLI

    @classmethod
    def read(cls, r: _SectionReader) -> VoaSettings:
        """Reads the section, reporting problems to ``r``."""
        r.check_keys(("etas", "dark_rate", "dark_model"))
        etas: Any = r.get("etas", list(DEFAULT_ETAS))
        if (
            not isinstance(etas, list)
            or len(etas) != 3
            or not all(isinstance(e, (int, float)) and not isinstance(e, bool) for e in etas)
        ):
            r.report("etas", "must be a list of three transmittances")
            etas = list(DEFAULT_ETAS)
        elif not (etas[0] == 1 and 0 < etas[2] < etas[1] < 1):
            r.report("etas", f"need [1, eta_1, eta_2] with 0 < eta_2 < eta_1 < 1, got {etas}")
            etas = list(DEFAULT_ETAS)
        dark_model = cast(
            DarkCountModel, r.choice("dark_model", DarkCountModel, DarkCountModel.BERNOULLI)
        )
        if dark_model is DarkCountModel.BERNOULLI:
            dark_rate = r.number("dark_rate", 0.0, lambda x: 0 <= x < 1, "in [0, 1)")
        else:
            dark_rate = r.number("dark_rate", 0.0, lambda x: x >= 0, ">= 0")
        return cls(
            (float(etas[0]), float(etas[1]), float(etas[2])),
            dark_rate,
            dark_model,
        )

    def to_dict(self) -> dict[str, Any]:
        """Returns the section as a config object."""
        return {
            "etas": list(self.etas),
            "dark_rate": self.dark_rate,
            "dark_model": self.dark_model.value,
        }


def _read_noise(r: _SectionReader, n_max: int) -> NoiseModel:
    kind = r.choice("kind", NoiseKind, NoiseKind.NONE)
    if kind is NoiseKind.POISSON_DARK:
        r.check_keys(("kind", "lambda"))
        return NoiseModel.poisson(r.number("lambda", 0.0, lambda x: x >= 0, ">= 0"))
    if kind is NoiseKind.GENERAL:
        r.check_keys(("kind", "probs"))
        distribution = r.distribution("probs", n_max)
        if distribution is None:
            return NoiseModel.none()
        if distribution[0] <= 0:
            r.report("probs", "N(0) must be > 0")
        return NoiseModel.general(distribution)
    r.check_keys(("kind",))
    return NoiseModel.none()


def _noise_to_dict(noise: NoiseModel) -> dict[str, Any]:
    if noise.kind is NoiseKind.POISSON_DARK:
        return {"kind": noise.kind.value, "lambda": noise.lam}
    if noise.kind is NoiseKind.GENERAL:
        dist = cast(PhotonNumberDistribution, noise.distribution)
        return {"kind": noise.kind.value, "probs": dist.probs.tolist()}
    return {"kind": noise.kind.value}


def _read_budget(r: _SectionReader) -> tuple[float, float, float]:
    r.check_keys(("signal", "decoy", "vacuum"))
    fractions = (
        r.number("signal", 0.5, lambda x: 0 <= x <= 1, "in [0, 1]"),
        r.number("decoy", 0.25, lambda x: 0 <= x <= 1, "in [0, 1]"),
        r.number("vacuum", 0.25, lambda x: 0 <= x <= 1, "in [0, 1]"),
    )
    if not math.isclose(sum(fractions), 1.0, abs_tol=1e-9):
        r.report("signal", f"the fractions must sum to 1, got {sum(fractions):g}")
        return 0.5, 0.25, 0.25
    return fractions


@dataclass(slots=True, frozen=True)
class ExperimentConfig:  # pylint: disable=too-many-instance-attributes
    """One fully resolved experiment series.

    Attributes
    ----------
    name: :class:`str`
        The experiment name (the figure file name).
    scenario: :class:`Scenario`
        What the series computes.
    label: :class:`str`
        The legend label of the series.
    mode: :class:`RunMode`
        Sampled or expected detector records.
    seed: :class:`int`
        The unsigned 64-bit experiment seed.
    n_total: :class:`int` | `None`
        Total number of pulses, `None` only for the trusted reference.
    confidence: :class:`float`
        The joint confidence level of the source bounds.
    distances: tuple[:class:`float`, ...]
        The distance grid in km.
    budget: tuple[:class:`float`, :class:`float`, :class:`float`]
        Signal, decoy and vacuum fractions of ``n_total``.
    """

    name: str
    scenario: Scenario
    label: str = ""
    mode: RunMode = RunMode.MONTE_CARLO
    seed: int = 0
    n_total: int | None = None
    confidence: float = _DEFAULT_CONFIDENCE
    distances: tuple[float, ...] = _grid(*_DEFAULT_GRID)
    source: SourceSettings = field(default_factory=SourceSettings)
    optical_path: OpticalPath = field(default_factory=OpticalPath)
    gys: GysParameters = field(default_factory=GysParameters)
    budget: tuple[float, float, float] = (0.5, 0.25, 0.25)
    noise: NoiseModel = field(default_factory=NoiseModel.none)
    pna: PnaSettings = field(default_factory=PnaSettings)
    voa: VoaSettings = field(default_factory=VoaSettings)

    @classmethod
    def from_dict(
        cls, data: Mapping[str, Any], *, where: str = "", source: str = "config"
    ) -> ExperimentConfig:
        """Creates and validates a config.

        Parameters
        ----------
        data: Mapping[:class:`str`, :class:`Any`]
            The config object.
        where: :class:`str`
            Prefix of the field paths in problem messages.
        source: :class:`str`
            Name of the config in the error message.

        Raises
        ------
        InvalidConfigFile
            One or more fields are invalid. All problems are listed.
        """
        r = _SectionReader(data, where)
        r.check_keys(_TOP_LEVEL_KEYS)
        name = r.text("name", "experiment")
        scenario = r.choice("scenario", Scenario, None)
        source_settings = SourceSettings.read(r.section("source"))
        config_kwargs: dict[str, Any] = {
            "name": name,
            "label": r.text("label", name),
            "mode": r.choice("mode", RunMode, RunMode.MONTE_CARLO),
            "seed": r.integer("seed", 0, lambda s: 0 <= s < _SEED_LIMIT, "an unsigned 64-bit integer"),
            "n_total": r.integer("n_total", None, lambda n: n >= 1, ">= 1"),
            "confidence": r.number(
                "confidence", _DEFAULT_CONFIDENCE, lambda c: 0 < c < 1, "in (0, 1)"
            ),
            "distances": _read_distances(r),
            "source": source_settings,
            "optical_path": r.build("optical_path", OpticalPath.from_dict, OpticalPath()),
            "gys": r.build("gys", GysParameters.from_dict, GysParameters()),
            "budget": _read_budget(r.section("budget")),
            "noise": _read_noise(r.section("noise"), source_settings.n_max),
            "pna": PnaSettings.read(r.section("pna")),
            "voa": VoaSettings.read(r.section("voa")),
        }
        if r.problems:
            raise InvalidConfigFile(r.problems, source)

        config = cls(scenario=cast(Scenario, scenario), **config_kwargs)
        config._cross_check(r)
        if r.problems:
            raise InvalidConfigFile(r.problems, source)
        return config

    def _cross_check(self, r: _SectionReader) -> None:  # pylint: disable=too-many-branches
        scenario = self.scenario
        needs_histograms = scenario in _SCENARIO_NOISE or scenario is Scenario.DETECTOR_DECOY

        if scenario is not Scenario.TRUSTED_REFERENCE and self.n_total is None:
            r.report("n_total", f"is required by scenario '{scenario.value}'")

        expected = _SCENARIO_NOISE.get(scenario, NoiseKind.NONE)
        if self.noise.kind is not expected:
            r.report(
                "noise.kind",
                f"scenario '{scenario.value}' needs '{expected.value}', "
                f"got '{self.noise.kind.value}'",
            )

        custom = self.source.custom is not None
        if custom and scenario in (Scenario.TRUSTED_REFERENCE, Scenario.PNA_SCHEME):
            r.report("source.custom", f"scenario '{scenario.value}' needs a Poissonian source")
        if not custom and not self.source.mu_decoy < self.source.mu_signal:
            r.report("source.mu_decoy", "must be below mu_signal")

        path = self.optical_path
        if not custom and self.source.calibration is Calibration.OPTICAL_PATH:
            if path.calibration_residual > path.calibration_tolerance:
                r.report(
                    "optical_path",
                    f"calibration residual {path.calibration_residual:.3%} exceeds "
                    f"the tolerance {path.calibration_tolerance:.3%}",
                )

        if self.n_total is not None:
            if self.mode is RunMode.MONTE_CARLO and self.n_total > _INT64_MAX:
                r.report("n_total", "does not fit a 64-bit counter; use mode 'deterministic'")
            n_signal, n_decoy, _ = split_budget(self.pulse_budget)
            smallest = 3 if scenario is Scenario.DETECTOR_DECOY else 1
            if needs_histograms and min(n_signal, n_decoy) < smallest:
                r.report("budget", f"leaves fewer than {smallest} signal or decoy pulses")

        if scenario is Scenario.PNA_SCHEME and not custom:
            try:
                window = self.pna_window
            except InvalidParameterError as e:
                r.report("pna", str(e))
                return
            for name, eta in zip(("eta_s", "eta_d"), self.pna_attenuations):
                if window.m_max is not None and window.m_max * eta >= 1:
                    r.report(
                        "pna",
                        f"m_max * {name} = {window.m_max * eta:.4g} must be below 1",
                    )

    def to_dict(self) -> dict[str, Any]:
        """Returns the resolved config as a JSON object."""
        return {
            "name": self.name,
            "label": self.label,
            "scenario": self.scenario.value,
            "mode": self.mode.value,
            "seed": self.seed,
            "n_total": self.n_total,
            "confidence": self.confidence,
            "distances": list(self.distances),
            "source": self.source.to_dict(),
            "optical_path": self.optical_path.to_dict(),
            "gys": self.gys.to_dict(),
            "budget": dict(zip(("signal", "decoy", "vacuum"), self.budget)),
            "noise": _noise_to_dict(self.noise),
            "pna": self.pna.to_dict(),
            "voa": self.voa.to_dict(),
        }

    @property
    def config_hash(self) -> str:
        """The first 16 hex digits of the SHA-256 of the canonical resolved config."""
        canonical = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]

    @property
    def pulse_budget(self) -> PulseBudget:
        """The pulse budget of the series."""
        if self.n_total is None:
            raise InvalidParameterError(f"scenario '{self.scenario.value}' has no pulse budget")
        return PulseBudget(self.n_total, *self.budget)

    def class_pnd(self, pulse_class: PulseClass) -> PhotonNumberDistribution:
        """The photoelectron distribution the monitor records for a class."""
        spec = self.source.spec
        if self.source.custom is not None:
            return spec.custom_pnd(pulse_class)
        if self.source.calibration is Calibration.OPTICAL_PATH:
            return pnd_at_p3(spec, self.optical_path, pulse_class)
        mu = self.source.mu_signal if pulse_class is PulseClass.SIGNAL else self.source.mu_decoy
        return poisson_pnd(mu, self.source.n_max)

    @property
    def channel_means(self) -> tuple[float, float]:
        """Mean photon numbers of the signal and decoy pulses sent to Bob."""
        if self.source.custom is not None:
            return self.source.custom[0].mean(), self.source.custom[1].mean()
        if self.source.calibration is Calibration.OPTICAL_PATH:
            spec = self.source.spec
            return (
                mean_at_p4(spec, self.optical_path, PulseClass.SIGNAL),
                mean_at_p4(spec, self.optical_path, PulseClass.DECOY),
            )
        return self.source.mu_signal, self.source.mu_decoy

    @property
    def monitor_mean(self) -> float:
        """Mean photon number of the bright pulse seen by the PNA."""
        if self.source.calibration is Calibration.OPTICAL_PATH:
            return self.source.apn_p1 * self.optical_path.eta_bs
        return self.source.mu_signal / self.optical_path.eta_s

    @property
    def pna_attenuations(self) -> tuple[float, float]:
        """Signal and decoy attenuations from the PNA monitor to Bob."""
        if self.source.calibration is Calibration.OPTICAL_PATH:
            return self.optical_path.eta_s, self.optical_path.eta_d
        mean = self.monitor_mean
        return self.source.mu_signal / mean, self.source.mu_decoy / mean

    @property
    def pna_window(self) -> UntaggedWindow:
        """The untagged window, given explicitly or around the monitor mean."""
        if self.pna.m_min is not None:
            return UntaggedWindow(self.pna.m_min, self.pna.m_max)
        return UntaggedWindow.around(self.monitor_mean, self.pna.window_fraction)


def _merge(base: Mapping[str, Any], override: Mapping[str, Any]) -> dict[str, Any]:
    merged = dict(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _merge(merged[key], value)
        else:
            merged[key] = value
    return merged


def load_experiment_file(
    data: Mapping[str, Any], source: str = "config"
) -> tuple[list[ExperimentConfig], PlotSpec]:
    """Resolves an experiment file into its series and its plot settings.

    Each variant is merged into the base object (nested objects key by key)
    and validated on its own; problems are prefixed with ``variants[i].``.

    Raises
    ------
    InvalidConfigFile
        The file or any variant is invalid.
    """
    base = {k: v for k, v in data.items() if k not in ("variants", "plot")}
    variants = data.get("variants", [])
    plot = data.get("plot", {})
    problems: list[str] = []

    if not isinstance(plot, dict):
        problems.append("plot: must be an object")
        plot = {}
    if not isinstance(variants, list):
        raise InvalidConfigFile(problems + ["variants: must be a list"], source)

    configs: list[ExperimentConfig] = []
    for i, variant in enumerate(variants or [{}]):
        where = f"variants[{i}]." if variants else ""
        if not isinstance(variant, dict):
            problems.append(f"variants[{i}]: must be an object")
            continue
        try:
            configs.append(ExperimentConfig.from_dict(_merge(base, variant), where=where))
        except InvalidConfigFile as e:
            problems.extend(e.problems)

    if problems:
        raise InvalidConfigFile(problems, source)
    plot.setdefault("title", configs[0].name)
    return configs, PlotSpec.from_dict(plot)


@dataclass(slots=True)
class ResultTable:
    """The output of one experiment series.

    Attributes
    ----------
    config: :class:`ExperimentConfig`
        The series config.
    reports: list[:class:`KeyRateReport`]
        One report per grid distance, in grid order.
    histograms: list[tuple[:class:`str`, :class:`CountHistogram`]]
        Detector records per pulse class.
    sweeps: list[tuple[:class:`str`, :class:`VoaSweep`]]
        VOA sweeps per pulse class.
    """

    config: ExperimentConfig
    reports: list[KeyRateReport] = field(default_factory=list)
    histograms: list[tuple[str, CountHistogram]] = field(default_factory=list)
    sweeps: list[tuple[str, VoaSweep]] = field(default_factory=list)

    @property
    def label(self) -> str:
        """The legend label."""
        return self.config.label

    @property
    def distances(self) -> list[float]:
        """The distances of the reports."""
        return [r.distance_km for r in self.reports]

    @property
    def rates(self) -> list[float]:
        """The key rates of the reports."""
        return [r.rate for r in self.reports]

    @property
    def flags(self) -> RateFlag:
        """All flags raised along the grid."""
        flags = RateFlag.NONE
        for report in self.reports:
            flags |= report.flags
        return flags

    def _provenance(self) -> dict[str, Any]:
        return {
            "schema_version": SCHEMA_VERSION,
            "config_hash": self.config.config_hash,
            "seed": self.config.seed,
            "label": self.config.label,
            "scenario": self.config.scenario.value,
            "mode": self.config.mode.value,
            "n_total": self.config.n_total,
        }

    def rate_rows(self) -> list[dict[str, Any]]:
        """Rows of ``rates.csv`` (every scenario except the PNA scheme)."""
        provenance = self._provenance()
        rows = []
        for report in self.reports:
            if isinstance(report, PnaKeyRateReport):
                continue
            row = dict(provenance)
            if report.observables is not None:
                row |= report.observables.to_row()
            if report.bounds is not None:
                row |= report.bounds.to_row()
            row |= report.to_row()
            rows.append(row)
        return rows

    def pna_rows(self) -> list[dict[str, Any]]:
        """Rows of ``pna_rates.csv``."""
        provenance = self._provenance()
        rows = []
        for report in self.reports:
            if not isinstance(report, PnaKeyRateReport):
                continue
            row = dict(provenance)
            if report.observables is not None:
                row |= report.observables.to_row()
            row |= report.to_row()
            rows.append(row)
        return rows

    def histogram_rows(self) -> list[dict[str, Any]]:
        """Rows of ``histograms.csv``."""
        provenance = self._provenance()
        return [
            provenance | {"class": name} | hist.to_row() for name, hist in self.histograms
        ]

    def sweep_rows(self) -> list[dict[str, Any]]:
        """Rows of ``sweeps.csv``."""
        provenance = self._provenance()
        return [
            provenance | {"class": name} | row
            for name, sweep in self.sweeps
            for row in sweep.to_rows()
        ]


def _observables(config: ExperimentConfig) -> list[ChannelObservables]:
    mu_s, mu_d = config.channel_means
    return [simulate_observables(mu_s, mu_d, config.gys, d) for d in config.distances]


def _run_trusted(config: ExperimentConfig, table: ResultTable, _: int) -> None:
    mu_s, mu_d = config.channel_means
    table.reports = [trusted_rate(mu_s, mu_d, obs) for obs in _observables(config)]


def _run_pnr(config: ExperimentConfig, table: ResultTable, variant_index: int) -> None:
    n_signal, n_decoy, _ = split_budget(config.pulse_budget)
    pnd_s = config.class_pnd(PulseClass.SIGNAL)
    pnd_d = config.class_pnd(PulseClass.DECOY)
    if config.mode is RunMode.MONTE_CARLO:
        hist_s, hist_d = sample_histogram_pair(
            pnd_s, pnd_d, config.noise, n_signal, n_decoy, config.seed, variant_index
        )
    else:
        hist_s = expected_histogram(pnd_s, config.noise, n_signal)
        hist_d = expected_histogram(pnd_d, config.noise, n_decoy)
    table.histograms = [("signal", hist_s), ("decoy", hist_d)]

    res = resolution_from_confidence(n_signal, n_decoy, config.confidence)
    bounds = estimate_bounds(hist_s, hist_d, res, config.noise)
    _log_bounds(config, bounds)
    table.reports = [untrusted_rate(bounds, obs) for obs in _observables(config)]


def _run_detector_decoy(config: ExperimentConfig, table: ResultTable, variant_index: int) -> None:
    n_signal, n_decoy, _ = split_budget(config.pulse_budget)
    per_signal, per_decoy = n_signal // 3, n_decoy // 3
    sampled = config.mode is RunMode.MONTE_CARLO
    voa = config.voa

    sweeps = []
    for class_index, (pulse_class, n_per_setting) in enumerate(
        ((PulseClass.SIGNAL, per_signal), (PulseClass.DECOY, per_decoy))
    ):
        sweeps.append(
            simulate_sweep(
                config.class_pnd(pulse_class),
                voa.etas,
                voa.dark_rate,
                n_per_setting if sampled else 0,
                config.seed,
                variant_index,
                class_index,
                dark_model=voa.dark_model,
            )
        )
    table.sweeps = [("signal", sweeps[0]), ("decoy", sweeps[1])]

    res = resolution_from_confidence(per_signal, per_decoy, config.confidence)
    bounds = sweep_to_source_bounds(sweeps[0], sweeps[1], res)
    _log_bounds(config, bounds)
    table.reports = [untrusted_rate(bounds, obs) for obs in _observables(config)]


def _run_pna(config: ExperimentConfig, table: ResultTable, variant_index: int) -> None:
    n_total = cast(int, config.n_total)
    mean = config.monitor_mean
    window = config.pna_window
    eta_s, eta_d = config.pna_attenuations
    if config.mode is RunMode.MONTE_CARLO:
        stats_ = sample_untagged_stats(
            mean,
            window,
            n_total,
            config.seed,
            variant_index,
            target_confidence=config.confidence,
            eps=config.pna.eps,
        )
    else:
        stats_ = analytic_untagged_stats(
            mean, window, n_total, config.confidence, config.pna.eps
        )
    Console.debug(
        f"{config.label}: window [{window.m_min}, {window.m_max}], "
        f"delta={stats_.delta:.3e}, eps={stats_.eps:.3e}, confidence={stats_.confidence:.6g}"
    )
    table.reports = [
        pna_key_rate(obs, stats_, window, eta_s, eta_d) for obs in _observables(config)
    ]


def _log_bounds(config: ExperimentConfig, bounds: SourceBounds) -> None:
    Console.debug(
        f"{config.label}: eps'={bounds.eps_signal:.3e} eps={bounds.eps_decoy:.3e} "
        f"a'=({bounds.a0p_lower:.6f}, {bounds.a1p_lower:.6f}, {bounds.a2p_lower:.6f}) "
        f"a=({bounds.a0_upper:.6f}, {bounds.a1_upper:.6f}, {bounds.a2_upper:.6f})"
    )


_RUNNERS: dict[Scenario, Callable[[ExperimentConfig, ResultTable, int], None]] = {
    Scenario.TRUSTED_REFERENCE: _run_trusted,
    Scenario.PNR_NOISELESS: _run_pnr,
    Scenario.PNR_POISSON_DARK: _run_pnr,
    Scenario.PNR_GENERAL_NOISE: _run_pnr,
    Scenario.DETECTOR_DECOY: _run_detector_decoy,
    Scenario.PNA_SCHEME: _run_pna,
}


def run_experiment(config: ExperimentConfig, variant_index: int = 0) -> ResultTable:
    """Runs one series over its distance grid.

    Random draws come from streams keyed by ``(seed, variant_index, class)``,
    so the result depends only on the config and the variant index.
    Numerical degeneracies become flags on the reports.

    Raises
    ------
    PnrMonError
        The config cannot be run (e.g. a pulse count does not fit a counter).
    """
    table = ResultTable(config)
    _RUNNERS[config.scenario](config, table, variant_index)

    flags = table.flags
    if flags != RateFlag.NONE:
        flagged = sum(1 for r in table.reports if r.flags != RateFlag.NONE)
        Console.warn(
            f"{config.label}: {flags.describe()} at {flagged} of {len(table.reports)} distances."
        )
    cutoff = cutoff_distance(table.distances, table.rates)
    if cutoff is None:
        Console.warn(f"{config.label}: no positive key rate on the grid.")
    else:
        Console.debug(f"{config.label}: positive key rate up to {cutoff:g} km.")
    return table


class ExperimentModel(Model):
    """Represents an experiment file.

    Attributes
    ----------
    configs: list[:class:`ExperimentConfig`]
        The resolved series.
    plot_spec: :class:`PlotSpec`
        The plot settings.
    """

    __slots__ = ("_configs", "_plot_spec")

    _configs: list[ExperimentConfig]
    _plot_spec: PlotSpec

    def _load_settings(self) -> None:
        try:
            super()._load_settings()
        except (json.JSONDecodeError, TypeError) as e:
            raise InvalidConfigFile([str(e)], str(self._settings_path)) from e
        self._configs, self._plot_spec = load_experiment_file(
            self._data, str(self._settings_path)
        )

    @property
    def configs(self) -> list[ExperimentConfig]:
        """The resolved series, in file order."""
        return self._configs

    @property
    def plot_spec(self) -> PlotSpec:
        """The plot settings."""
        return self._plot_spec

    @property
    def name(self) -> str:
        """The experiment name."""
        return self._configs[0].name

    def with_overrides(
        self, *, seed: int | None = None, mode: RunMode | None = None
    ) -> list[ExperimentConfig]:
        """The series with the seed and/or mode replaced."""
        configs = self._configs
        if seed is not None:
            if not 0 <= seed < _SEED_LIMIT:
                raise InvalidConfigFile(
                    [f"seed: must be an unsigned 64-bit integer, got {seed}"], "--seed"
                )
            configs = [replace(c, seed=seed) for c in configs]
        if mode is not None:
            configs = [replace(c, mode=mode) for c in configs]
        return configs


@dataclass(slots=True)
class ExperimentFigureModel(FigureModel):
    """Represents the figure of an experiment file."""

    @property
    def plot_spec(self) -> PlotSpec:
        """The plot settings of the experiment file."""
        return cast(ExperimentModel, self.model).plot_spec

    @property
    def figure_name(self) -> str:
        """The experiment name as a file name."""
        return PathUtils.slugify(cast(ExperimentModel, self.model).name)


class ExperimentController(ControllerWithFigure):
    """Runs the series of an experiment file and writes the outputs."""

    model: ExperimentModel

    def __init__(self, model: ExperimentModel) -> None:
        super().__init__(model, ExperimentFigureModel(model))

    async def run_all(
        self, configs: Sequence[ExperimentConfig] | None = None
    ) -> list[ResultTable]:
        """Runs all series concurrently.

        The tables are returned in config order.
        """
        configs = self.model.configs if configs is None else configs
        tables = await asyncio.gather(
            *(asyncio.to_thread(run_experiment, c, i) for i, c in enumerate(configs))
        )
        for table in tables:
            Console.info(f"Series '{table.label}' finished ({len(table.reports)} distances).")
        return list(tables)

    def write_outputs(
        self, tables: Sequence[ResultTable], out_dir: Path, *, plot: bool = True
    ) -> list[Path]:
        """Writes the CSV files (and the figure) of the tables.

        Only CSV files with at least one row are written.

        Returns
        -------
        list[:class:`Path`]
            Paths of the written files.
        """
        out_dir.mkdir(parents=True, exist_ok=True)
        outputs = (
            ("rates.csv", RATE_COLUMNS, ResultTable.rate_rows),
            ("pna_rates.csv", PNA_COLUMNS, ResultTable.pna_rows),
            ("histograms.csv", HISTOGRAM_COLUMNS, ResultTable.histogram_rows),
            ("sweeps.csv", SWEEP_COLUMNS, ResultTable.sweep_rows),
        )
        written = []
        for file_name, columns, rows_of in outputs:
            rows = [row for table in tables for row in rows_of(table)]
            if not rows:
                continue
            path = out_dir / file_name
            write_csv(rows, columns, path)
            Console.info(f"{len(rows)} rows saved to '{path}'.")
            written.append(path)

        if plot:
            try:
                written.append(self.save_figure(tables, out_dir))
            except PnrMonError as e:
                Console.error("The figure could not be drawn.", exception=e)
        return written


def write_csv(rows: Sequence[Mapping[str, Any]], columns: Sequence[str], path: Path) -> None:
    """Writes rows with a fixed column order, ``\\n`` line endings and full precision."""
    frame = pd.DataFrame(list(rows), columns=list(columns))
    frame.to_csv(path, index=False, lineterminator="\n", float_format="%.12g")
