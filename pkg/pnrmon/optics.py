# SPDX-License-Identifier: MIT
"""A module containing the model of Alice's optical path.

Light leaves the laser at P1, passes the filter and the phase randomizer,
is attenuated by ``eta_s`` (signal) or ``eta_d`` (decoy), encoded, and then
split by the beam splitter: ``eta_bs`` goes to the channel (P4) and the rest
to the PNR detector of efficiency ``eta_det`` (P3). The filter, the phase
randomizer and the encoder do not change the photon number.

When ``eta_det * (1 - eta_bs) == eta_bs`` the detector sees the same
photon-number distribution as the one sent to Bob.

Examples
-------- ::

    path = OpticalPath(eta_s=5e-7, eta_d=1e-7, eta_bs=0.13, eta_det=0.15)
    spec = SourceSpec.poissonian(7.69e6)
    mean_at_p4(spec, path, PulseClass.SIGNAL)  # 0.49985
    pnd_at_p3(spec, path, PulseClass.SIGNAL)   # Poisson(0.50178...)
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Mapping

from .errors import CalibrationError, InvalidParameterError, UnsupportedForCustomError
from .photon_stats import DEFAULT_N_MAX, PhotonNumberDistribution, poisson_pnd

DEFAULT_CALIBRATION_TOLERANCE = 0.01


class PulseClass(Enum):
    """The intensity classes of the three-intensity protocol."""

    SIGNAL = "signal"
    DECOY = "decoy"
    VACUUM = "vacuum"


class SourceStatistics(Enum):
    """How the source photon statistics are given."""

    POISSONIAN = "poissonian"
    CUSTOM = "custom"


@dataclass(slots=True, frozen=True)
class OpticalPath:
    """Transmittances of Alice's optical path.

    Attributes
    ----------
    eta_s: :class:`float`
        Signal attenuator transmittance.
    eta_d: :class:`float`
        Decoy attenuator transmittance.
    eta_bs: :class:`float`
        Beam-splitter transmittance toward the channel.
    eta_det: :class:`float`
        Detection efficiency of the PNR detector.
    calibration_tolerance: :class:`float`
        The largest accepted relative calibration residual.
    """

    eta_s: float = 5e-7
    eta_d: float = 1e-7
    eta_bs: float = 0.13
    eta_det: float = 0.15
    calibration_tolerance: float = field(default=DEFAULT_CALIBRATION_TOLERANCE)

    def __post_init__(self) -> None:
        for name in ("eta_s", "eta_d", "eta_bs", "eta_det"):
            value = getattr(self, name)
            if not math.isfinite(value) or not 0.0 < value <= 1.0:
                raise InvalidParameterError(f"{name} must be in (0, 1], got {value}")
        if self.eta_bs == 1.0:
            raise InvalidParameterError("eta_bs = 1 leaves no light for the monitor")
        if self.calibration_tolerance < 0:
            raise InvalidParameterError("calibration_tolerance must be >= 0")

    @classmethod
    def exactly_calibrated(
        cls, eta_s: float = 5e-7, eta_d: float = 1e-7, eta_bs: float = 0.13
    ) -> OpticalPath:
        """A path whose detector efficiency is ``eta_bs / (1 - eta_bs)``."""
        return cls(eta_s, eta_d, eta_bs, eta_bs / (1.0 - eta_bs))

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> OpticalPath:
        """Creates the path from a config section; missing keys take defaults."""
        return cls(**{k: float(v) for k, v in data.items()})

    def to_dict(self) -> dict[str, float]:
        """Returns the path as a config section."""
        return {
            "eta_s": self.eta_s,
            "eta_d": self.eta_d,
            "eta_bs": self.eta_bs,
            "eta_det": self.eta_det,
            "calibration_tolerance": self.calibration_tolerance,
        }

    def attenuation(self, pulse_class: PulseClass) -> float:
        """The attenuator transmittance of the class (0 for vacuum)."""
        if pulse_class is PulseClass.SIGNAL:
            return self.eta_s
        if pulse_class is PulseClass.DECOY:
            return self.eta_d
        return 0.0

    @property
    def calibration_residual(self) -> float:
        """``|eta_det (1 - eta_bs) - eta_bs| / eta_bs``."""
        return abs(self.eta_det * (1.0 - self.eta_bs) - self.eta_bs) / self.eta_bs

    def check_calibration(self) -> None:
        """Raises :class:`CalibrationError` if the residual exceeds the tolerance."""
        residual = self.calibration_residual
        if residual > self.calibration_tolerance:
            raise CalibrationError(
                f"calibration residual {residual:.3%} exceeds "
                f"the tolerance {self.calibration_tolerance:.3%}"
            )


@dataclass(slots=True, frozen=True)
class SourceSpec:
    """The untrusted source.

    A Poissonian source is described by its average photon number at P1.
    A custom source carries the low-intensity distributions at P3/P4
    directly, one per pulse class.
    """

    apn_p1: float = 7.69e6
    statistics: SourceStatistics = SourceStatistics.POISSONIAN
    custom: Mapping[PulseClass, PhotonNumberDistribution] = field(
        default_factory=dict, compare=False
    )
    n_max: int = DEFAULT_N_MAX

    def __post_init__(self) -> None:
        if self.statistics is SourceStatistics.POISSONIAN:
            if not math.isfinite(self.apn_p1) or self.apn_p1 <= 0:
                raise InvalidParameterError(f"apn_p1 must be > 0, got {self.apn_p1}")
        else:
            for pulse_class in (PulseClass.SIGNAL, PulseClass.DECOY):
                if pulse_class not in self.custom:
                    raise InvalidParameterError(
                        f"custom source has no {pulse_class.value} distribution"
                    )

    @classmethod
    def poissonian(cls, apn_p1: float, n_max: int = DEFAULT_N_MAX) -> SourceSpec:
        """A Poissonian source with the given mean at P1."""
        return cls(apn_p1=apn_p1, n_max=n_max)

    @classmethod
    def from_custom(
        cls,
        signal: PhotonNumberDistribution,
        decoy: PhotonNumberDistribution,
    ) -> SourceSpec:
        """A source given by its distributions at P4."""
        return cls(
            apn_p1=math.nan,
            statistics=SourceStatistics.CUSTOM,
            custom={PulseClass.SIGNAL: signal, PulseClass.DECOY: decoy},
            n_max=max(signal.n_max, decoy.n_max),
        )

    def custom_pnd(self, pulse_class: PulseClass) -> PhotonNumberDistribution:
        """The stored distribution of the class (vacuum is always the vacuum)."""
        if pulse_class is PulseClass.VACUUM:
            return PhotonNumberDistribution.delta(0, self.n_max)
        return self.custom[pulse_class]


def _require_poissonian(spec: SourceSpec) -> None:
    if spec.statistics is not SourceStatistics.POISSONIAN:
        raise UnsupportedForCustomError(
            "custom sources carry their P4 distributions directly"
        )


def mean_at_position2(
    spec: SourceSpec, path: OpticalPath, pulse_class: PulseClass
) -> float:
    """The average photon number after the attenuator, before the beam splitter."""
    _require_poissonian(spec)
    return spec.apn_p1 * path.attenuation(pulse_class)


def mean_at_p4(spec: SourceSpec, path: OpticalPath, pulse_class: PulseClass) -> float:
    """The average photon number sent to Bob, ``apn_p1 * eta_class * eta_bs``.

    Raises
    ------
    UnsupportedForCustomError
        The source is not Poissonian.
    """
    return mean_at_position2(spec, path, pulse_class) * path.eta_bs


def mean_at_p3(spec: SourceSpec, path: OpticalPath, pulse_class: PulseClass) -> float:
    """The average photoelectron number of the PNR detector."""
    return mean_at_position2(spec, path, pulse_class) * (1.0 - path.eta_bs) * path.eta_det


def pnd_at_p4(
    spec: SourceSpec, path: OpticalPath, pulse_class: PulseClass
) -> PhotonNumberDistribution:
    """The photon-number distribution sent to Bob."""
    if spec.statistics is SourceStatistics.CUSTOM:
        return spec.custom_pnd(pulse_class)
    return poisson_pnd(mean_at_p4(spec, path, pulse_class), spec.n_max)


def pnd_at_p3(
    spec: SourceSpec, path: OpticalPath, pulse_class: PulseClass
) -> PhotonNumberDistribution:
    """The photoelectron distribution recorded by the PNR detector.

    Raises
    ------
    CalibrationError
        The path is not calibrated within its tolerance.
    """
    path.check_calibration()
    if spec.statistics is SourceStatistics.CUSTOM:
        return spec.custom_pnd(pulse_class)
    return poisson_pnd(mean_at_p3(spec, path, pulse_class), spec.n_max)
