# SPDX-License-Identifier: MIT
"""A module containing the fiber channel model of Bob's observables.

The gain and the error rate of a class with mean photon number ``mu``
follow the usual decoy-state channel model:

- ``Q = Y0 + 1 - exp(-eta mu)`` (or ``1 - (1 - Y0) exp(-eta mu)``),
- ``E Q = e0 Y0 + e_det (1 - exp(-eta mu))``,

with ``eta = eta_bob * 10^(-alpha L / 10)``. Absolute curve positions
depend on this choice of model.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Any, Iterable, Mapping

from .errors import InvalidParameterError


class GainModel(Enum):
    """How the dark counts enter the gain."""

    ADDITIVE = "additive"
    COMPLEMENTARY = "complementary"


@dataclass(slots=True, frozen=True)
class GysParameters:
    """Experimental parameters of the fiber link.

    Attributes
    ----------
    eta_bob: :class:`float`
        Bob's detection efficiency including his optics.
    alpha: :class:`float`
        Fiber loss in dB/km.
    y0: :class:`float`
        Dark count probability per pulse.
    e_det: :class:`float`
        Misalignment error probability.
    e0: :class:`float`
        Error probability of a dark count.
    gain_model: :class:`GainModel`
        How the dark counts enter the gain.
    """

    eta_bob: float = 0.045
    alpha: float = 0.21
    y0: float = 1.7e-6
    e_det: float = 0.033
    e0: float = 0.5
    gain_model: GainModel = GainModel.ADDITIVE

    def __post_init__(self) -> None:
        for name in ("eta_bob", "y0", "e_det", "e0"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise InvalidParameterError(f"{name} must be in [0, 1], got {value}")
        if not self.alpha >= 0:
            raise InvalidParameterError(f"alpha must be >= 0, got {self.alpha}")

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> GysParameters:
        """Creates the parameters from a config section."""
        kwargs: dict[str, Any] = {k: float(v) for k, v in data.items() if k != "gain_model"}
        if "gain_model" in data:
            kwargs["gain_model"] = GainModel(data["gain_model"])
        return cls(**kwargs)

    def to_dict(self) -> dict[str, Any]:
        """Returns the parameters as a config section."""
        return {
            "eta_bob": self.eta_bob,
            "alpha": self.alpha,
            "y0": self.y0,
            "e_det": self.e_det,
            "e0": self.e0,
            "gain_model": self.gain_model.value,
        }


@dataclass(slots=True, frozen=True)
class ChannelObservables:
    """Bob's observables at one distance.

    Attributes
    ----------
    distance_km: :class:`float`
        Fiber length.
    q0, qd, qs: :class:`float`
        Gains of the vacuum, decoy and signal classes.
    ed, es: :class:`float`
        Error rates of the decoy and signal classes.
    e0: :class:`float`
        Error rate of the vacuum class.
    """

    distance_km: float
    q0: float
    qd: float
    qs: float
    ed: float
    es: float
    e0: float = 0.5

    def __post_init__(self) -> None:
        for name in ("q0", "qd", "qs"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise InvalidParameterError(f"{name} must be in [0, 1], got {value}")
        for name in ("ed", "es", "e0"):
            value = getattr(self, name)
            if not 0.0 <= value <= 0.5:
                raise InvalidParameterError(f"{name} must be in [0, 0.5], got {value}")

    def to_row(self) -> dict[str, Any]:
        """Returns the observables as CSV columns."""
        return {
            "q0": self.q0,
            "qd": self.qd,
            "qs": self.qs,
            "ed": self.ed,
            "es": self.es,
        }


def overall_transmittance(params: GysParameters, distance_km: float) -> float:
    """``eta_bob * 10^(-alpha * L / 10)``."""
    if distance_km < 0:
        raise InvalidParameterError(f"distance must be >= 0, got {distance_km}")
    return params.eta_bob * 10 ** (-params.alpha * distance_km / 10)


def gain_and_error(
    mu: float, eta: float, params: GysParameters
) -> tuple[float, float]:
    """The gain and the error rate of a class with mean photon number ``mu``."""
    if mu < 0:
        raise InvalidParameterError(f"mu must be >= 0, got {mu}")
    detected = -math.expm1(-eta * mu)
    if params.gain_model is GainModel.ADDITIVE:
        gain = min(params.y0 + detected, 1.0)
    else:
        gain = 1.0 - (1.0 - params.y0) * (1.0 - detected)
    if gain == 0:
        return 0.0, params.e0
    error = (params.e0 * params.y0 + params.e_det * detected) / gain
    return gain, min(error, 0.5)


def simulate_observables(
    mu_s: float, mu_d: float, params: GysParameters, distance_km: float
) -> ChannelObservables:
    """Bob's gains and error rates of the three classes at ``distance_km``."""
    eta = overall_transmittance(params, distance_km)
    qs, es = gain_and_error(mu_s, eta, params)
    qd, ed = gain_and_error(mu_d, eta, params)
    q0, e0 = gain_and_error(0.0, eta, params)
    return ChannelObservables(distance_km, q0, qd, qs, ed, es, e0)


def cutoff_distance(distances: Iterable[float], rates: Iterable[float]) -> float | None:
    """The largest distance with a positive rate, or `None`."""
    positive = [d for d, r in zip(distances, rates) if r > 0]
    return max(positive) if positive else None
