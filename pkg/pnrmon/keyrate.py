# SPDX-License-Identifier: MIT
"""A module containing the key-rate formulas of the three-intensity protocol.

The secure key rate of the signal class is

    R = 1/2 Q_s { D1 [1 - H2(E_s / D1)] - H2(E_s) }

where ``D1`` is the fraction of signal counts caused by single photons.
For an untrusted source ``D1`` is lower-bounded from :class:`SourceBounds`;
for a trusted Poissonian source the bounds are the exact Poisson values,
which gives the usual vacuum + weak decoy estimate.

Examples
-------- ::

    obs = simulate_observables(0.5, 0.1, GysParameters(), 20.0)
    report = untrusted_rate(bounds, obs)
    report.rate, report.delta1_s, report.flags
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Flag, auto
from typing import Any

from .bounds import SourceBounds
from .channel import ChannelObservables
from .errors import DegenerateBoundsError, InvalidParameterError
from .photon_stats import binary_entropy


class RateFlag(Flag):
    """Diagnostics attached to a key rate."""

    NONE = 0
    DEGENERATE_BOUNDS = auto()
    NO_SINGLE_PHOTONS = auto()
    QBER_TOO_HIGH = auto()
    NO_UNTAGGED_GUARANTEE = auto()
    MEANINGLESS_CONFIDENCE = auto()

    def describe(self) -> str:
        """Member names joined with ``|``, or an empty string."""
        return "|".join(
            member.name.lower()  # type: ignore
            for member in RateFlag
            if member is not RateFlag.NONE and member in self
        )


@dataclass(slots=True, frozen=True)
class KeyRateReport:
    """The secure key rate at one distance and the quantities behind it.

    Attributes
    ----------
    distance_km: :class:`float`
        Fiber length.
    rate: :class:`float`
        Secure bits per pulse, never negative.
    delta1_s: :class:`float`
        Lower bound on the single-photon fraction of the signal counts.
    e1_s: :class:`float`
        Upper bound on the single-photon error rate (``nan`` if undefined).
    flags: :class:`RateFlag`
        Why the rate is zero, if it is.
    bounds: :class:`SourceBounds` | `None`
        The source bounds used.
    observables: :class:`ChannelObservables` | `None`
        The channel observables used.
    """

    distance_km: float
    rate: float
    delta1_s: float
    e1_s: float
    flags: RateFlag = RateFlag.NONE
    bounds: SourceBounds | None = field(default=None, compare=False)
    observables: ChannelObservables | None = field(default=None, compare=False)

    def to_row(self) -> dict[str, Any]:
        """Returns the report as CSV columns."""
        return {
            "distance_km": self.distance_km,
            "rate": self.rate,
            "delta1_s": self.delta1_s,
            "e1_s": self.e1_s,
            "flags": self.flags.describe(),
        }


def _privacy_rate(q: float, e: float, delta1: float) -> tuple[float, float, RateFlag]:
    """Returns (rate, e1, flags) of ``1/2 Q {D1 [1 - H2(E / D1)] - H2(E)}``."""
    if q <= 0 or delta1 <= 0:
        return 0.0, math.nan, RateFlag.NO_SINGLE_PHOTONS
    e1 = e / delta1
    if e1 > 0.5:
        return 0.0, e1, RateFlag.QBER_TOO_HIGH
    rate = 0.5 * q * (delta1 * (1.0 - binary_entropy(e1)) - binary_entropy(e))
    return max(rate, 0.0), e1, RateFlag.NONE


def gllp_rate(q: float, e: float, p_multi: float) -> float:
    """The key rate when the multi-photon probability ``p_multi`` is known.

    ``D1 = (Q - P_multi) / Q``. A zero gain gives a zero rate.
    """
    if q <= 0:
        return 0.0
    rate, _, _ = _privacy_rate(q, e, (q - p_multi) / q)
    return rate


def delta1_lower(b: SourceBounds, obs: ChannelObservables) -> float:
    """Lower bound on the single-photon fraction of the signal counts.

    Raises
    ------
    DegenerateBoundsError
        ``a1 a'2 - a'1 a2 <= 0`` or ``Q_s = 0``.
    """
    denominator = b.a1_upper * b.a2p_lower - b.a1p_lower * b.a2_upper
    if denominator <= 0 or obs.qs <= 0:
        raise DegenerateBoundsError(
            f"a1*a'2 - a'1*a2 = {denominator:.3e}, Q_s = {obs.qs:.3e}"
        )
    numerator = b.a1p_lower * (
        b.a2p_lower * obs.qd
        - b.a2_upper * obs.qs
        - b.a2p_lower * b.a0_upper * obs.q0
        + b.a2_upper * b.a0p_lower * obs.q0
    )
    return min(max(numerator / (obs.qs * denominator), 0.0), 1.0)


def untrusted_rate(b: SourceBounds, obs: ChannelObservables) -> KeyRateReport:
    """The key rate of the signal class for a monitored untrusted source.

    Degenerate bounds do not raise; they give a zero rate with
    :attr:`RateFlag.DEGENERATE_BOUNDS`.
    """
    try:
        delta1 = delta1_lower(b, obs)
    except DegenerateBoundsError:
        return KeyRateReport(
            obs.distance_km, 0.0, 0.0, math.nan, RateFlag.DEGENERATE_BOUNDS, b, obs
        )
    rate, e1, flags = _privacy_rate(obs.qs, obs.es, delta1)
    return KeyRateReport(obs.distance_km, rate, delta1, e1, flags, b, obs)


def asymptotic_bounds(mu_s: float, mu_d: float) -> SourceBounds:
    """The exact Poisson probabilities of a source monitored with infinite data.

    Raises
    ------
    InvalidParameterError
        Unless ``0 < mu_d < mu_s``.
    """
    if not 0 < mu_d < mu_s:
        raise InvalidParameterError(f"need 0 < mu_d < mu_s, got {mu_d}, {mu_s}")
    ed, es = math.exp(-mu_d), math.exp(-mu_s)
    return SourceBounds(
        ed,
        mu_d * ed,
        mu_d**2 * ed / 2,
        es,
        mu_s * es,
        mu_s**2 * es / 2,
        1.0,
        noise="asymptotic",
    )


def trusted_rate(mu_s: float, mu_d: float, obs: ChannelObservables) -> KeyRateReport:
    """The key rate of a trusted Poissonian source."""
    return untrusted_rate(asymptotic_bounds(mu_s, mu_d), obs)


def printed_trusted_q1(mu_s: float, mu_d: float, obs: ChannelObservables) -> float:
    """The closed-form single-photon gain lower bound of a trusted source.

    Equal to ``delta1_lower(asymptotic_bounds(mu_s, mu_d), obs) * Q_s``
    before clamping.
    """
    if not 0 < mu_d < mu_s:
        raise InvalidParameterError(f"need 0 < mu_d < mu_s, got {mu_d}, {mu_s}")
    prefactor = mu_s**2 * math.exp(-mu_s) / (mu_d * (mu_s - mu_d))
    return prefactor * (
        obs.qd * math.exp(mu_d)
        - obs.qs * math.exp(mu_s) * mu_d**2 / mu_s**2
        - (mu_s**2 - mu_d**2) / mu_s**2 * obs.q0
    )
