# SPDX-License-Identifier: MIT
"""A module containing the passive photon-number-analyzer (PNA) scheme.

The PNA monitors the bright pulse before the attenuator and keeps only the
pulses whose photon number ``M`` lies in a window ``[M_min, M_max]``
("untagged" pulses). Knowing only that ``M`` is in the window, the output
distribution after an attenuator ``eta`` is bounded binomially, and
the gains and error rates of the untagged pulses are bounded from the
measured ones.

Binomial terms with ``M ~ 10^6`` are evaluated in log space.

Notes
-----
``delta`` is the fraction of pulses *outside* the window, so at least
``1 - delta - eps`` of the pulses are untagged.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Mapping

from scipy import special, stats

from .channel import ChannelObservables
from .errors import InvalidParameterError, NoUntaggedGuaranteeError, PreconditionError
from .keyrate import KeyRateReport, RateFlag
from .photon_stats import binary_entropy
from .sampling import make_rng


@dataclass(slots=True, frozen=True)
class UntaggedWindow:
    """The accepted photon-number range at the monitor.

    Attributes
    ----------
    m_min: :class:`int`
        Smallest accepted photon number.
    m_max: :class:`int` | `None`
        Largest accepted photon number, `None` for no upper limit.
    """

    m_min: int
    m_max: int | None

    def __post_init__(self) -> None:
        if self.m_min < 0:
            raise InvalidParameterError(f"m_min must be >= 0, got {self.m_min}")
        if self.m_max is not None and self.m_max < self.m_min:
            raise InvalidParameterError(
                f"m_max ({self.m_max}) must be >= m_min ({self.m_min})"
            )

    @classmethod
    def around(cls, mean: float, fraction: float = 0.1) -> UntaggedWindow:
        """``[ceil((1 - f) mean), floor((1 + f) mean)]``."""
        if mean <= 0 or not 0 <= fraction < 1:
            raise InvalidParameterError("need mean > 0 and fraction in [0, 1)")
        m_min = math.ceil((1 - fraction) * mean)
        m_max = max(math.floor((1 + fraction) * mean), m_min)
        return cls(m_min, m_max)

    def contains(self, m: int) -> bool:
        """Whether ``m`` is in the window."""
        return self.m_min <= m and (self.m_max is None or m <= self.m_max)

    def check_attenuation(self, eta: float) -> None:
        """Raises :class:`PreconditionError` unless ``m_max * eta < 1``."""
        if self.m_max is None or self.m_max * eta >= 1:
            raise PreconditionError(
                f"the output bounds need m_max * eta < 1 (m_max={self.m_max}, eta={eta})"
            )


@dataclass(slots=True, frozen=True)
class UntaggedStats:
    """The measured untagged statistics.

    Attributes
    ----------
    delta: :class:`float`
        Fraction of pulses outside the window.
    eps: :class:`float`
        Estimation resolution.
    confidence: :class:`float`
        Confidence level of ``eps`` (may be meaningless, e.g. <= 0).
    """

    delta: float
    eps: float
    confidence: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.delta <= 1.0:
            raise InvalidParameterError(f"delta must be in [0, 1], got {self.delta}")
        if self.eps < 0:
            raise InvalidParameterError(f"eps must be >= 0, got {self.eps}")

    @property
    def untagged_fraction(self) -> float:
        """``1 - delta - eps``; may be negative."""
        return 1.0 - self.delta - self.eps

    @property
    def meaningful(self) -> bool:
        """Whether the confidence level is a probability above 0."""
        return 0.0 < self.confidence <= 1.0


def pna_resolution(n_total: int, target_confidence: float) -> float:
    """``eps = sqrt(4 ln(2 / delta) / N)`` with ``delta = 1 - target_confidence``.

    ``delta = 2`` gives ``eps = 0``.
    """
    if n_total < 1:
        raise InvalidParameterError("n_total must be >= 1")
    delta = 1.0 - target_confidence
    if not 0.0 < delta <= 2.0:
        raise InvalidParameterError(f"1 - confidence must be in (0, 2], got {delta}")
    return math.sqrt(4.0 * math.log(2.0 / delta) / n_total)


def pna_confidence(n_total: int, eps: float) -> float:
    """The confidence ``1 - 2 exp(-N eps^2 / 4)`` of a given resolution.

    Small resolutions give values at or below 0, which carry no guarantee.
    """
    if n_total < 1 or eps < 0:
        raise InvalidParameterError("need n_total >= 1 and eps >= 0")
    return 1.0 - 2.0 * math.exp(-n_total * eps**2 / 4.0)


def _resolve(
    n_total: int, target_confidence: float, eps: float | None
) -> tuple[float, float]:
    if eps is None:
        return pna_resolution(n_total, target_confidence), target_confidence
    return eps, pna_confidence(n_total, eps)


def untagged_fraction(
    counts: Mapping[int, int],
    window: UntaggedWindow,
    target_confidence: float = 1 - 1e-6,
) -> UntaggedStats:
    """Counts the pulses outside the window.

    Parameters
    ----------
    counts: Mapping[:class:`int`, :class:`int`]
        Number of pulses per recorded photon number.
    window: :class:`UntaggedWindow`
        The accepted range.
    target_confidence: :class:`float`
        Confidence level of the resolution.
    """
    n_total = sum(counts.values())
    outside = sum(n for m, n in counts.items() if not window.contains(m))
    return UntaggedStats(
        outside / n_total,
        pna_resolution(n_total, target_confidence),
        target_confidence,
    )


def poisson_outside_fraction(mean: float, window: UntaggedWindow) -> float:
    """Probability that a Poisson photon number falls outside the window."""
    below = stats.poisson.cdf(window.m_min - 1, mean) if window.m_min > 0 else 0.0
    above = stats.poisson.sf(window.m_max, mean) if window.m_max is not None else 0.0
    return float(min(below + above, 1.0))


def analytic_untagged_stats(
    mean: float,
    window: UntaggedWindow,
    n_total: int,
    target_confidence: float = 1 - 1e-6,
    eps: float | None = None,
) -> UntaggedStats:
    """The untagged statistics of a Poisson monitor without sampling noise.

    A given ``eps`` replaces the one derived from the confidence, and the
    confidence recorded is the one that ``eps`` implies.
    """
    eps, confidence = _resolve(n_total, target_confidence, eps)
    return UntaggedStats(poisson_outside_fraction(mean, window), eps, confidence)


def sample_untagged_stats(  # pylint: disable=too-many-arguments
    mean: float,
    window: UntaggedWindow,
    n_total: int,
    seed: int,
    *stream: int,
    target_confidence: float = 1 - 1e-6,
    eps: float | None = None,
) -> UntaggedStats:
    """Draws the number of pulses outside the window of a Poisson monitor."""
    p_out = poisson_outside_fraction(mean, window)
    outside = int(make_rng(seed, *stream).binomial(n_total, p_out))
    eps, confidence = _resolve(n_total, target_confidence, eps)
    return UntaggedStats(outside / n_total, eps, confidence)


def _require_guarantee(stats_: UntaggedStats) -> float:
    fraction = stats_.untagged_fraction
    if fraction <= 0:
        raise NoUntaggedGuaranteeError(
            f"1 - delta - eps = {fraction:.3e}: no untagged pulses are guaranteed"
        )
    return fraction


def untagged_gain_bounds(q: float, stats_: UntaggedStats) -> tuple[float, float]:
    """Returns ``(upper, lower)`` gains of the untagged pulses.

    Raises
    ------
    NoUntaggedGuaranteeError
        ``1 - delta - eps <= 0``.
    """
    fraction = _require_guarantee(stats_)
    loss = stats_.delta + stats_.eps
    return q / fraction, max(0.0, (q - loss) / fraction)


def untagged_qber_bounds(
    qe_product: float, stats_: UntaggedStats
) -> tuple[float, float]:
    """Returns ``(upper, lower)`` of ``Q E`` for the untagged pulses."""
    return untagged_gain_bounds(qe_product, stats_)


def _log_binomial_term(m: int, n: int, eta: float) -> float:
    return (
        special.gammaln(m + 1)
        - special.gammaln(n + 1)
        - special.gammaln(m - n + 1)
        + n * math.log(eta)
        + (m - n) * math.log1p(-eta)
    )


def output_pnd_bounds(
    window: UntaggedWindow, eta: float, n: int
) -> tuple[float, float]:
    """Returns ``(upper, lower)`` on the probability of ``n`` photons after ``eta``.

    Raises
    ------
    PreconditionError
        ``m_max * eta >= 1``.
    """
    window.check_attenuation(eta)
    m_min, m_max = window.m_min, int(window.m_max)  # type: ignore
    if n < 0:
        raise InvalidParameterError(f"n must be >= 0, got {n}")
    if n == 0:
        return (
            math.exp(m_min * math.log1p(-eta)),
            math.exp(m_max * math.log1p(-eta)),
        )
    upper = math.exp(_log_binomial_term(m_max, n, eta)) if n <= m_max else 0.0
    lower = math.exp(_log_binomial_term(m_min, n, eta)) if n <= m_min else 0.0
    return upper, lower


def _window_correction(window: UntaggedWindow, eta_d: float, p2s_lower: float) -> float:
    """``(M_max - M_min) (1 - eta_d)^(M_max - M_min - 1) P2s_lower / (M_min + 1)!``."""
    width = int(window.m_max) - window.m_min  # type: ignore
    if width == 0 or p2s_lower == 0:
        return 0.0
    log_term = (
        math.log(width)
        + (width - 1) * math.log1p(-eta_d)
        + math.log(p2s_lower)
        - special.gammaln(window.m_min + 2)
    )
    return math.exp(log_term)


@dataclass(slots=True, frozen=True)
class PnaKeyRateReport(KeyRateReport):
    """:class:`KeyRateReport` with the PNA intermediates."""

    delta: float = field(default=0.0, kw_only=True)
    eps: float = field(default=0.0, kw_only=True)
    confidence: float = field(default=1.0, kw_only=True)
    m_min: int = field(default=0, kw_only=True)
    m_max: int = field(default=0, kw_only=True)
    q1_lower: float = field(default=0.0, kw_only=True)
    e1_upper: float = field(default=math.nan, kw_only=True)

    def to_row(self) -> dict[str, Any]:
        """Returns the report as PNA CSV columns."""
        return {
            "distance_km": self.distance_km,
            "rate": self.rate,
            "delta": self.delta,
            "eps": self.eps,
            "confidence": self.confidence,
            "m_min": self.m_min,
            "m_max": self.m_max,
            "q1_lower": self.q1_lower,
            "e1_upper": self.e1_upper,
            "flags": self.flags.describe(),
        }


def pna_key_rate(  # pylint: disable=too-many-locals
    obs: ChannelObservables,
    stats_: UntaggedStats,
    window: UntaggedWindow,
    eta_s: float,
    eta_d: float,
) -> PnaKeyRateReport:
    """The key rate of the signal class when the source is monitored by a PNA.

    ``R = 1/2 {-Q_s H2(E_s) + (1 - delta - eps) Q1s_lower [1 - H2(e1s_upper)]}``

    Raises
    ------
    PreconditionError
        ``m_max * eta >= 1`` for either attenuator.
    """
    window.check_attenuation(eta_s)
    window.check_attenuation(eta_d)

    def report(rate: float, flags: RateFlag, q1: float = 0.0, e1: float = math.nan):
        if not stats_.meaningful:
            flags |= RateFlag.MEANINGLESS_CONFIDENCE
        return PnaKeyRateReport(
            obs.distance_km,
            rate,
            q1 / obs.qs if obs.qs > 0 else 0.0,
            e1,
            flags,
            None,
            obs,
            delta=stats_.delta,
            eps=stats_.eps,
            confidence=stats_.confidence,
            m_min=window.m_min,
            m_max=int(window.m_max),  # type: ignore
            q1_lower=q1,
            e1_upper=e1,
        )

    try:
        qs_upper, _ = untagged_gain_bounds(obs.qs, stats_)
        _, qd_lower = untagged_gain_bounds(obs.qd, stats_)
        esqs_upper, _ = untagged_qber_bounds(obs.es * obs.qs, stats_)
    except NoUntaggedGuaranteeError:
        return report(0.0, RateFlag.NO_UNTAGGED_GUARANTEE)
    fraction = stats_.untagged_fraction

    _, p0s_lower = output_pnd_bounds(window, eta_s, 0)
    _, p1s_lower = output_pnd_bounds(window, eta_s, 1)
    _, p2s_lower = output_pnd_bounds(window, eta_s, 2)
    p0d_upper, _ = output_pnd_bounds(window, eta_d, 0)
    p1d_upper, _ = output_pnd_bounds(window, eta_d, 1)
    p2d_upper, _ = output_pnd_bounds(window, eta_d, 2)

    denominator = p1d_upper * p2s_lower - p1s_lower * p2d_upper
    if denominator <= 0:
        return report(0.0, RateFlag.DEGENERATE_BOUNDS)

    q1 = (
        p1s_lower
        / denominator
        * (
            qd_lower * p2s_lower
            - qs_upper * p2d_upper
            + p0s_lower * p2d_upper * obs.q0
            - p0d_upper * p2s_lower * obs.q0
            - _window_correction(window, eta_d, p2s_lower)
        )
    )
    if q1 <= 0:
        return report(0.0, RateFlag.NO_SINGLE_PHOTONS, 0.0)

    e1 = (esqs_upper - p0s_lower * obs.e0 * obs.q0) / q1
    if e1 > 0.5:
        return report(0.0, RateFlag.QBER_TOO_HIGH, q1, e1)

    rate = 0.5 * (
        -obs.qs * binary_entropy(obs.es)
        + fraction * q1 * (1.0 - binary_entropy(max(e1, 0.0)))
    )
    return report(max(rate, 0.0), RateFlag.NONE, q1, e1)

