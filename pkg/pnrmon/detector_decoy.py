# SPDX-License-Identifier: MIT
"""A module containing the detector-decoy realization of the PNR detector.

A threshold (click/no-click) detector behind a variable optical attenuator
(VOA) is read at three transmittances ``1 > eta_1 > eta_2``. The no-click
probability at transmittance ``eta`` is

    p(eta) = c * sum_n (1 - eta)^n p_n

where ``c`` is the probability that no dark count fires (``1 - lambda`` for
a single Bernoulli dark event, ``exp(-lambda)`` for Poissonian dark counts).
From the three values, ``p_0`` is recovered exactly and ``p_1``, ``p_2``
are bracketed.

With finite data each measured ``p(eta_i)`` is widened to ``[p - eps, p + eps]``
and every bound takes the worst corner of the intervals.

Examples
-------- ::

    sweep = simulate_sweep(poisson_pnd(0.5), (1.0, 0.9, 0.5), lam=1e-6)
    p_prime_bounds(sweep)  # PPrimeBounds(p0=0.6065..., p1_lower=0.30..., ...)
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any

from .bounds import ResolutionPair, SourceBounds
from .errors import (
    DegenerateDetectorError,
    InvalidParameterError,
    SingularSweepError,
)
from .photon_stats import PhotonNumberDistribution, binomial_thin
from .sampling import make_rng

DEFAULT_ETAS = (1.0, 0.5, 0.25)


class DarkCountModel(Enum):
    """How the threshold-detector dark counts suppress the no-click event."""

    BERNOULLI = "bernoulli"
    POISSON = "poisson"


def dark_survival(lam: float, dark_model: DarkCountModel) -> float:
    """Probability that no dark count fires in a gate."""
    if dark_model is DarkCountModel.BERNOULLI:
        return 1.0 - lam
    return math.exp(-lam)


@dataclass(slots=True, frozen=True)
class VoaSweep:
    """No-click probabilities measured at three VOA settings.

    Attributes
    ----------
    etas: tuple[:class:`float`, :class:`float`, :class:`float`]
        The transmittances ``(1, eta_1, eta_2)``.
    no_click: tuple[:class:`float`, :class:`float`, :class:`float`]
        The no-click probabilities (or frequencies) at each setting.
    lam: :class:`float`
        Dark count rate of the threshold detector.
    n_pulses_per_setting: :class:`int`
        Pulses per setting, ``0`` for exact probabilities.
    dark_model: :class:`DarkCountModel`
        The dark-count model.
    no_click_counts: tuple[:class:`int`, ...] | `None`
        The raw no-click counts of a sampled sweep.
    """

    etas: tuple[float, float, float]
    no_click: tuple[float, float, float]
    lam: float = 0.0
    n_pulses_per_setting: int = 0
    dark_model: DarkCountModel = DarkCountModel.BERNOULLI
    no_click_counts: tuple[int, int, int] | None = field(default=None, compare=False)

    def __post_init__(self) -> None:
        if len(self.etas) != 3 or len(self.no_click) != 3:
            raise InvalidParameterError("a sweep has exactly three settings")
        eta0, eta1, eta2 = self.etas
        if eta0 != 1.0:
            raise InvalidParameterError(f"the first setting must be eta_0 = 1, got {eta0}")
        if not 0.0 <= eta2 < eta1 <= 1.0:
            raise InvalidParameterError(
                f"need 0 <= eta_2 < eta_1 <= 1, got eta_1={eta1}, eta_2={eta2}"
            )
        if any(not 0.0 <= p <= 1.0 for p in self.no_click):
            raise InvalidParameterError(f"no-click values must be in [0, 1]: {self.no_click}")
        if not 0.0 <= self.lam <= 1.0 and self.dark_model is DarkCountModel.BERNOULLI:
            raise InvalidParameterError(f"lambda must be in [0, 1], got {self.lam}")
        if self.lam < 0:
            raise InvalidParameterError(f"lambda must be >= 0, got {self.lam}")
        if self.n_pulses_per_setting < 0:
            raise InvalidParameterError("n_pulses_per_setting must be >= 0")

    def to_rows(self) -> list[dict[str, Any]]:
        """Returns one CSV row per setting."""
        rows = []
        for i, (eta, p) in enumerate(zip(self.etas, self.no_click)):
            no_clicks: float | int = p
            clicks: float | int = 1.0 - p
            if self.no_click_counts is not None:
                no_clicks = self.no_click_counts[i]
                clicks = self.n_pulses_per_setting - no_clicks
            rows.append(
                {
                    "eta": eta,
                    "clicks": clicks,
                    "no_clicks": no_clicks,
                    "n_pulses": self.n_pulses_per_setting,
                }
            )
        return rows


@dataclass(slots=True, frozen=True)
class PPrimeBounds:
    """Bounds on the photon-number probabilities in front of the VOA.

    Attributes
    ----------
    p0: :class:`float`
        ``p(1) / c``, exact for exact inputs.
    p0_lower, p0_upper: :class:`float`
        ``p0`` widened by the resolution.
    p1_lower, p1_upper, p2_lower, p2_upper: :class:`float`
        Bounds on ``p_1`` and ``p_2``.
    """

    p0: float
    p1_lower: float
    p1_upper: float
    p2_lower: float
    p2_upper: float
    p0_lower: float = field(default=math.nan, kw_only=True)
    p0_upper: float = field(default=math.nan, kw_only=True)

    def __post_init__(self) -> None:
        if math.isnan(self.p0_lower):
            object.__setattr__(self, "p0_lower", self.p0)
        if math.isnan(self.p0_upper):
            object.__setattr__(self, "p0_upper", self.p0)

    @property
    def consistent(self) -> bool:
        """Whether every lower bound is at most its upper bound."""
        return self.p1_lower <= self.p1_upper and self.p2_lower <= self.p2_upper


def no_click_probability(
    pnd: PhotonNumberDistribution,
    eta: float,
    lam: float,
    dark_model: DarkCountModel = DarkCountModel.BERNOULLI,
) -> float:
    """``c * sum_n (1 - eta)^n p_n``, the vacuum term of the thinned distribution."""
    if not 0.0 <= eta <= 1.0:
        raise InvalidParameterError(f"eta must be in [0, 1], got {eta}")
    if lam < 0 or (dark_model is DarkCountModel.BERNOULLI and lam >= 1):
        raise InvalidParameterError(f"lambda must be in [0, 1), got {lam}")
    return dark_survival(lam, dark_model) * binomial_thin(pnd, eta)[0]


def _widen(value: float, eps: float) -> tuple[float, float]:
    return max(value - eps, 0.0), min(value + eps, 1.0)


def _clamp(value: float) -> float:
    return float(min(max(value, 0.0), 1.0))


def p_prime_bounds(sweep: VoaSweep, eps: float = 0.0) -> PPrimeBounds:  # pylint: disable=too-many-locals
    """Recovers ``p_0`` and brackets ``p_1``, ``p_2`` from a VOA sweep.

    Parameters
    ----------
    sweep: :class:`VoaSweep`
        The measured sweep.
    eps: :class:`float`
        Resolution of every measured no-click probability.

    Raises
    ------
    DegenerateDetectorError
        The detector always clicks (``c = 0``).
    SingularSweepError
        ``eta_1 = 1`` or ``eta_2 = 0``.
    """
    c = dark_survival(sweep.lam, sweep.dark_model)
    if c <= 0:
        raise DegenerateDetectorError(f"lambda = {sweep.lam}: the detector always clicks")
    _, eta1, eta2 = sweep.etas
    if eta1 >= 1.0 or eta2 <= 0.0:
        raise SingularSweepError(f"need eta_1 < 1 and eta_2 > 0, got {eta1}, {eta2}")

    t = 1.0 - eta1
    s = 1.0 - eta2
    q0_lo, q0_hi = _widen(sweep.no_click[0], eps)
    q1_lo, q1_hi = _widen(sweep.no_click[1], eps)
    q2_lo, q2_hi = _widen(sweep.no_click[2], eps)

    p1_upper = (q1_hi - q0_lo) / (c * t)
    p1_lower = (q1_lo - q0_hi * (1 - t**2) - c * t**2) / (c * (t - t**2))
    p2_upper = (q2_hi - q0_lo - c * s * p1_lower) / (c * s**2)
    p2_lower = (q2_lo - (1 - s**3) * q0_hi - c * (s - s**3) * p1_upper - c * s**3) / (
        c * (s**2 - s**3)
    )

    return PPrimeBounds(
        _clamp(sweep.no_click[0] / c),
        _clamp(p1_lower),
        _clamp(p1_upper),
        _clamp(p2_lower),
        _clamp(p2_upper),
        p0_lower=_clamp(q0_lo / c),
        p0_upper=_clamp(q0_hi / c),
    )


def simulate_sweep(  # pylint: disable=too-many-arguments
    pnd: PhotonNumberDistribution,
    etas: tuple[float, float, float] = DEFAULT_ETAS,
    lam: float = 0.0,
    n_pulses_per_setting: int = 0,
    seed: int = 0,
    *stream: int,
    dark_model: DarkCountModel = DarkCountModel.BERNOULLI,
) -> VoaSweep:
    """Measures the no-click probabilities of a source at three VOA settings.

    With ``n_pulses_per_setting = 0`` the exact probabilities are used,
    otherwise the no-click counts of each setting are drawn binomially
    from their own stream.
    """
    probs = tuple(no_click_probability(pnd, eta, lam, dark_model) for eta in etas)
    if n_pulses_per_setting == 0:
        return VoaSweep(tuple(etas), probs, lam, 0, dark_model)  # type: ignore

    counts = tuple(
        int(make_rng(seed, *stream, i).binomial(n_pulses_per_setting, p))
        for i, p in enumerate(probs)
    )
    freqs = tuple(k / n_pulses_per_setting for k in counts)
    return VoaSweep(
        tuple(etas), freqs, lam, n_pulses_per_setting, dark_model, counts  # type: ignore
    )


def sweep_to_source_bounds(
    sweep_signal: VoaSweep, sweep_decoy: VoaSweep, res: ResolutionPair
) -> SourceBounds:
    """Source bounds from the sweeps of a calibrated setup.

    The signal sweep gives the lower bounds on ``a'_m``, the decoy sweep the
    upper bounds on ``a_m``.
    """
    signal = p_prime_bounds(sweep_signal, res.eps_signal)
    decoy = p_prime_bounds(sweep_decoy, res.eps_decoy)
    _, eta1, eta2 = sweep_signal.etas
    return SourceBounds(
        decoy.p0_upper,
        decoy.p1_upper,
        decoy.p2_upper,
        signal.p0_lower,
        signal.p1_lower,
        signal.p2_lower,
        res.confidence,
        eps_signal=res.eps_signal,
        eps_decoy=res.eps_decoy,
        noise=f"detector-decoy(eta1={eta1:g},eta2={eta2:g},lambda={sweep_signal.lam:g})",
    )
