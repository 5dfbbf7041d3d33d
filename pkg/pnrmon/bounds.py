# SPDX-License-Identifier: MIT
"""A module containing finite-size bounds on the source photon statistics.

The signal-source probabilities ``a'_m`` are bounded from below and the
decoy-source probabilities ``a_m`` from above, for ``m = 0, 1, 2``, from the
PNR records of the two classes. Three detector models are supported:
noiseless, Poissonian dark counts and general additive noise.

Each bound is a linear form in the measured frequencies. The resolution
enters every term with the sign that makes the bound worse, and the result
is clamped to [0, 1].

Examples
-------- ::

    res = resolution_from_confidence(5 * 10**7, 2 * 10**7, 1 - 1e-6)
    bounds = poisson_noise_bounds(hist_s, hist_d, res, lam=0.1)
    bounds.a1p_lower
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .errors import InvalidParameterError, SingularDeconvolutionError
from .photon_stats import NoiseKind, NoiseModel, PhotonNumberDistribution
from .sampling import CountHistogram

# Six two-sided events per class share the failure budget.
_EVENTS_PER_CLASS = 6


@dataclass(slots=True, frozen=True)
class ResolutionPair:
    """The estimation resolutions of the two classes.

    Attributes
    ----------
    eps_signal: :class:`float`
        Resolution of the signal frequencies.
    eps_decoy: :class:`float`
        Resolution of the decoy frequencies.
    confidence: :class:`float`
        The joint confidence the resolutions were derived for.
    """

    eps_signal: float
    eps_decoy: float
    confidence: float = 1.0

    def __post_init__(self) -> None:
        if self.eps_signal < 0 or self.eps_decoy < 0:
            raise InvalidParameterError("resolutions must be >= 0")
        if not 0.0 < self.confidence <= 1.0:
            raise InvalidParameterError("confidence must be in (0, 1]")
        if self.confidence == 1.0 and (self.eps_signal or self.eps_decoy):
            raise InvalidParameterError("confidence 1 needs zero resolution")

    @classmethod
    def zero(cls) -> ResolutionPair:
        """The infinite-data resolution."""
        return cls(0.0, 0.0, 1.0)


def hoeffding_resolution(n_pulses: int, failure: float) -> float:
    """``sqrt(2 ln(6 / failure) / n)``: the resolution of one class."""
    return math.sqrt(2.0 * math.log(_EVENTS_PER_CLASS / failure) / n_pulses)


def resolution_from_confidence(
    n_signal: int, n_decoy: int, target_confidence: float
) -> ResolutionPair:
    """Splits the failure budget equally between the two classes.

    With ``delta = 1 - target_confidence`` each class gets ``delta / 2``,
    so ``6 exp(-Ns eps'^2 / 2) + 6 exp(-Nd eps^2 / 2) = delta``.

    Raises
    ------
    InvalidParameterError
        A count is below 1 or the confidence is outside (0, 1).
    """
    if n_signal < 1 or n_decoy < 1:
        raise InvalidParameterError("pulse counts must be >= 1")
    delta = 1.0 - target_confidence
    if not 0.0 < delta < 1.0:
        raise InvalidParameterError(
            f"target confidence must be in (0, 1), got {target_confidence}"
        )
    return ResolutionPair(
        hoeffding_resolution(n_signal, delta / 2),
        hoeffding_resolution(n_decoy, delta / 2),
        target_confidence,
    )


@dataclass(slots=True, frozen=True)
class SourceBounds:
    """Bounds on the vacuum, single- and two-photon probabilities of the source.

    Attributes
    ----------
    a0_upper, a1_upper, a2_upper: :class:`float`
        Upper bounds for the decoy source.
    a0p_lower, a1p_lower, a2p_lower: :class:`float`
        Lower bounds for the signal source.
    confidence: :class:`float`
        The confidence level of the six bounds together.
    eps_signal, eps_decoy: :class:`float`
        The resolutions used.
    noise: :class:`str`
        A label of the detector noise model.
    """

    a0_upper: float
    a1_upper: float
    a2_upper: float
    a0p_lower: float
    a1p_lower: float
    a2p_lower: float
    confidence: float
    eps_signal: float = field(default=0.0, kw_only=True)
    eps_decoy: float = field(default=0.0, kw_only=True)
    noise: str = field(default="none", kw_only=True)

    def __post_init__(self) -> None:
        for name in self.__slots__[:6]:
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise InvalidParameterError(f"{name} must be in [0, 1], got {value}")
        if not 0.0 < self.confidence <= 1.0:
            raise InvalidParameterError("confidence must be in (0, 1]")

    @property
    def upper(self) -> tuple[float, float, float]:
        """``(a0, a1, a2)`` upper bounds of the decoy source."""
        return self.a0_upper, self.a1_upper, self.a2_upper

    @property
    def lower(self) -> tuple[float, float, float]:
        """``(a'0, a'1, a'2)`` lower bounds of the signal source."""
        return self.a0p_lower, self.a1p_lower, self.a2p_lower

    def to_row(self) -> dict[str, Any]:
        """Returns the bounds as CSV columns."""
        return {
            "a0p_lower": self.a0p_lower,
            "a1p_lower": self.a1p_lower,
            "a2p_lower": self.a2p_lower,
            "a0_upper": self.a0_upper,
            "a1_upper": self.a1_upper,
            "a2_upper": self.a2_upper,
            "eps_signal": self.eps_signal,
            "eps_decoy": self.eps_decoy,
            "confidence": self.confidence,
            "noise": self.noise,
        }


def _clamp(value: float) -> float:
    return float(min(max(value, 0.0), 1.0))


def _assemble(
    lower: tuple[float, float, float],
    upper: tuple[float, float, float],
    res: ResolutionPair,
    noise: str,
) -> SourceBounds:
    return SourceBounds(
        _clamp(upper[0]),
        _clamp(upper[1]),
        _clamp(upper[2]),
        _clamp(lower[0]),
        _clamp(lower[1]),
        _clamp(lower[2]),
        res.confidence,
        eps_signal=res.eps_signal,
        eps_decoy=res.eps_decoy,
        noise=noise,
    )


def noiseless_bounds(
    hist_s: CountHistogram, hist_d: CountHistogram, res: ResolutionPair
) -> SourceBounds:
    """``a'_m >= k_m^s / N^s - eps'`` and ``a_m <= k_m^d / N^d + eps``."""
    fs = hist_s.frequencies()
    fd = hist_d.frequencies()
    es, ed = res.eps_signal, res.eps_decoy
    lower = (fs[0] - es, fs[1] - es, fs[2] - es)
    upper = (fd[0] + ed, fd[1] + ed, fd[2] + ed)
    return _assemble(lower, upper, res, NoiseModel.none().describe())


def poisson_noise_bounds(
    hist_s: CountHistogram,
    hist_d: CountHistogram,
    res: ResolutionPair,
    lam: float,
) -> SourceBounds:
    """Bounds for a detector with Poissonian dark counts of mean ``lam``.

    The frequencies are deconvolved with the lower-triangular inverse
    whose entries are ``e^lam``, ``-lam e^lam`` and ``lam^2 e^lam / 2``.
    """
    noise = NoiseModel.poisson(lam)
    g = math.exp(lam)
    fs = hist_s.frequencies()
    fd = hist_d.frequencies()
    es, ed = res.eps_signal, res.eps_decoy

    a0p = g * (fs[0] - es)
    a1p = -lam * g * (fs[0] + es) + g * (fs[1] - es)
    a2p = lam**2 / 2 * g * (fs[0] - es) - lam * g * (fs[1] + es) + g * (fs[2] - es)

    a0 = g * (fd[0] + ed)
    a1 = -lam * g * (fd[0] - ed) + g * (fd[1] + ed)
    a2 = lam**2 / 2 * g * (fd[0] + ed) - lam * g * (fd[1] - ed) + g * (fd[2] + ed)

    return _assemble((a0p, a1p, a2p), (a0, a1, a2), res, noise.describe())


def general_noise_bounds(
    hist_s: CountHistogram,
    hist_d: CountHistogram,
    res: ResolutionPair,
    noise: PhotonNumberDistribution,
) -> SourceBounds:
    """Bounds for a detector with arbitrary additive noise ``N(y)``.

    Only ``N(0)``, ``N(1)`` and ``N(2)`` are used.

    Raises
    ------
    SingularDeconvolutionError
        ``N(0) = 0``.
    """
    n0, n1, n2 = noise[0], noise[1], noise[2]
    if n0 <= 0:
        raise SingularDeconvolutionError("noise has N(0) = 0")
    fs = hist_s.frequencies()
    fd = hist_d.frequencies()
    es, ed = res.eps_signal, res.eps_decoy

    a0p = (fs[0] - es) / n0
    a1p = ((fs[1] - es) * n0 - (fs[0] + es) * n1) / n0**2
    a2p = (
        (fs[2] - es) / n0
        - (fs[1] + es) * n1 / n0**2
        + (fs[0] - es) * n1**2 / n0**3
        - (fs[0] + es) * n2 / n0**2
    )

    a0 = (fd[0] + ed) / n0
    a1 = ((fd[1] + ed) * n0 - (fd[0] - ed) * n1) / n0**2
    a2 = (
        (fd[2] + ed) / n0
        - (fd[1] - ed) * n1 / n0**2
        + (fd[0] + ed) * n1**2 / n0**3
        - (fd[0] - ed) * n2 / n0**2
    )

    label = NoiseModel.general(noise).describe()
    return _assemble((a0p, a1p, a2p), (a0, a1, a2), res, label)


def estimate_bounds(
    hist_s: CountHistogram,
    hist_d: CountHistogram,
    res: ResolutionPair,
    noise: NoiseModel,
) -> SourceBounds:
    """Picks the bound formulas matching the detector noise model."""
    if noise.kind is NoiseKind.NONE:
        return noiseless_bounds(hist_s, hist_d, res)
    if noise.kind is NoiseKind.POISSON_DARK:
        return poisson_noise_bounds(hist_s, hist_d, res, noise.lam)
    return general_noise_bounds(hist_s, hist_d, res, noise.distribution)  # type: ignore


def true_values(
    signal: PhotonNumberDistribution, decoy: PhotonNumberDistribution
) -> SourceBounds:
    """The exact probabilities of two known sources, packed as bounds."""
    return SourceBounds(
        decoy[0], decoy[1], decoy[2], signal[0], signal[1], signal[2], 1.0
    )


def contains(bounds: SourceBounds, truth: SourceBounds, atol: float = 0.0) -> bool:
    """Whether every true value satisfies its bound."""
    upper_ok = np.all(np.array(truth.upper) <= np.array(bounds.upper) + atol)
    lower_ok = np.all(np.array(truth.lower) >= np.array(bounds.lower) - atol)
    return bool(upper_ok and lower_ok)
