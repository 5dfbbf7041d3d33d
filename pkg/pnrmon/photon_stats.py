# SPDX-License-Identifier: MIT
"""A module containing the photon-number distribution algebra.

Every distribution is a truncated sequence of probabilities over the
photon number ``n = 0..n_max``; the mass beyond ``n_max`` is folded into
the last bin, so the total is always 1.

Examples
-------- ::

    from pnrmon.photon_stats import NoiseModel, poisson_pnd, convolve_noise

    pnd = poisson_pnd(0.5, 64)
    observed = convolve_noise(pnd, NoiseModel.poisson(0.1).as_pnd(64))
    d0, d1, d2 = deconvolve_first_three(observed, NoiseModel.poisson(0.1))
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np
import numpy.typing as npt
from scipy import special, stats

from .errors import InvalidParameterError, SingularDeconvolutionError

DEFAULT_N_MAX = 64
NORMALIZATION_TOLERANCE = 1e-9
_ENTRY_TOLERANCE = 1e-12


def _require_probability(name: str, value: float) -> float:
    if not math.isfinite(value) or not 0.0 <= value <= 1.0:
        raise InvalidParameterError(f"{name} must be in [0, 1], got {value}")
    return float(value)


@dataclass(slots=True, frozen=True, eq=False)
class PhotonNumberDistribution:
    """A truncated probability distribution over photon number.

    Attributes
    ----------
    probs: :class:`numpy.ndarray`
        Read-only probabilities indexed by photon number ``0..n_max``.
        The last entry holds the whole tail ``P(n >= n_max)``.

    Raises
    ------
    InvalidParameterError
        An entry is outside [0, 1] or the entries do not sum to 1.
    """

    probs: npt.NDArray[np.float64]

    def __post_init__(self) -> None:
        probs = np.array(self.probs, dtype=np.float64)
        if probs.ndim != 1 or probs.size < 2:
            raise InvalidParameterError(
                "a photon-number distribution needs at least two bins"
            )
        if not np.all(np.isfinite(probs)):
            raise InvalidParameterError("probabilities must be finite")
        if probs.min() < -_ENTRY_TOLERANCE or probs.max() > 1 + _ENTRY_TOLERANCE:
            raise InvalidParameterError("every probability must be in [0, 1]")
        total = probs.sum()
        if abs(total - 1.0) > NORMALIZATION_TOLERANCE:
            raise InvalidParameterError(
                f"probabilities must sum to 1 (got {total:.12g})"
            )
        probs = np.clip(probs, 0.0, 1.0)
        probs.flags.writeable = False
        object.__setattr__(self, "probs", probs)

    @classmethod
    def from_probs(
        cls, probs: Sequence[float] | npt.ArrayLike, n_max: int | None = None
    ) -> PhotonNumberDistribution:
        """Creates a distribution, optionally re-truncated to ``n_max``.

        Entries beyond ``n_max`` are folded into the last bin
        and a shorter sequence is padded with zeros.
        """
        arr = np.asarray(probs, dtype=np.float64)
        if n_max is None:
            return cls(arr)
        if n_max < 1:
            raise InvalidParameterError("n_max must be >= 1")
        return cls(_fit_support(arr, n_max + 1))

    @classmethod
    def delta(cls, n: int, n_max: int = DEFAULT_N_MAX) -> PhotonNumberDistribution:
        """The distribution with all the mass at photon number ``n``."""
        if not 0 <= n <= n_max:
            raise InvalidParameterError(f"n must be in [0, {n_max}], got {n}")
        probs = np.zeros(n_max + 1)
        probs[n] = 1.0
        return cls(probs)

    @property
    def n_max(self) -> int:
        """The truncation bound."""
        return self.probs.size - 1

    def __getitem__(self, n: int) -> float:
        if n < 0:
            raise IndexError(n)
        return float(self.probs[n]) if n <= self.n_max else 0.0

    def __len__(self) -> int:
        return self.probs.size

    def mean(self) -> float:
        """The average photon number (tail bin counted at ``n_max``)."""
        return float(np.dot(np.arange(self.probs.size), self.probs))

    def tail(self, k: int) -> float:
        """``P(n >= k)``."""
        return float(self.probs[k:].sum()) if k <= self.n_max else 0.0

    def bins(self, k: int) -> npt.NDArray[np.float64]:
        """The first ``k`` probabilities followed by ``P(n >= k)``."""
        head = np.array([self[n] for n in range(k)])
        return np.append(head, self.tail(k))

    def allclose(self, other: PhotonNumberDistribution, atol: float) -> bool:
        """Entrywise comparison over the union of both supports."""
        size = max(self.probs.size, other.probs.size)
        a = np.pad(self.probs, (0, size - self.probs.size))
        b = np.pad(other.probs, (0, size - other.probs.size))
        return bool(np.allclose(a, b, rtol=0.0, atol=atol))


def _fit_support(probs: npt.NDArray[np.float64], size: int) -> npt.NDArray[np.float64]:
    if probs.size <= size:
        return np.pad(probs, (0, size - probs.size))
    fitted = probs[:size].copy()
    fitted[-1] += probs[size:].sum()
    return fitted


class NoiseKind(Enum):
    """The kinds of additive detection noise."""

    NONE = "none"
    POISSON_DARK = "poisson"
    GENERAL = "general"


@dataclass(slots=True, frozen=True)
class NoiseModel:
    """Source-independent additive noise of the PNR detector.

    Attributes
    ----------
    kind: :class:`NoiseKind`
        The kind of the noise.
    lam: :class:`float`
        Mean dark counts per pulse, used by :attr:`NoiseKind.POISSON_DARK`.
    distribution: :class:`PhotonNumberDistribution` | `None`
        The noise distribution ``N(y)``, used by :attr:`NoiseKind.GENERAL`.
    """

    kind: NoiseKind = NoiseKind.NONE
    lam: float = 0.0
    distribution: PhotonNumberDistribution | None = field(default=None, compare=False)

    def __post_init__(self) -> None:
        if not math.isfinite(self.lam) or self.lam < 0:
            raise InvalidParameterError(f"lambda must be >= 0, got {self.lam}")
        if self.kind is NoiseKind.GENERAL and self.distribution is None:
            raise InvalidParameterError("general noise needs a distribution")

    @classmethod
    def none(cls) -> NoiseModel:
        """A noiseless detector."""
        return cls()

    @classmethod
    def poisson(cls, lam: float) -> NoiseModel:
        """Poissonian dark counts with mean ``lam`` per pulse."""
        return cls(NoiseKind.POISSON_DARK, lam=float(lam))

    @classmethod
    def general(cls, distribution: PhotonNumberDistribution) -> NoiseModel:
        """Arbitrary additive noise with distribution ``N(y)``."""
        return cls(NoiseKind.GENERAL, distribution=distribution)

    def first_three(self) -> tuple[float, float, float]:
        """Returns ``N(0), N(1), N(2)``."""
        if self.kind is NoiseKind.NONE:
            return 1.0, 0.0, 0.0
        if self.kind is NoiseKind.POISSON_DARK:
            n0 = math.exp(-self.lam)
            return n0, self.lam * n0, self.lam**2 * n0 / 2
        dist: PhotonNumberDistribution = self.distribution  # type: ignore
        return dist[0], dist[1], dist[2]

    def as_pnd(self, n_max: int = DEFAULT_N_MAX) -> PhotonNumberDistribution:
        """The noise as a photon-number distribution."""
        if self.kind is NoiseKind.NONE:
            return PhotonNumberDistribution.delta(0, n_max)
        if self.kind is NoiseKind.POISSON_DARK:
            return poisson_pnd(self.lam, n_max)
        dist: PhotonNumberDistribution = self.distribution  # type: ignore
        return PhotonNumberDistribution.from_probs(dist.probs, n_max)

    def describe(self) -> str:
        """A short label for output rows."""
        if self.kind is NoiseKind.NONE:
            return "none"
        if self.kind is NoiseKind.POISSON_DARK:
            return f"poisson(lambda={self.lam:g})"
        n0, n1, n2 = self.first_three()
        return f"general(N0={n0:.6g},N1={n1:.6g},N2={n2:.6g})"


def poisson_pnd(mu: float, n_max: int = DEFAULT_N_MAX) -> PhotonNumberDistribution:
    """Returns the Poisson distribution with mean ``mu`` truncated at ``n_max``.

    Raises
    ------
    InvalidParameterError
        ``mu`` is negative or not finite, or ``n_max < 1``.
    """
    if not math.isfinite(mu) or mu < 0:
        raise InvalidParameterError(f"mu must be a finite number >= 0, got {mu}")
    if n_max < 1:
        raise InvalidParameterError("n_max must be >= 1")
    if mu == 0:
        return PhotonNumberDistribution.delta(0, n_max)

    probs = np.empty(n_max + 1)
    probs[:-1] = stats.poisson.pmf(np.arange(n_max), mu)
    probs[-1] = stats.poisson.sf(n_max - 1, mu)
    return PhotonNumberDistribution(probs)


def binomial_thin(
    pnd: PhotonNumberDistribution, eta: float
) -> PhotonNumberDistribution:
    """Passes the distribution through a loss channel of transmittance ``eta``.

    Each photon survives independently with probability ``eta``.

    Raises
    ------
    InvalidParameterError
        ``eta`` is outside [0, 1].
    """
    eta = _require_probability("eta", eta)
    if eta == 1.0:
        return pnd
    if eta == 0.0:
        return PhotonNumberDistribution.delta(0, pnd.n_max)

    support = np.arange(pnd.n_max + 1)
    # kernel[n, m] = C(m, n) eta^n (1 - eta)^(m - n)
    kernel = stats.binom.pmf(support[:, None], support[None, :], eta)
    return PhotonNumberDistribution(kernel @ pnd.probs)


def convolve_noise(
    signal: PhotonNumberDistribution, noise: PhotonNumberDistribution
) -> PhotonNumberDistribution:
    """Adds independent noise counts to the signal counts.

    The result keeps the larger of the two supports; mass beyond it is
    folded into the last bin.
    """
    size = max(len(signal), len(noise))
    return PhotonNumberDistribution(
        _fit_support(np.convolve(signal.probs, noise.probs), size)
    )


def outcome_probabilities(
    pnd: PhotonNumberDistribution, noise: NoiseModel
) -> npt.NDArray[np.float64]:
    """The four recorded outcomes ``P(0), P(1), P(2), P(>=3)`` of a PNR detector."""
    if noise.kind is NoiseKind.NONE:
        return pnd.bins(3)
    return convolve_noise(pnd, noise.as_pnd(pnd.n_max)).bins(3)


def deconvolve_first_three(
    observed: PhotonNumberDistribution | Sequence[float], noise: NoiseModel
) -> tuple[float, float, float]:
    """Removes additive noise from the first three observed probabilities.

    The convolution matrix is lower triangular, so the first three
    noise-free entries follow from forward substitution. Negative results
    are returned as they are.

    Parameters
    ----------
    observed: :class:`PhotonNumberDistribution` | Sequence[:class:`float`]
        The observed distribution, or at least its first three entries
        (e.g. empirical frequencies).
    noise: :class:`NoiseModel`
        The detection noise.

    Raises
    ------
    SingularDeconvolutionError
        ``N(0) = 0``.
    """
    p0, p1, p2 = (observed[0], observed[1], observed[2])
    n0, n1, n2 = noise.first_three()
    if n0 <= 0:
        raise SingularDeconvolutionError("noise has N(0) = 0")

    d0 = p0 / n0
    d1 = (p1 - d0 * n1) / n0
    d2 = (p2 - d1 * n1 - d0 * n2) / n0
    return float(d0), float(d1), float(d2)


def binary_entropy(x: float) -> float:
    """The binary Shannon entropy in bits, with ``H2(0) = H2(1) = 0``.

    Raises
    ------
    InvalidParameterError
        ``x`` is outside [0, 1].
    """
    x = _require_probability("x", x)
    return float((special.entr(x) + special.entr(1.0 - x)) / math.log(2))
