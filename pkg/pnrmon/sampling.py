# SPDX-License-Identifier: MIT
"""A module containing Monte Carlo generation of PNR detector records.

Pulses are i.i.d., so the record of ``n`` pulses is a single draw from the
multinomial over the four recorded outcomes (0, 1, 2, >=3 photoelectrons)
instead of ``n`` per-pulse draws.

Random streams are Philox generators keyed by ``(seed, *stream)``, so any
cell of an experiment can be regenerated on its own.

Examples
-------- ::

    pnd = poisson_pnd(0.5)
    hist = sample_histogram(pnd, NoiseModel.poisson(0.1), 10**8, seed=7)
    hist.frequencies()  # array([0.5488..., 0.3292..., ...])
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Any

import numpy as np
import numpy.typing as npt

from .errors import CapacityError, InvalidParameterError
from .photon_stats import NoiseModel, PhotonNumberDistribution, outcome_probabilities

_INT64_MAX = int(np.iinfo(np.int64).max)
_SEED_LIMIT = 2**64


def make_rng(seed: int, *stream: int) -> np.random.Generator:
    """Returns an independent generator for the cell ``stream`` of ``seed``.

    Raises
    ------
    InvalidParameterError
        The seed is not an unsigned 64-bit integer.
    """
    if not 0 <= seed < _SEED_LIMIT:
        raise InvalidParameterError(f"seed must be an unsigned 64-bit integer, got {seed}")
    sequence = np.random.SeedSequence(seed, spawn_key=tuple(stream))
    return np.random.Generator(np.random.Philox(sequence))


@dataclass(slots=True, frozen=True)
class CountHistogram:
    """The finite-sample record of one pulse class.

    Attributes
    ----------
    k0: :class:`int`
        Pulses with no recorded photoelectron.
    k1: :class:`int`
        Pulses with one recorded photoelectron.
    k2: :class:`int`
        Pulses with two recorded photoelectrons.
    k_more: :class:`int`
        Pulses with three or more.
    n_pulses: :class:`int`
        All pulses of the class.
    """

    k0: int
    k1: int
    k2: int
    k_more: int
    n_pulses: int

    def __post_init__(self) -> None:
        counts = (self.k0, self.k1, self.k2, self.k_more)
        if min(counts) < 0:
            raise InvalidParameterError(f"counts must be >= 0, got {counts}")
        if sum(counts) != self.n_pulses:
            raise InvalidParameterError(
                f"counts {counts} do not add up to n_pulses={self.n_pulses}"
            )
        if self.n_pulses < 1:
            raise InvalidParameterError("a histogram needs at least one pulse")

    @classmethod
    def from_counts(cls, counts: npt.ArrayLike) -> CountHistogram:
        """Creates the histogram from the four counts."""
        k0, k1, k2, k_more = (int(c) for c in np.asarray(counts).tolist())
        return cls(k0, k1, k2, k_more, k0 + k1 + k2 + k_more)

    @property
    def counts(self) -> tuple[int, int, int, int]:
        """The four counts."""
        return self.k0, self.k1, self.k2, self.k_more

    def frequencies(self) -> npt.NDArray[np.float64]:
        """``k_m / n_pulses`` for the four outcomes."""
        return np.array(self.counts, dtype=np.float64) / self.n_pulses

    def to_row(self) -> dict[str, Any]:
        """Returns the histogram as a CSV row."""
        return {
            "n_pulses": self.n_pulses,
            "k0": self.k0,
            "k1": self.k1,
            "k2": self.k2,
            "k_more": self.k_more,
        }


@dataclass(slots=True, frozen=True)
class PulseBudget:
    """The total number of pulses and its split among the pulse classes."""

    n_total: int
    frac_signal: float = 0.5
    frac_decoy: float = 0.25
    frac_vacuum: float = 0.25

    def __post_init__(self) -> None:
        if self.n_total < 1:
            raise InvalidParameterError("n_total must be >= 1")
        fractions = (self.frac_signal, self.frac_decoy, self.frac_vacuum)
        if any(not 0.0 <= f <= 1.0 for f in fractions):
            raise InvalidParameterError(f"fractions must be in [0, 1], got {fractions}")
        if not math.isclose(sum(fractions), 1.0, abs_tol=1e-9):
            raise InvalidParameterError(f"fractions must sum to 1, got {sum(fractions)}")


def split_budget(budget: PulseBudget) -> tuple[int, int, int]:
    """Splits the pulses into (signal, decoy, vacuum) by largest remainder.

    Ties go to the earlier class. The three counts always add up to
    ``n_total``.
    """
    fractions = [
        Fraction(budget.frac_signal),
        Fraction(budget.frac_decoy),
        Fraction(budget.frac_vacuum),
    ]
    total = sum(fractions)
    quotas = [budget.n_total * f / total for f in fractions]
    shares = [math.floor(q) for q in quotas]
    remainder = budget.n_total - sum(shares)
    order = sorted(range(3), key=lambda i: (-(quotas[i] - shares[i]), i))
    for i in order[:remainder]:
        shares[i] += 1
    return shares[0], shares[1], shares[2]


def _check_capacity(n_pulses: int) -> None:
    if n_pulses < 1:
        raise InvalidParameterError("n_pulses must be >= 1")
    if n_pulses > _INT64_MAX:
        raise CapacityError(
            f"{n_pulses} pulses do not fit a 64-bit counter; use deterministic mode"
        )


def sample_histogram(
    pnd_p3: PhotonNumberDistribution,
    noise: NoiseModel,
    n_pulses: int,
    seed: int,
    *stream: int,
) -> CountHistogram:
    """Draws the detector record of ``n_pulses`` pulses.

    Parameters
    ----------
    pnd_p3: :class:`PhotonNumberDistribution`
        The photoelectron distribution without noise.
    noise: :class:`NoiseModel`
        The additive detection noise.
    n_pulses: :class:`int`
        Number of pulses of this class.
    seed: :class:`int`
        The experiment seed.
    stream: :class:`int`
        The cell index; different cells get independent streams.

    Raises
    ------
    CapacityError
        ``n_pulses`` does not fit a 64-bit counter.
    """
    _check_capacity(n_pulses)
    probs = outcome_probabilities(pnd_p3, noise)
    rng = make_rng(seed, *stream)
    return CountHistogram.from_counts(rng.multinomial(n_pulses, probs / probs.sum()))


def expected_histogram(
    pnd_p3: PhotonNumberDistribution, noise: NoiseModel, n_pulses: int
) -> CountHistogram:
    """The deterministic record ``k_m = round(n_pulses * P(m))``.

    ``k_more`` takes whatever is left so the counts add up to ``n_pulses``.
    """
    if n_pulses < 1:
        raise InvalidParameterError("n_pulses must be >= 1")
    probs = outcome_probabilities(pnd_p3, noise)
    k = [round(n_pulses * float(p)) for p in probs[:3]]
    k_more = n_pulses - sum(k)
    if k_more < 0:
        k[int(np.argmax(k))] += k_more
        k_more = 0
    return CountHistogram(k[0], k[1], k[2], k_more, n_pulses)


def sample_histogram_pair(  # pylint: disable=too-many-arguments
    pnd_signal: PhotonNumberDistribution,
    pnd_decoy: PhotonNumberDistribution,
    noise: NoiseModel,
    n_signal: int,
    n_decoy: int,
    seed: int,
    *stream: int,
) -> tuple[CountHistogram, CountHistogram]:
    """Draws the signal and decoy records of one series.

    The signal class uses the stream ``(*stream, 0)``, the decoy class
    ``(*stream, 1)``.
    """
    return (
        sample_histogram(pnd_signal, noise, n_signal, seed, *stream, 0),
        sample_histogram(pnd_decoy, noise, n_decoy, seed, *stream, 1),
    )
