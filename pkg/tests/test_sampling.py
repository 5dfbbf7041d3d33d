# pylint: disable=all

import numpy as np
import pytest
from scipy import stats

from pnrmon.errors import CapacityError, InvalidParameterError
from pnrmon.photon_stats import NoiseModel, outcome_probabilities, poisson_pnd
from pnrmon.sampling import (
    CountHistogram,
    PulseBudget,
    expected_histogram,
    make_rng,
    sample_histogram,
    sample_histogram_pair,
    split_budget,
)

from .mocks import *


def test_same_stream_same_draws() -> None:
    a = make_rng(42, 1, 2).integers(0, 2**32, size=8)
    b = make_rng(42, 1, 2).integers(0, 2**32, size=8)
    np.testing.assert_array_equal(a, b)


def test_different_streams_differ() -> None:
    a = make_rng(42, 0).integers(0, 2**32, size=8)
    b = make_rng(42, 1).integers(0, 2**32, size=8)
    c = make_rng(43, 0).integers(0, 2**32, size=8)
    assert not np.array_equal(a, b)
    assert not np.array_equal(a, c)


@pytest.mark.parametrize("seed", [-1, 2**64])
def test_invalid_seed(seed: int) -> None:
    with pytest.raises(InvalidParameterError):
        make_rng(seed)


def test_histogram_invariants() -> None:
    hist = CountHistogram.from_counts([5, 3, 1, 1])
    assert hist.n_pulses == 10
    np.testing.assert_allclose(hist.frequencies(), [0.5, 0.3, 0.1, 0.1])
    assert hist.to_row() == {"n_pulses": 10, "k0": 5, "k1": 3, "k2": 1, "k_more": 1}
    with pytest.raises(InvalidParameterError):
        CountHistogram(5, 3, 1, 1, 11)
    with pytest.raises(InvalidParameterError):
        CountHistogram(-1, 1, 0, 0, 0)


def test_sample_histogram_is_reproducible() -> None:
    pnd = poisson_pnd(0.5)
    noise = NoiseModel.poisson(0.1)
    a = sample_histogram(pnd, noise, 10**6, 7, 0, 0)
    b = sample_histogram(pnd, noise, 10**6, 7, 0, 0)
    c = sample_histogram(pnd, noise, 10**6, 7, 0, 1)
    assert a == b
    assert a != c
    assert sum(a.counts) == 10**6


def test_sample_histogram_pair_uses_class_streams() -> None:
    pnd_s, pnd_d = poisson_pnd(0.5), poisson_pnd(0.1)
    noise = NoiseModel.none()
    hist_s, hist_d = sample_histogram_pair(pnd_s, pnd_d, noise, 1000, 500, 3, 2)
    assert hist_s == sample_histogram(pnd_s, noise, 1000, 3, 2, 0)
    assert hist_d == sample_histogram(pnd_d, noise, 500, 3, 2, 1)


@pytest.mark.parametrize("lam", [0.0, 0.1, 1.0])
def test_sample_frequencies_are_close(lam: float) -> None:
    n = 10**8
    pnd = poisson_pnd(0.5)
    noise = NoiseModel.poisson(lam)
    probs = outcome_probabilities(pnd, noise)
    freqs = sample_histogram(pnd, noise, n, 11).frequencies()
    sigma = np.sqrt(probs * (1 - probs) / n)
    assert np.all(np.abs(freqs - probs) <= 6 * sigma + 1e-12)


def test_multinomial_matches_per_pulse_simulation() -> None:
    n = 200_000
    mu, lam = 0.5, 0.1
    rng = np.random.default_rng(2024)
    photons = rng.poisson(mu, size=n) + rng.poisson(lam, size=n)
    per_pulse = np.bincount(np.minimum(photons, 3), minlength=4)

    probs = outcome_probabilities(poisson_pnd(mu), NoiseModel.poisson(lam))
    result = stats.chisquare(per_pulse, probs * n)
    assert result.pvalue > 1e-4

    hist = sample_histogram(poisson_pnd(mu), NoiseModel.poisson(lam), n, 5)
    table = np.array([per_pulse, hist.counts])
    _, pvalue, _, _ = stats.chi2_contingency(table)
    assert pvalue > 1e-4


def _per_pulse_counts(rng: np.random.Generator, n: int, mu: float, lam: float) -> np.ndarray:
    photons = rng.poisson(mu, size=n) + rng.poisson(lam, size=n)
    return np.bincount(np.minimum(photons, 3), minlength=4)


@pytest.mark.parametrize("n", [100, 500, 1000])
@pytest.mark.parametrize("mu, lam", [(0.5, 0.0), (0.5, 0.1), (0.1, 1.0)])
def test_multinomial_matches_per_pulse_on_small_records(n: int, mu: float, lam: float) -> None:
    pnd, noise = poisson_pnd(mu), NoiseModel.poisson(lam)
    probs = outcome_probabilities(pnd, noise)
    probs = probs / probs.sum()
    rng = np.random.default_rng(n)
    failures = 0
    pooled_per_pulse = np.zeros(4, dtype=np.int64)
    pooled_sampled = np.zeros(4, dtype=np.int64)
    for trial in range(100):
        per_pulse = _per_pulse_counts(rng, n, mu, lam)
        sampled = np.array(sample_histogram(pnd, noise, n, 31, trial).counts)
        assert per_pulse.sum() == sampled.sum() == n
        for counts in (per_pulse, sampled):
            if stats.chisquare(counts, probs * n).pvalue <= 1e-3:
                failures += 1
        pooled_per_pulse += per_pulse
        pooled_sampled += sampled

    # small expected counts in the last bin make the chi-square tail a little heavy
    assert failures <= 5
    observed = np.array([pooled_per_pulse, pooled_sampled])
    observed = observed[:, observed.sum(axis=0) > 0]
    _, pvalue, _, _ = stats.chi2_contingency(observed)
    assert pvalue > 1e-4


def test_capacity() -> None:
    with pytest.raises(CapacityError):
        sample_histogram(poisson_pnd(0.5), NoiseModel.none(), 2**63, 0)
    with pytest.raises(InvalidParameterError):
        sample_histogram(poisson_pnd(0.5), NoiseModel.none(), 0, 0)


def test_expected_histogram() -> None:
    pnd = poisson_pnd(0.5)
    n = 10**15
    hist = expected_histogram(pnd, NoiseModel.none(), n)
    assert sum(hist.counts) == n
    np.testing.assert_allclose(hist.frequencies(), pnd.bins(3), atol=1e-14)


def test_expected_histogram_beyond_int64() -> None:
    n = 10**20
    hist = expected_histogram(poisson_pnd(0.5), NoiseModel.none(), n)
    assert hist.n_pulses == n
    assert sum(hist.counts) == n


@pytest.mark.parametrize(
    "n_total, expected",
    [
        (10, (5, 3, 2)),
        (10**9, (5 * 10**8, 25 * 10**7, 25 * 10**7)),
        (3, (1, 1, 1)),
        (1, (1, 0, 0)),
    ],
)
def test_split_budget(n_total: int, expected: tuple[int, int, int]) -> None:
    assert split_budget(PulseBudget(n_total)) == expected


@pytest.mark.parametrize("n_total", [7, 11, 10**16 + 1])
def test_split_budget_adds_up(n_total: int) -> None:
    budget = PulseBudget(n_total, 0.6, 0.3, 0.1)
    assert sum(split_budget(budget)) == n_total


@pytest.mark.parametrize(
    "kwargs",
    [
        {"n_total": 0},
        {"n_total": 10, "frac_signal": 0.7},
        {"n_total": 10, "frac_signal": 1.5, "frac_decoy": -0.25, "frac_vacuum": -0.25},
    ],
)
def test_invalid_budget(kwargs: dict) -> None:
    with pytest.raises(InvalidParameterError):
        PulseBudget(**kwargs)
