# pylint: disable=all

import math

import numpy as np
import pytest

from pnrmon.bounds import (
    ResolutionPair,
    SourceBounds,
    contains,
    estimate_bounds,
    general_noise_bounds,
    hoeffding_resolution,
    noiseless_bounds,
    poisson_noise_bounds,
    resolution_from_confidence,
    true_values,
)
from pnrmon.errors import InvalidParameterError, SingularDeconvolutionError
from pnrmon.photon_stats import NoiseModel, PhotonNumberDistribution, poisson_pnd
from pnrmon.sampling import CountHistogram, expected_histogram, sample_histogram_pair

from .mocks import *

EXACT_N = 10**15


@pytest.fixture
def signal() -> PhotonNumberDistribution:
    return poisson_pnd(0.5)


@pytest.fixture
def decoy() -> PhotonNumberDistribution:
    return poisson_pnd(0.1)


def _expected_pair(
    signal: PhotonNumberDistribution, decoy: PhotonNumberDistribution, noise: NoiseModel
) -> tuple[CountHistogram, CountHistogram]:
    return (
        expected_histogram(signal, noise, EXACT_N),
        expected_histogram(decoy, noise, EXACT_N),
    )


def _assert_bounds_close(a: SourceBounds, b: SourceBounds, **kwargs) -> None:
    assert a.lower == pytest.approx(b.lower, **kwargs)
    assert a.upper == pytest.approx(b.upper, **kwargs)


def test_hoeffding_resolution() -> None:
    assert hoeffding_resolution(10**8, 1e-6) == pytest.approx(
        math.sqrt(2 * math.log(6e6) / 1e8)
    )


def test_resolution_from_confidence() -> None:
    res = resolution_from_confidence(5 * 10**7, 25 * 10**6, 1 - 1e-6)
    assert res.eps_signal == pytest.approx(math.sqrt(2 * math.log(12e6) / 5e7), rel=1e-6)
    assert res.eps_decoy == pytest.approx(math.sqrt(2 * math.log(12e6) / 2.5e7), rel=1e-6)
    assert res.eps_signal < res.eps_decoy
    assert res.confidence == 1 - 1e-6


@pytest.mark.parametrize("confidence", [0.0, 1.0, 1.5, -0.5])
def test_resolution_invalid_confidence(confidence: float) -> None:
    with pytest.raises(InvalidParameterError):
        resolution_from_confidence(100, 100, confidence)


def test_resolution_invalid_counts() -> None:
    with pytest.raises(InvalidParameterError):
        resolution_from_confidence(0, 100, 0.99)


def test_resolution_pair_checks() -> None:
    assert ResolutionPair.zero().confidence == 1.0
    with pytest.raises(InvalidParameterError):
        ResolutionPair(1e-3, 1e-3, 1.0)
    with pytest.raises(InvalidParameterError):
        ResolutionPair(-1e-3, 1e-3, 0.9)
    with pytest.raises(InvalidParameterError):
        ResolutionPair(1e-3, 1e-3, 0.0)


def test_source_bounds_checks() -> None:
    with pytest.raises(InvalidParameterError):
        SourceBounds(1.1, 0.1, 0.1, 0.5, 0.3, 0.1, 0.9)
    with pytest.raises(InvalidParameterError):
        SourceBounds(0.9, 0.1, 0.1, 0.5, 0.3, 0.1, 0.0)


def test_noiseless_exact_data_recovers_truth(signal, decoy) -> None:
    hist_s, hist_d = _expected_pair(signal, decoy, NoiseModel.none())
    bounds = noiseless_bounds(hist_s, hist_d, ResolutionPair.zero())
    _assert_bounds_close(bounds, true_values(signal, decoy), abs=1e-12)
    assert bounds.noise == "none"
    assert bounds.confidence == 1.0


@pytest.mark.parametrize("lam, tol", [(0.0, 1e-12), (1e-6, 1e-12), (0.1, 1e-12), (1.0, 1e-12), (5.0, 1e-10)])
def test_poisson_exact_data_recovers_truth(lam: float, tol: float, signal, decoy) -> None:
    noise = NoiseModel.poisson(lam)
    hist_s, hist_d = _expected_pair(signal, decoy, noise)
    bounds = poisson_noise_bounds(hist_s, hist_d, ResolutionPair.zero(), lam)
    _assert_bounds_close(bounds, true_values(signal, decoy), abs=tol)


def test_general_exact_data_recovers_truth(signal, decoy) -> None:
    noise = NoiseModel.general(PhotonNumberDistribution(np.array([0.9, 0.08, 0.015, 0.005])))
    hist_s, hist_d = _expected_pair(signal, decoy, noise)
    bounds = general_noise_bounds(hist_s, hist_d, ResolutionPair.zero(), noise.distribution)
    _assert_bounds_close(bounds, true_values(signal, decoy), abs=1e-12)


@pytest.fixture
def sampled_pair(signal, decoy) -> tuple[CountHistogram, CountHistogram]:
    return sample_histogram_pair(signal, decoy, NoiseModel.poisson(0.1), 10**7, 10**7, 99)


@pytest.fixture
def res() -> ResolutionPair:
    return resolution_from_confidence(10**7, 10**7, 0.999)


def test_zero_lambda_poisson_is_noiseless(sampled_pair, res) -> None:
    hist_s, hist_d = sampled_pair
    a = poisson_noise_bounds(hist_s, hist_d, res, 0.0)
    b = noiseless_bounds(hist_s, hist_d, res)
    _assert_bounds_close(a, b, abs=1e-15)


def test_vacuum_noise_is_noiseless(sampled_pair, res) -> None:
    hist_s, hist_d = sampled_pair
    a = general_noise_bounds(hist_s, hist_d, res, PhotonNumberDistribution.delta(0, 8))
    b = noiseless_bounds(hist_s, hist_d, res)
    _assert_bounds_close(a, b, abs=1e-15)


def test_noise_forms_agree_on_random_histograms() -> None:
    rng = np.random.default_rng(8)
    vacuum = PhotonNumberDistribution.delta(0, 4)
    for _ in range(100):
        counts = rng.integers(0, 10**6, size=(2, 4))
        hist_s = CountHistogram.from_counts(counts[0])
        hist_d = CountHistogram.from_counts(counts[1])
        res = resolution_from_confidence(hist_s.n_pulses, hist_d.n_pulses, 0.99)
        a = noiseless_bounds(hist_s, hist_d, res)
        b = poisson_noise_bounds(hist_s, hist_d, res, 0.0)
        c = general_noise_bounds(hist_s, hist_d, res, vacuum)
        _assert_bounds_close(a, b, abs=1e-15)
        _assert_bounds_close(a, c, abs=1e-15)


@pytest.mark.parametrize("lam", [1e-6, 0.1, 0.5, 2.0])
def test_poisson_noise_is_general_noise(lam: float, sampled_pair) -> None:
    hist_s, hist_d = sampled_pair
    res = ResolutionPair.zero()
    a = poisson_noise_bounds(hist_s, hist_d, res, lam)
    b = general_noise_bounds(hist_s, hist_d, res, poisson_pnd(lam))
    _assert_bounds_close(a, b, rel=1e-9, abs=1e-15)


def test_general_noise_singular(sampled_pair, res) -> None:
    hist_s, hist_d = sampled_pair
    with pytest.raises(SingularDeconvolutionError):
        general_noise_bounds(hist_s, hist_d, res, PhotonNumberDistribution.delta(1, 4))


def test_estimate_bounds_dispatches(sampled_pair, res) -> None:
    hist_s, hist_d = sampled_pair
    assert estimate_bounds(hist_s, hist_d, res, NoiseModel.none()).noise == "none"
    assert estimate_bounds(hist_s, hist_d, res, NoiseModel.poisson(0.1)).noise == (
        "poisson(lambda=0.1)"
    )
    general = NoiseModel.general(poisson_pnd(0.1))
    assert estimate_bounds(hist_s, hist_d, res, general).noise.startswith("general(")


def test_bounds_are_clamped() -> None:
    hist = CountHistogram(0, 0, 1, 9, 10)
    bounds = noiseless_bounds(hist, hist, resolution_from_confidence(10, 10, 0.9))
    assert bounds.lower == (0.0, 0.0, 0.0)
    assert all(0.0 <= u <= 1.0 for u in bounds.upper)


@pytest.mark.parametrize("lam", [0.0, 0.1])
def test_bounds_tighten_with_more_pulses(lam: float, signal, decoy) -> None:
    noise = NoiseModel.poisson(lam)
    previous = None
    for n in (10**8, 10**10, 10**12):
        hist_s = expected_histogram(signal, noise, n)
        hist_d = expected_histogram(decoy, noise, n)
        bounds = estimate_bounds(hist_s, hist_d, resolution_from_confidence(n, n, 1 - 1e-6), noise)
        if previous is not None:
            assert all(a >= b for a, b in zip(bounds.lower, previous.lower))
            assert all(a <= b for a, b in zip(bounds.upper, previous.upper))
        previous = bounds


def test_bounds_loosen_with_more_noise(signal, decoy) -> None:
    n = 10**9
    res = resolution_from_confidence(n, n, 1 - 1e-6)
    lower_a1p = []
    for lam in (0.0, 0.1, 0.5):
        noise = NoiseModel.poisson(lam)
        hist_s = expected_histogram(signal, noise, n)
        hist_d = expected_histogram(decoy, noise, n)
        lower_a1p.append(poisson_noise_bounds(hist_s, hist_d, res, lam).a1p_lower)
    assert lower_a1p[0] > lower_a1p[1] > lower_a1p[2]


def test_coverage(signal, decoy) -> None:
    lam = 0.1
    noise = NoiseModel.poisson(lam)
    truth = true_values(signal, decoy)
    n_signal, n_decoy = 5 * 10**5, 25 * 10**4
    res = resolution_from_confidence(n_signal, n_decoy, 0.99)
    failures = 0
    for trial in range(1000):
        hist_s, hist_d = sample_histogram_pair(signal, decoy, noise, n_signal, n_decoy, 2024, trial)
        if not contains(poisson_noise_bounds(hist_s, hist_d, res, lam), truth):
            failures += 1
    assert failures <= 10


def test_contains(signal, decoy) -> None:
    truth = true_values(signal, decoy)
    assert contains(truth, truth)
    tight = SourceBounds(
        truth.a0_upper - 1e-3, *truth.upper[1:], *truth.lower, 0.9
    )
    assert not contains(tight, truth)
    assert contains(tight, truth, atol=1e-2)


@pytest.mark.parametrize("lam", [0.0, 0.1, 1.0])
def test_bounds_widen_with_resolution(lam: float, sampled_pair) -> None:
    hist_s, hist_d = sampled_pair
    previous = poisson_noise_bounds(hist_s, hist_d, ResolutionPair.zero(), lam)
    for eps in (1e-5, 1e-4, 1e-3, 1e-2):
        bounds = poisson_noise_bounds(hist_s, hist_d, ResolutionPair(eps, eps, 0.99), lam)
        assert all(a <= b for a, b in zip(bounds.lower, previous.lower))
        assert all(a >= b for a, b in zip(bounds.upper, previous.upper))
        previous = bounds


def test_noiseless_bounds_bracket_frequencies(sampled_pair, res) -> None:
    hist_s, hist_d = sampled_pair
    bounds = noiseless_bounds(hist_s, hist_d, res)
    assert all(b <= f for b, f in zip(bounds.lower, hist_s.frequencies()[:3]))
    assert all(b >= f for b, f in zip(bounds.upper, hist_d.frequencies()[:3]))
