# pylint: disable=all

import math

import mpmath
import pytest

from pnrmon.channel import GysParameters, simulate_observables
from pnrmon.errors import InvalidParameterError, NoUntaggedGuaranteeError, PreconditionError
from pnrmon.keyrate import RateFlag, trusted_rate
from pnrmon.pna import (
    PnaKeyRateReport,
    UntaggedStats,
    UntaggedWindow,
    analytic_untagged_stats,
    output_pnd_bounds,
    pna_confidence,
    pna_key_rate,
    pna_resolution,
    poisson_outside_fraction,
    sample_untagged_stats,
    untagged_fraction,
    untagged_gain_bounds,
    untagged_qber_bounds,
)

from .mocks import *

MEAN = 1e6
ETA_S, ETA_D = 5e-7, 1e-7

mpmath.mp.dps = 50


@pytest.fixture
def window() -> UntaggedWindow:
    return UntaggedWindow.around(MEAN, 0.1)


def _binomial_term(m: int, n: int, eta: float) -> float:
    eta_ = mpmath.mpf(eta)
    return float(mpmath.binomial(m, n) * eta_**n * (1 - eta_) ** (m - n))


def test_window_around(window: UntaggedWindow) -> None:
    assert (window.m_min, window.m_max) == (900_000, 1_100_000)
    assert window.contains(1_000_000)
    assert not window.contains(899_999)
    assert not window.contains(1_100_001)


def test_window_checks() -> None:
    with pytest.raises(InvalidParameterError):
        UntaggedWindow(10, 5)
    with pytest.raises(InvalidParameterError):
        UntaggedWindow(-1, 5)
    with pytest.raises(InvalidParameterError):
        UntaggedWindow.around(0.0)
    assert UntaggedWindow(5, None).contains(10**9)


@pytest.mark.parametrize("n", [0, 1, 2])
@pytest.mark.parametrize("eta", [ETA_S, ETA_D])
def test_output_bounds_match_high_precision(n: int, eta: float, window: UntaggedWindow) -> None:
    upper, lower = output_pnd_bounds(window, eta, n)
    if n == 0:
        assert upper == pytest.approx(_binomial_term(window.m_min, 0, eta), rel=1e-7)
        assert lower == pytest.approx(_binomial_term(window.m_max, 0, eta), rel=1e-7)
    else:
        assert upper == pytest.approx(_binomial_term(window.m_max, n, eta), rel=1e-7)
        assert lower == pytest.approx(_binomial_term(window.m_min, n, eta), rel=1e-7)
    assert lower <= upper


@pytest.mark.parametrize("n", [0, 1, 2])
def test_output_bounds_bracket_poisson(n: int, window: UntaggedWindow) -> None:
    upper, lower = output_pnd_bounds(window, ETA_S, n)
    mu = MEAN * ETA_S
    poisson = mu**n * math.exp(-mu) / math.factorial(n)
    assert lower <= poisson <= upper


def test_output_bounds_precondition(window: UntaggedWindow) -> None:
    with pytest.raises(PreconditionError):
        output_pnd_bounds(window, 1e-5, 1)
    with pytest.raises(PreconditionError):
        output_pnd_bounds(UntaggedWindow(5, None), 1e-3, 1)


def test_resolution() -> None:
    eps = pna_resolution(10**9, 1 - 1e-6)
    assert eps == pytest.approx(math.sqrt(4 * math.log(2e6) / 1e9))
    assert pna_confidence(10**9, eps) == pytest.approx(1 - 1e-6, abs=1e-12)
    assert pna_resolution(10**9, -1.0) == 0.0
    with pytest.raises(InvalidParameterError):
        pna_resolution(10**9, 1.0)
    with pytest.raises(InvalidParameterError):
        pna_resolution(0, 0.9)


def test_small_fixed_resolution_is_meaningless() -> None:
    assert pna_confidence(10**9, 1e-6) < 0
    stats_ = UntaggedStats(0.0, 1e-6, pna_confidence(10**9, 1e-6))
    assert not stats_.meaningful


def test_untagged_fraction(window: UntaggedWindow) -> None:
    counts = {1_000_000: 90, 800_000: 6, 1_200_000: 4}
    stats_ = untagged_fraction(counts, window, 0.9)
    assert stats_.delta == pytest.approx(0.1)
    assert stats_.eps == pytest.approx(pna_resolution(100, 0.9))
    assert stats_.untagged_fraction == pytest.approx(0.9 - stats_.eps)


def test_outside_fraction() -> None:
    wide = UntaggedWindow.around(MEAN, 0.1)
    assert poisson_outside_fraction(MEAN, wide) < 1e-100
    one_sigma = UntaggedWindow(999_000, 1_001_000)
    assert poisson_outside_fraction(MEAN, one_sigma) == pytest.approx(0.3173, abs=2e-3)
    assert poisson_outside_fraction(MEAN, UntaggedWindow(0, None)) == 0.0


def test_analytic_stats(window: UntaggedWindow) -> None:
    stats_ = analytic_untagged_stats(MEAN, window, 10**9)
    assert stats_.delta == pytest.approx(0.0, abs=1e-100)
    assert stats_.confidence == 1 - 1e-6
    fixed = analytic_untagged_stats(MEAN, window, 10**9, eps=1e-4)
    assert fixed.eps == 1e-4
    assert fixed.confidence == pytest.approx(pna_confidence(10**9, 1e-4))


def test_sampled_stats_are_reproducible() -> None:
    window = UntaggedWindow(999_000, 1_001_000)
    a = sample_untagged_stats(MEAN, window, 10**8, 5, 0)
    b = sample_untagged_stats(MEAN, window, 10**8, 5, 0)
    assert a == b
    assert a.delta == pytest.approx(poisson_outside_fraction(MEAN, window), abs=1e-3)


def test_gain_bounds() -> None:
    stats_ = UntaggedStats(0.01, 0.001, 0.99)
    upper, lower = untagged_gain_bounds(0.02, stats_)
    assert upper == pytest.approx(0.02 / 0.989)
    assert lower == pytest.approx((0.02 - 0.011) / 0.989)
    assert untagged_gain_bounds(0.005, stats_)[1] == 0.0
    with pytest.raises(NoUntaggedGuaranteeError):
        untagged_gain_bounds(0.02, UntaggedStats(0.6, 0.5, 0.99))


@pytest.mark.parametrize(
    "qe, delta, eps, expected",
    [
        (0.001, 0.0, 0.0, (0.001, 0.001)),
        (0.001, 0.0003, 0.0002, (0.001 / 0.9995, 0.0005 / 0.9995)),
        (0.0005, 0.0003, 0.0002, (0.0005 / 0.9995, 0.0)),
        (0.0004, 0.0003, 0.0002, (0.0004 / 0.9995, 0.0)),
    ],
)
def test_qber_bounds(qe: float, delta: float, eps: float, expected: tuple[float, float]) -> None:
    upper, lower = untagged_qber_bounds(qe, UntaggedStats(delta, eps, 0.99))
    assert upper == pytest.approx(expected[0], rel=1e-12)
    assert lower == pytest.approx(expected[1], rel=1e-12, abs=1e-18)
    assert upper >= qe >= lower >= 0.0


def test_qber_bounds_values() -> None:
    upper, lower = untagged_qber_bounds(0.001, UntaggedStats(0.0003, 0.0002, 0.99))
    assert upper == pytest.approx(0.0010005, rel=1e-6)
    assert lower == pytest.approx(0.0005, rel=1e-3)
    with pytest.raises(NoUntaggedGuaranteeError):
        untagged_qber_bounds(0.001, UntaggedStats(0.6, 0.5, 0.99))


@pytest.fixture
def gys() -> GysParameters:
    return GysParameters()


def test_pna_rate_is_below_trusted(window: UntaggedWindow, gys: GysParameters) -> None:
    stats_ = analytic_untagged_stats(MEAN, window, 10**16)
    for distance in (0.0, 20.0, 40.0):
        obs = simulate_observables(0.5, 0.1, gys, distance)
        report = pna_key_rate(obs, stats_, window, ETA_S, ETA_D)
        assert isinstance(report, PnaKeyRateReport)
        assert report.rate < trusted_rate(0.5, 0.1, obs).rate
    obs = simulate_observables(0.5, 0.1, gys, 0.0)
    report = pna_key_rate(obs, stats_, window, ETA_S, ETA_D)
    assert report.rate > 0
    assert report.flags == RateFlag.NONE
    assert report.q1_lower > 0
    assert report.m_min == 900_000
    assert report.confidence == 1 - 1e-6


def test_pna_rate_drops_with_fewer_pulses(window: UntaggedWindow, gys: GysParameters) -> None:
    obs = simulate_observables(0.5, 0.1, gys, 10.0)
    rates = [
        pna_key_rate(obs, analytic_untagged_stats(MEAN, window, n), window, ETA_S, ETA_D).rate
        for n in (10**16, 10**12, 10**9)
    ]
    assert rates[0] >= rates[1] >= rates[2]
    assert rates[0] > rates[2]


def test_pna_rate_drops_with_resolution(window: UntaggedWindow, gys: GysParameters) -> None:
    obs = simulate_observables(0.5, 0.1, gys, 10.0)
    rates = [
        pna_key_rate(
            obs, analytic_untagged_stats(MEAN, window, 10**9, eps=eps), window, ETA_S, ETA_D
        ).rate
        for eps in (1e-6, 1e-5, 1e-4)
    ]
    assert rates[0] > rates[1] > rates[2] > 0
    assert rates[0] < trusted_rate(0.5, 0.1, obs).rate


def test_meaningless_confidence_is_flagged(window: UntaggedWindow, gys: GysParameters) -> None:
    stats_ = analytic_untagged_stats(MEAN, window, 10**9, eps=1e-6)
    report = pna_key_rate(simulate_observables(0.5, 0.1, gys, 0.0), stats_, window, ETA_S, ETA_D)
    assert report.flags & RateFlag.MEANINGLESS_CONFIDENCE
    assert "meaningless_confidence" in report.to_row()["flags"]


def test_no_guarantee_is_flagged(window: UntaggedWindow, gys: GysParameters) -> None:
    stats_ = UntaggedStats(0.6, 0.5, 0.99)
    report = pna_key_rate(simulate_observables(0.5, 0.1, gys, 0.0), stats_, window, ETA_S, ETA_D)
    assert report.rate == 0.0
    assert report.flags == RateFlag.NO_UNTAGGED_GUARANTEE


def test_pna_precondition(gys: GysParameters) -> None:
    window = UntaggedWindow(900_000, 1_100_000)
    stats_ = UntaggedStats(0.0, 1e-6, 0.99)
    with pytest.raises(PreconditionError):
        pna_key_rate(simulate_observables(0.5, 0.1, gys, 0.0), stats_, window, 1e-5, ETA_D)


def test_pna_row(window: UntaggedWindow, gys: GysParameters) -> None:
    stats_ = analytic_untagged_stats(MEAN, window, 10**12)
    row = pna_key_rate(simulate_observables(0.5, 0.1, gys, 0.0), stats_, window, ETA_S, ETA_D).to_row()
    assert list(row) == [
        "distance_km",
        "rate",
        "delta",
        "eps",
        "confidence",
        "m_min",
        "m_max",
        "q1_lower",
        "e1_upper",
        "flags",
    ]
