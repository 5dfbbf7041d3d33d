# pylint: disable=all

import math

import pytest

from pnrmon.channel import (
    ChannelObservables,
    GainModel,
    GysParameters,
    cutoff_distance,
    gain_and_error,
    overall_transmittance,
    simulate_observables,
)
from pnrmon.errors import InvalidParameterError

from .mocks import *


@pytest.fixture
def gys() -> GysParameters:
    return GysParameters()


def test_default_parameters(gys: GysParameters) -> None:
    assert (gys.eta_bob, gys.alpha, gys.y0, gys.e_det, gys.e0) == (
        0.045,
        0.21,
        1.7e-6,
        0.033,
        0.5,
    )
    assert gys.gain_model is GainModel.ADDITIVE


def test_parameters_dict(gys: GysParameters) -> None:
    assert GysParameters.from_dict(gys.to_dict()) == gys
    other = GysParameters.from_dict({"alpha": 0.2, "gain_model": "complementary"})
    assert other.alpha == 0.2
    assert other.gain_model is GainModel.COMPLEMENTARY


@pytest.mark.parametrize("kwargs", [{"y0": -1e-6}, {"e_det": 1.5}, {"alpha": -0.1}])
def test_invalid_parameters(kwargs: dict) -> None:
    with pytest.raises(InvalidParameterError):
        GysParameters(**kwargs)


def test_transmittance(gys: GysParameters) -> None:
    assert overall_transmittance(gys, 0.0) == 0.045
    assert overall_transmittance(gys, 100.0) == pytest.approx(0.045 * 10**-2.1, rel=1e-12)
    with pytest.raises(InvalidParameterError):
        overall_transmittance(gys, -1.0)


def test_vacuum_gain_is_dark_count(gys: GysParameters) -> None:
    gain, error = gain_and_error(0.0, 0.045, gys)
    assert gain == gys.y0
    assert error == pytest.approx(0.5)


def test_gain_and_error(gys: GysParameters) -> None:
    eta = overall_transmittance(gys, 20.0)
    gain, error = gain_and_error(0.5, eta, gys)
    detected = 1 - math.exp(-eta * 0.5)
    assert gain == pytest.approx(gys.y0 + detected, rel=1e-12)
    assert error == pytest.approx((0.5 * gys.y0 + 0.033 * detected) / gain, rel=1e-12)


def test_complementary_gain() -> None:
    gys = GysParameters(gain_model=GainModel.COMPLEMENTARY)
    gain, _ = gain_and_error(0.5, 0.01, gys)
    assert gain == pytest.approx(1 - (1 - gys.y0) * math.exp(-0.005), rel=1e-12)


def test_zero_gain() -> None:
    gys = GysParameters(y0=0.0)
    assert gain_and_error(0.0, 0.5, gys) == (0.0, 0.5)


def test_observables_decrease_with_distance(gys: GysParameters) -> None:
    previous = simulate_observables(0.5, 0.1, gys, 0.0)
    for distance in range(10, 160, 10):
        obs = simulate_observables(0.5, 0.1, gys, float(distance))
        assert obs.qs < previous.qs
        assert obs.qd < previous.qd
        assert obs.es > previous.es
        assert obs.q0 == gys.y0
        previous = obs
    assert previous.qs > previous.qd > previous.q0


def test_observables_row(gys: GysParameters) -> None:
    row = simulate_observables(0.5, 0.1, gys, 50.0).to_row()
    assert list(row) == ["q0", "qd", "qs", "ed", "es"]


def test_invalid_observables() -> None:
    with pytest.raises(InvalidParameterError):
        ChannelObservables(0.0, 1e-6, 1e-3, 1.2, 0.03, 0.03)
    with pytest.raises(InvalidParameterError):
        ChannelObservables(0.0, 1e-6, 1e-3, 1e-2, 0.6, 0.03)


def test_cutoff_distance() -> None:
    assert cutoff_distance([0, 10, 20, 30], [1e-3, 1e-4, 0.0, 0.0]) == 10
    assert cutoff_distance([0, 10], [0.0, 0.0]) is None
