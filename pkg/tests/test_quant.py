import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from xylosim.errors import ConfigError, NumericalError
from xylosim.quant import dash_from_tau, quantize_network, round_half_away
from xylosim.synnet import FloatLayer, FloatNetwork, SynNetSpec, build_synnet


@pytest.mark.parametrize("tau, expected", [(0.020, 1), (0.010, 0), (1.280, 7), (0.007, 0), (1e3, 15)])
def test_dash_from_tau(tau, expected):
    assert dash_from_tau(tau, 0.010) == expected


def test_dash_from_tau_rejects_short_tau():
    with pytest.raises(ConfigError):
        dash_from_tau(0.004, 0.010)


@given(st.floats(0.005, 100.0), st.floats(0.005, 100.0))
def test_dash_monotone(a, b):
    lo, hi = sorted((a, b))
    assert dash_from_tau(lo, 0.01) <= dash_from_tau(hi, 0.01)


def test_round_half_away():
    assert round_half_away([0.5, 1.5, 2.5, -0.5, -2.5, 0.49]).tolist() == [1, 2, 3, -1, -3, 0]


def _single_layer(w, threshold=1.0):
    return FloatNetwork([], FloatLayer(np.atleast_2d(w), 0.02, 0.02, threshold))


def test_half_max_maps_to_127():
    qnet, report = quantize_network(_single_layer([[0.5, -0.25, 0.1]]))
    assert report.scales[0] == pytest.approx(254.0)
    assert qnet.readout.weights[0].tolist() == [127, -64, 25]
    assert qnet.readout.threshold.tolist() == [254]


def test_all_zero_layer():
    qnet, report = quantize_network(_single_layer(np.zeros((2, 3)), threshold=3.4), kappa=2.0)
    assert report.scales == [1.0]
    assert qnet.readout.weights.sum() == 0
    assert qnet.readout.threshold.tolist() == [7, 7]


def test_exact_grid_has_zero_error():
    step = 0.8 / 127
    w = np.array([[127, -127, 3], [0, 64, -5]]) * step
    qnet, report = quantize_network(_single_layer(w))
    assert np.allclose(qnet.readout.weights / report.scales[0], w, rtol=0, atol=1e-15)
    assert report.weight_mse[0] == pytest.approx(0.0, abs=1e-30)


def test_non_finite_rejected():
    with pytest.raises(NumericalError):
        quantize_network(_single_layer([[np.nan, 1.0]]))


def test_threshold_clamped():
    qnet, _ = quantize_network(_single_layer([[1e-6]], threshold=1.0))
    assert qnet.readout.threshold.tolist() == [32767]


@pytest.mark.parametrize("seed", range(10))
def test_round_trip_bound(seed):
    net = build_synnet(SynNetSpec(), seed)
    qnet, report = quantize_network(net)
    for flayer, qlayer, s in zip(net.layers, qnet.layers, report.scales):
        assert np.all(np.abs(flayer.weights - qlayer.weights / s) <= 0.5 / s + 1e-15)
        assert s > 0


def test_dash_table_covers_ladder():
    _, report = quantize_network(build_synnet(SynNetSpec(), 0))
    table = dict(report.dash_table)
    assert table[0.02] == 1 and table[1.28] == 7
    assert report.to_dict()["layers"][0]["scale"] == report.scales[0]
