import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import log_distance_db
from v2xprop.radio_medium import (
    RadioConfig,
    cull_by_boundary,
    pathloss_db,
    received_power_dbm,
)

CFG = RadioConfig()
# mpmath: 20*log10(4*pi*5.9e9/c)
FRIIS_1M = 47.86482345472625761294272508097799075063


def test_table_defaults():
    assert (CFG.tx_power, CFG.antenna_gain_tx, CFG.antenna_gain_rx, CFG.system_loss) == (25, 9, 9, 3)
    assert (CFG.rx_sensitivity, CFG.carrier_frequency, CFG.pathloss_exponent) == (-93, 5.9e9, 2.4)
    assert (CFG.distance_boundary, CFG.bandwidth, CFG.message_length, CFG.beacon_interval) == \
        (1000, 10e6, 140, 0.1)


def test_pathloss_reference_and_1km():
    assert pathloss_db(1.0, CFG) == pytest.approx(FRIIS_1M, abs=1e-10)
    assert pathloss_db(1000.0, CFG) == pytest.approx(FRIIS_1M + 72.0, abs=1e-10)
    assert pathloss_db(1000.0, CFG) == pytest.approx(log_distance_db(1000, 5.9e9, 2.4), abs=1e-10)


@pytest.mark.parametrize("n", [1.5, 2.0, 2.4, 3.7])
def test_reference_distance_drops_second_term(n):
    cfg = RadioConfig(pathloss_exponent=n)
    assert pathloss_db(1.0, cfg) == pathloss_db(1.0, CFG)


def test_sub_reference_distance_clamps():
    assert pathloss_db(0.2, CFG) == pathloss_db(1.0, CFG)
    assert pathloss_db(0.0, CFG) == pathloss_db(1.0, CFG)


def test_received_power_golden():
    rx = received_power_dbm(pathloss_db(1000.0, CFG), 1.0, CFG)
    assert rx == pytest.approx(-79.86482345472625, abs=1e-9)
    assert rx >= CFG.rx_sensitivity


def test_blocked_and_identity():
    assert received_power_dbm(100.0, 0.0, CFG) == -math.inf
    assert received_power_dbm(100.0, 1.0, CFG) == CFG.link_budget - 100.0


def test_decade_slope_is_exact():
    p10 = received_power_dbm(pathloss_db(10.0, CFG), 1.0, CFG)
    p100 = received_power_dbm(pathloss_db(100.0, CFG), 1.0, CFG)
    assert p10 - p100 == pytest.approx(24.0, abs=1e-9)


@given(st.floats(1.0, 1e5), st.floats(1e-6, 1e4))
def test_pathloss_strictly_increasing(d, step):
    assert pathloss_db(d + step, CFG) > pathloss_db(d, CFG)


def test_sensitivity_range_exceeds_boundary():
    # mpmath root of PL(d) = 133 dB
    d_max = 3526.135708298879
    assert received_power_dbm(pathloss_db(d_max, CFG), 1.0, CFG) == pytest.approx(-93.0, abs=1e-9)
    assert d_max > CFG.distance_boundary


@pytest.mark.parametrize("d, culled", [(1200, True), (1000, False), (0.5, False), (1000.0001, True)])
def test_cull(d, culled):
    assert cull_by_boundary(d, CFG) is culled


@pytest.mark.parametrize("field", ["carrier_frequency", "pathloss_exponent", "distance_boundary",
                                   "beacon_interval"])
def test_invalid_radio_config(field):
    with pytest.raises(ValueError):
        RadioConfig(**{field: 0.0})
