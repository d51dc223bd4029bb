"""Tests for sensitivity.py
"""

import numpy as np
import pytest

from storage_arbitrage.dispatch import sensitivity
from storage_arbitrage.market.price_functions import PriceFunction
from storage_arbitrage.store.store import StoreSpec


@pytest.fixture
def fill_then_empty():
    return [PriceFunction.linear(p, 1.0) for p in (10, 10, 20, 20)]


def test_capacity_change_at_interior_level_has_no_effect(fill_then_empty):
    spec = StoreSpec(capacity=10, rate_in=10, rate_out=10)
    report = sensitivity.sensitivity_capacity(spec, fill_then_empty, None, t0=2, delta=0.01)
    assert not report.changed
    assert np.all(report.flow_deltas == 0)


def test_binding_capacity_change(fill_then_empty):
    spec = StoreSpec(capacity=1, rate_in=10, rate_out=10)
    report = sensitivity.sensitivity_capacity(spec, fill_then_empty, None, t0=2, delta=0.01)
    assert np.allclose(report.base.flows, [0.5, 0.5, -0.5, -0.5])
    assert np.allclose(report.perturbed.flows, [0.505, 0.505, -0.505, -0.505])
    assert report.changed_interval_before == (0, 2)
    assert report.changed_interval_after == (2, 4)
    assert np.all(report.flow_deltas[:2] > 0)
    assert np.all(report.flow_deltas[2:] < 0)
    assert report.objective_delta < 0


def test_zero_capacity_change(fill_then_empty):
    spec = StoreSpec(capacity=1, rate_in=10, rate_out=10)
    report = sensitivity.sensitivity_capacity(spec, fill_then_empty, None, t0=2, delta=0.0)
    assert not report.changed
    assert report.objective_delta == 0


def test_capacity_t0_out_of_range(fill_then_empty):
    spec = StoreSpec(capacity=1, rate_in=10, rate_out=10)
    with pytest.raises(ValueError):
        sensitivity.sensitivity_capacity(spec, fill_then_empty, None, t0=4, delta=0.01)


@pytest.fixture
def buy_once_sell_twice():
    return [PriceFunction.linear(p, 1.0) for p in (10, 20, 20)]


def test_binding_rate_change(buy_once_sell_twice):
    spec = StoreSpec(capacity=10, rate_in=1, rate_out=10)
    report = sensitivity.sensitivity_rate(spec, buy_once_sell_twice, None, t0=1, which="in", delta=0.01)
    assert np.allclose(report.base.flows, [1, -0.5, -0.5])
    assert np.allclose(report.perturbed.flows, [1.01, -0.505, -0.505])
    assert np.allclose(report.flow_deltas, [0.01, -0.005, -0.005])
    assert report.changed_interval_before == (0, 1)
    assert report.changed_interval_after == (1, 3)


def test_nonbinding_rate_change(buy_once_sell_twice):
    spec = StoreSpec(capacity=10, rate_in=10, rate_out=10)
    report = sensitivity.sensitivity_rate(spec, buy_once_sell_twice, None, t0=1, which="in", delta=0.01)
    assert not report.changed


def test_zero_rate_change(buy_once_sell_twice):
    spec = StoreSpec(capacity=10, rate_in=1, rate_out=10)
    report = sensitivity.sensitivity_rate(spec, buy_once_sell_twice, None, t0=2, which="out", delta=0.0)
    assert not report.changed


def test_invalid_rate_side(buy_once_sell_twice):
    spec = StoreSpec(capacity=10, rate_in=1, rate_out=10)
    with pytest.raises(ValueError):
        sensitivity.sensitivity_rate(spec, buy_once_sell_twice, None, t0=1, which="both", delta=0.01)
