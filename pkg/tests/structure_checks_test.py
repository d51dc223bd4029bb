"""Tests for structure_checks.py
"""

import numpy as np
import pytest

from storage_arbitrage.equilibrium import structure_checks
from storage_arbitrage.equilibrium.equilibria import nash_linear
from storage_arbitrage.market.price_functions import PriceFunction
from storage_arbitrage.store.store import StoreSpec


@pytest.fixture
def prices():
    return [PriceFunction.linear(p, 1.0) for p in (10, 20, 12, 22, 9, 25)]


def test_scaling_single_store(prices):
    spec = StoreSpec(capacity=2, rate_in=1, rate_out=1)
    report = structure_checks.scaling_check(spec, prices, [1])
    assert report.discrepancies[1] <= 1e-9


def test_scaling_constrained_stores(prices):
    spec = StoreSpec(capacity=2, rate_in=1, rate_out=1)
    report = structure_checks.scaling_check(spec, prices, [2, 5])
    assert set(report.discrepancies) == {2, 5}
    assert report.max_discrepancy <= 1e-6


def test_identical_stores_are_ordered(prices):
    specs = [StoreSpec(capacity=2, rate_in=1, rate_out=1)] * 2
    report = structure_checks.ordering_check(nash_linear(specs, prices), specs)
    assert report.applicable
    assert report.ordered


def test_levels_ordered_by_capacity():
    prices = [PriceFunction.linear(p, 0.1) for p in (10, 10, 10, 30, 30, 30)]
    specs = [StoreSpec(capacity=1, rate_in=10, rate_out=10), StoreSpec(capacity=2, rate_in=10, rate_out=10)]
    result = nash_linear(specs, prices)
    assert np.isclose(np.max(result.schedules[0].levels), 1)
    report = structure_checks.ordering_check(result, specs)
    assert report.applicable
    assert report.ordered
    assert report.violation is None


def test_ordering_not_applicable(prices):
    specs = [StoreSpec(capacity=1, rate_in=1, rate_out=1), StoreSpec(capacity=2, rate_in=0.5, rate_out=0.5)]
    report = structure_checks.ordering_check(nash_linear(specs, prices), specs)
    assert not report.applicable


def _random_prices(rng, T):
    return [PriceFunction.linear(p, s) for p, s in zip(rng.uniform(5, 50, T), rng.uniform(0.1, 2, T))]


@pytest.mark.parametrize("seed", range(20))
def test_scaling_on_random_markets(seed):
    rng = np.random.default_rng(seed)
    spec = StoreSpec(
        capacity=rng.uniform(0.5, 3),
        rate_in=rng.uniform(0.2, 2),
        rate_out=rng.uniform(0.2, 2),
        efficiency=rng.uniform(0.6, 1),
    )
    report = structure_checks.scaling_check(spec, _random_prices(rng, int(rng.integers(2, 9))), [2, 3, 5])
    assert report.max_discrepancy <= 1e-6


@pytest.mark.parametrize("seed", range(20))
def test_levels_ordered_on_random_markets(seed):
    rng = np.random.default_rng(50 + seed)
    rate_in, rate_out, efficiency = rng.uniform(0.2, 2), rng.uniform(0.2, 2), rng.uniform(0.6, 1)
    specs = [
        StoreSpec(capacity=c, rate_in=rate_in, rate_out=rate_out, efficiency=efficiency)
        for c in np.sort(rng.uniform(0.3, 3, int(rng.integers(2, 4))))
    ]
    result = nash_linear(specs, _random_prices(rng, int(rng.integers(3, 9))))
    report = structure_checks.ordering_check(result, specs)
    assert report.applicable
    assert report.ordered, report.violation
