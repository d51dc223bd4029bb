"""Tests for rolling_horizon.py
"""

import numpy as np
import pytest

from storage_arbitrage.data.price_series import synth_prices, to_price_functions
from storage_arbitrage.dispatch.dispatchers import optimize_single
from storage_arbitrage.dispatch.rolling_horizon import rolling_horizon
from storage_arbitrage.market.price_functions import PriceFunction
from storage_arbitrage.store.store import StoreSpec, feasible


@pytest.fixture
def problem():
    spec = StoreSpec(capacity=2, rate_in=1, rate_out=1, efficiency=0.9)
    pbar = [10, 12, 30, 28, 11, 9, 26, 31]
    return spec, [PriceFunction.linear(p, 0.5) for p in pbar]


def test_full_window_matches_single_solve(problem):
    spec, prices = problem
    result = rolling_horizon(spec, prices, window=8, step=8)
    sol = optimize_single(spec, prices)
    assert np.allclose(result.schedule.levels, sol.schedule.levels)
    assert np.isclose(result.profit, sol.profit)
    assert result.seams == []


def test_short_window_is_feasible_and_no_better(problem):
    spec, prices = problem
    result = rolling_horizon(spec, prices, window=4, step=2)
    ok, _ = feasible(spec, result.schedule)
    assert ok
    assert result.seams == [2, 4]
    assert result.profit <= optimize_single(spec, prices).profit + 1e-9


def test_invalid_step(problem):
    spec, prices = problem
    with pytest.raises(ValueError):
        rolling_horizon(spec, prices, window=2, step=3)


def test_window_too_short_to_empty_a_full_store():
    spec = StoreSpec(capacity=4, rate_in=1, rate_out=1, level_start=4, level_end=0)
    prices = [PriceFunction.linear(p, 0.5) for p in (30, 28, 25, 20, 15, 12, 10, 9)]
    result = rolling_horizon(spec, prices, window=2, step=1)
    ok, violations = feasible(spec, result.schedule)
    assert ok, violations
    assert np.isclose(result.schedule.levels[-1], 0)
    assert result.profit <= optimize_single(spec, prices).profit + 1e-9


def test_three_day_windows_on_synthetic_days():
    spec = StoreSpec(capacity=4, rate_in=1, rate_out=1, efficiency=0.75)
    series = synth_prices(seed=0, days=9)
    prices = to_price_functions(series, 0.01, (-spec.efficiency * spec.rate_out, spec.rate_in))
    full = optimize_single(spec, prices)
    result = rolling_horizon(spec, prices, window=3 * 48, step=48)
    assert result.seams == [48 * d for d in range(1, 7)]
    assert full.profit > 0
    assert result.profit >= 0.99 * full.profit
    assert result.profit <= full.profit + 1e-6
