"""Tests for assess_convergence.py
"""

import numpy as np
import pytest

from storage_arbitrage.data.price_series import synth_prices, to_price_functions
from storage_arbitrage.equilibrium import assess_convergence
from storage_arbitrage.market.price_functions import PriceFunction
from storage_arbitrage.store.store import Schedule, StoreSpec


@pytest.fixture
def prices():
    return [PriceFunction.linear(p, 1.0) for p in (10, 20, 12, 22)]


def test_runs_from_different_starts_agree(prices, tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    specs = [StoreSpec(capacity=2, rate_in=1, rate_out=1)] * 2
    idle = [Schedule.idle(0.0, 4)] * 2
    busy = [Schedule([0.0, 1.0, 0.0, 1.0, 0.0]), Schedule([0.0, 0.5, 1.0, 0.5, 0.0])]
    results = assess_convergence.run(specs, prices, [idle, busy])
    assert len(results) == 2
    for x, y in zip(results[0].flows, results[1].flows):
        assert np.allclose(x, y, atol=1e-2)
    assert np.isclose(results[0].total_profit, results[1].total_profit, rtol=1e-5)


def test_competition_follows_unconstrained_law(prices):
    spec = StoreSpec(capacity=100, rate_in=100, rate_out=100)
    study = assess_convergence.competition_study(spec, prices, [1, 2, 3], n_jobs=1)
    for n in study.n_list:
        assert study.converged[n]
        assert np.isclose(study.total_profits[n], study.law_profits[n], rtol=1e-6)
        assert np.isclose(study.total_volumes[n], study.law_volumes[n], rtol=1e-6)


def test_competition_erodes_profit(prices):
    spec = StoreSpec(capacity=1, rate_in=0.5, rate_out=0.5)
    study = assess_convergence.competition_study(spec, prices, [1, 2, 3, 4], n_jobs=1)
    totals = [study.total_profits[n] for n in study.n_list]
    assert np.all(np.diff(totals) <= 1e-9)
    for n in study.n_list:
        assert study.total_profits[n] <= study.cooperative_profits[n] + 1e-9
    assert np.isclose(study.total_profits[1], study.cooperative_profits[1])


def test_competition_on_synthetic_days():
    spec = StoreSpec(capacity=20, rate_in=1, rate_out=1, efficiency=0.75)
    prices = to_price_functions(synth_prices(seed=0, days=3), 1.0, (-0.75, 1.0))
    study = assess_convergence.competition_study(spec, prices, [1, 2, 3], n_jobs=1)
    totals = [study.total_profits[n] for n in study.n_list]
    assert totals[0] > 0
    assert np.all(np.diff(totals) < 0)
    for n in study.n_list:
        assert study.converged[n]
        assert study.law_profits[n] * (1 - 1e-6) <= study.total_profits[n]
        assert study.total_profits[n] <= study.cooperative_profits[n] * (1 + 1e-6)
