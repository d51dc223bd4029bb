"""Tests for ownership.py
"""

import numpy as np
import pytest

from storage_arbitrage.data.price_series import PriceSeries, synth_prices
from storage_arbitrage.data.scenario import Scenario
from storage_arbitrage.dispatch.dispatchers import optimize_single
from storage_arbitrage.store.store import StoreSpec
from storage_arbitrage.welfare import ownership
from storage_arbitrage.welfare.surplus import DemandModel, GeneratorModel


def _scenario(pbar, lam, spec):
    series = synth_prices(seed=0, days=1, day_amp=0, week_amp=0, season_amp=0, noise_sd=0)
    series = PriceSeries(series.timestamps[: len(pbar)], pbar)
    return Scenario(series=series, lam=lam, specs=[spec])


def test_consumer_owned_cost_inelastic_demand():
    spec = StoreSpec(capacity=10, rate_in=1, rate_out=1)
    scenario = _scenario([10.0, 20.0], 0.1, spec)
    costs = ownership.consumer_owned_costs(scenario, [DemandModel.inelastic(100)] * 2)
    cost = costs.functions[0]
    assert cost(0.0) == 0
    # x (pbar + pslope h) + pslope h d*
    assert np.isclose(cost(0.5), 0.5 * 10.5 + 1.0 * 0.5 * 100)


def test_consumer_owned_store_worthless_on_flat_supply():
    spec = StoreSpec(capacity=10, rate_in=1, rate_out=1)
    scenario = _scenario([10.0, 10.0, 10.0], 0.0, spec)
    costs = ownership.consumer_owned_costs(scenario, [DemandModel.linear(100, 1)] * 3)
    sol = optimize_single(spec, scenario.price_functions, costs=costs)
    assert abs(sol.profit) <= 1e-9


def test_generator_owned_store_worthless_at_constant_marginal_cost():
    spec = StoreSpec(capacity=10, rate_in=1, rate_out=1)
    scenario = _scenario([30.0, 30.0, 30.0], 0.0, spec)
    gen = [GeneratorModel(capacity=1000, intercept=30, slope=0)] * 3
    demand = [DemandModel.inelastic(d) for d in (50, 80, 60)]
    costs = ownership.generator_owned_costs(scenario, gen, demand)
    assert costs.functions[1](0.0) == 0
    sol = optimize_single(spec, scenario.price_functions, costs=costs)
    assert abs(sol.profit) <= 1e-9


def test_social_store_worthless_at_constant_marginal_cost():
    spec = StoreSpec(capacity=10, rate_in=1, rate_out=1)
    scenario = _scenario([30.0, 30.0], 0.0, spec)
    gen = [GeneratorModel(capacity=1000, intercept=30, slope=0)] * 2
    demand = [DemandModel.inelastic(d) for d in (50, 80)]
    sol = optimize_single(spec, scenario.price_functions, costs=ownership.social_costs(scenario, gen, demand))
    assert abs(sol.profit) <= 1e-9


@pytest.fixture
def day_night():
    spec = StoreSpec(capacity=20, rate_in=20, rate_out=20)
    scenario = _scenario([40.0, 60.0], 0.0, spec)
    gen = [GeneratorModel(capacity=1000, intercept=10, slope=1)] * 2
    demand = [DemandModel.inelastic(30), DemandModel.inelastic(50)]
    return spec, scenario, gen, demand


def test_social_store_levels_production(day_night):
    spec, scenario, gen, demand = day_night
    costs = ownership.social_costs(scenario, gen, demand)
    assert costs.functions[0](0.0) == 0
    sol = optimize_single(spec, scenario.price_functions, costs=costs)
    assert np.allclose(sol.flows, [10, -10], atol=1e-6)
    # production cost saving 20 h - h^2 on a lattice
    h = np.arange(0, 20, 0.01)
    assert np.isclose(sol.profit, np.max(20 * h - h**2), atol=1e-6)


def test_generator_owned_costs_are_convex(day_night):
    spec, scenario, gen, demand = day_night
    costs = ownership.generator_owned_costs(scenario, gen, demand)
    x = np.linspace(-20, 20, 41)
    values = costs.functions[0](x)
    assert np.all(values[:-2] - 2 * values[1:-1] + values[2:] >= -1e-9)


def test_mismatched_lengths(day_night):
    spec, scenario, gen, demand = day_night
    with pytest.raises(ValueError):
        ownership.generator_owned_costs(scenario, gen, demand[:1])


def test_generator_owned_store_moves_production_off_peak():
    spec = StoreSpec(capacity=20, rate_in=20, rate_out=20)
    scenario = _scenario([30.0, 50.0], 0.0, spec)
    gen = [GeneratorModel(capacity=1000, intercept=10, slope=1)] * 2
    demand = [DemandModel.linear(50, 1), DemandModel.linear(90, 1)]
    costs = ownership.generator_owned_costs(scenario, gen, demand)
    sol = optimize_single(spec, scenario.price_functions, costs=costs)
    assert sol.flows[0] > 0
    assert sol.flows[1] < 0
    # marginal costs (30 + a) / 4 + 3 h / 4 in each period
    assert np.allclose(sol.flows, [20 / 3, -20 / 3], atol=1e-5)
    assert np.isclose(sol.profit, 100 / 3, atol=1e-6)


def test_consumer_owned_cost_pays_on_market_side_quantity():
    spec = StoreSpec(capacity=10, rate_in=1, rate_out=1, efficiency=0.75, level_start=1, level_end=1)
    scenario = _scenario([10.0, 20.0], 0.1, spec)
    costs = ownership.consumer_owned_costs(scenario, [DemandModel.inelastic(100)] * 2)
    cost = costs.functions[0]
    # selling 0.5 delivers h = -0.375 at price 9.625
    assert np.isclose(cost(-0.5), -0.375 * 9.625 - 0.375 * 100)
    assert np.isclose(cost(0.5), 0.5 * 10.5 + 0.5 * 100)
