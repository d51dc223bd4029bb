"""Tests for surplus.py
"""

import numpy as np
import pytest

from storage_arbitrage.exceptions import NoClearingError, PreconditionError
from storage_arbitrage.welfare import surplus
from storage_arbitrage.welfare.surplus import DemandModel, GeneratorModel


def test_no_price_change_no_surplus_change():
    demand = [DemandModel.linear(100, 1)] * 2
    assert surplus.surplus_delta_exact(demand, [20, 30], [20, 30]) == 0


def test_inelastic_surplus_delta():
    assert np.isclose(surplus.surplus_delta_exact([DemandModel.inelastic(100)], [19], [20]), 100)


def test_linear_surplus_delta():
    assert np.isclose(surplus.surplus_delta_exact([DemandModel.linear(100, 1)], [19], [20]), 80.5)


def test_tabulated_surplus_delta():
    demand = DemandModel.tabulated([(0, 100), (100, 0)])
    assert np.isclose(surplus.surplus_delta_exact([demand], [19], [20]), 80.5)


def test_approx_zero_flows():
    assert surplus.surplus_delta_approx([0, 0], [1, 1], [100, 100]) == 0


def test_approx_symmetric_two_periods():
    assert np.isclose(surplus.surplus_delta_approx([2.5, -2.5], [1, 1], [100, 100]), 0)


def test_approx_matches_exact_for_inelastic_demand():
    # buying 10/6 at slope 2 then selling at slope 1 raises the consumers' bill
    x = 10 / 6
    h = np.array([x, -x])
    slopes = np.array([2.0, 1.0])
    pbar = np.array([10.0, 20.0])
    demand = [DemandModel.inelastic(100)] * 2
    approx = surplus.surplus_delta_approx(h, slopes, [100, 100])
    exact = surplus.surplus_delta_exact(demand, pbar + slopes * h, pbar)
    assert np.isclose(approx, -500 / 3)
    assert np.isclose(exact, approx)


def test_approximation_error_is_second_order():
    demand = [DemandModel.linear(100, 1)] * 2
    pbar = np.array([20.0, 40.0])
    slopes = np.array([0.5, 1.0])
    h = np.array([3.0, -3.0])
    base = [d(p) for d, p in zip(demand, pbar)]

    def error(scale):
        exact = surplus.surplus_delta_exact(demand, pbar + slopes * h * scale, pbar)
        return abs(exact - surplus.surplus_delta_approx(h * scale, slopes, base))

    ratio = error(1.0) / error(0.5)
    assert 3 <= ratio <= 5


def test_absolute_surplus_diverges_for_inelastic_demand():
    with pytest.raises(PreconditionError):
        surplus.consumer_surplus(DemandModel.inelastic(100), 20)


def test_absolute_surplus_linear_demand():
    assert np.isclose(surplus.consumer_surplus(DemandModel.linear(100, 1), 20), 3200)


def test_demand_must_be_nonincreasing():
    with pytest.raises(ValueError):
        DemandModel.tabulated([(0, 10), (10, 20)])


def test_generator_clears_at_marginal_cost():
    gen = GeneratorModel(capacity=100, intercept=10, slope=1)
    q, p = gen.clear(DemandModel.inelastic(30), extra=5)
    assert np.isclose(q, 35)
    assert np.isclose(p, 45)
    assert np.isclose(gen.production_cost(q), 10 * 35 + 35**2 / 2)


def test_generator_without_enough_capacity():
    gen = GeneratorModel(capacity=10, intercept=10, slope=1)
    with pytest.raises(NoClearingError):
        gen.clear(DemandModel.inelastic(30))


def test_tabulated_production_cost():
    gen = GeneratorModel(capacity=100, breakpoints=((0, 10), (100, 110)))
    assert np.isclose(gen.production_cost(20), 10 * 20 + 20**2 / 2)
