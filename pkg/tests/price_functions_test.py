"""Tests for price_functions.py
"""

import numpy as np
import pytest

from storage_arbitrage.exceptions import DegenerateMarketError, PriceDomainError
from storage_arbitrage.market import price_functions
from storage_arbitrage.market.price_functions import PriceFunction, ResidualSupply


def test_linear_price_at_zero_is_pbar():
    pf = PriceFunction.linear(10, 1)
    assert pf(0) == 10


def test_linear_price():
    pf = PriceFunction.linear(10, 1)
    assert pf(2) == 12
    assert np.allclose(pf(np.array([-1.0, 0.0, 3.0])), [9, 10, 13])


def test_tabulated_interpolates():
    pf = PriceFunction.tabulated([(-1, 5), (1, 15)])
    assert np.isclose(pf(0), 10)
    assert np.isclose(pf.slope(0), 5)


def test_out_of_range_raises_domain_error():
    pf = PriceFunction.linear(10, 1, valid_range=(-5, 5))
    with pytest.raises(PriceDomainError, match="-5"):
        pf(6)


def test_shifted_matches_offset_evaluation():
    pf = PriceFunction.tabulated([(-2, 4), (0, 10), (3, 22)])
    shifted = pf.shifted(0.5)
    x = np.linspace(-2.4, 2.4, 13)
    assert np.allclose(shifted(x), pf(x + 0.5))


def test_valid_linear_function_passes():
    pf = PriceFunction.linear(10, 1, valid_range=(-5, 5))
    assert price_functions.validate_price_function(pf) == []


def test_positivity_violation():
    pf = PriceFunction.linear(1, 1, valid_range=(-5, 5))
    violations = price_functions.validate_price_function(pf)
    positivity = [v for v in violations if v.assumption == "positivity"]
    assert len(positivity) == 1
    assert positivity[0].x == -5


def test_monotonicity_violation():
    pf = PriceFunction.tabulated([(-1, 10), (0, 12), (1, 8)])
    violations = price_functions.validate_price_function(pf)
    assert "monotonicity" in [v.assumption for v in violations]


def test_slope_from_elasticity():
    assert np.isclose(price_functions.slope_from_elasticity(30, 1, 100, -1, 50), 0.2)
    assert np.isclose(price_functions.slope_from_elasticity(50, 1, 100, -0.5, 100), 1 / 3)


def test_slope_from_elasticity_degenerate():
    with pytest.raises(DegenerateMarketError):
        price_functions.slope_from_elasticity(10, 0, 100, 0, 50)


def test_residual_supply_inverse():
    R = ResidualSupply(intercept=-10, slope=2)
    assert np.isclose(R(R.inverse(7.0)), 7.0)


def test_residual_supply_must_increase():
    with pytest.raises(ValueError):
        ResidualSupply(intercept=0, slope=0)
