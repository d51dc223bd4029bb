"""Market clearing: the two-period supply-function auction and clearing prices of schedules
"""

import dataclasses
import logging
from typing import Callable, List, Sequence
import numpy as np

from storage_arbitrage.exceptions import NoClearingError
from storage_arbitrage.market.price_functions import ResidualSupply, price_at
from storage_arbitrage.store.store import Schedule, eff_map

logger = logging.getLogger(__name__)

CLEARING_TOL = 1e-10  # absolute defect at which bisection stops
CLEARING_MAX_ITERATIONS = 200
BRACKET_WIDENINGS = 10


@dataclasses.dataclass(frozen=True)
class TwoPeriodClearing:
    """Prices and quantity clearing a two-period market with storage bids.

    p1, p2: clearing prices in periods 1 and 2
    pdiff: price differential p2 - p1 offered to the stores
    q: quantity bought by the stores in period 1 and sold in period 2
    """

    p1: float
    p2: float
    pdiff: float
    q: float


def clear_two_period(
    R1: ResidualSupply,
    R2: ResidualSupply,
    s_agg: Callable[[float], float],
    tol: float = CLEARING_TOL,
    max_iterations: int = CLEARING_MAX_ITERATIONS,
) -> TwoPeriodClearing:
    """Clear R1(p1) = s_agg(p), R2(p2) = -s_agg(p), p2 - p1 = p by bisection on p

    For a trial differential p the stores bid q = s_agg(p), which fixes
    p1 = R1^-1(q) and p2 = R2^-1(-q). The defect (p2 - p1) - p is strictly
    decreasing in p, so it has at most one root.

    Parameters:
    -----------
    R1, R2: ResidualSupply
        Residual supply in each period
    s_agg: callable
        Aggregate quantity the stores buy in period 1 (and sell in period 2)
        as a nondecreasing function of the price differential
    tol: float
        Absolute defect at which to stop
    max_iterations: int
        Bisection iteration cap

    Returns:
    --------
    clearing: TwoPeriodClearing
    """

    def defect(p: float) -> float:
        q = float(s_agg(p))
        return float(R2.inverse(-q) - R1.inverse(q)) - p

    half_width = _initial_half_width(R1, R2)
    for _ in range(BRACKET_WIDENINGS + 1):
        lo, hi = -half_width, half_width
        if defect(lo) >= 0 >= defect(hi):
            break
        half_width *= 2
    else:
        raise NoClearingError(
            f"Clearing defect has no sign change on [-{half_width / 2}, {half_width / 2}]"
        )
    p = (lo + hi) / 2
    for iteration in range(max_iterations):
        p = (lo + hi) / 2
        d = defect(p)
        if abs(d) <= tol:
            break
        if d > 0:
            lo = p
        else:
            hi = p
    logger.debug("Two-period clearing converged after %d iterations", iteration + 1)
    q = float(s_agg(p))
    p1 = float(R1.inverse(q))
    p2 = float(R2.inverse(-q))
    return TwoPeriodClearing(p1=p1, p2=p2, pdiff=p2 - p1, q=q)


def clearing_prices(scenario, schedules: Sequence[Schedule]) -> List[float]:
    """Market clearing price in each period given every store's schedule

    Parameters:
    -----------
    scenario: object with price_functions (list of PriceFunction) and specs
        (list of StoreSpec, one per schedule), e.g. data.scenario.Scenario
    schedules: list of Schedule
        One schedule per store, in the order of scenario.specs

    Returns:
    --------
    prices: list of float
        p_t(sum_i h_i(x_it)) for t = 1..T
    """
    price_functions = scenario.price_functions
    if len(schedules) != len(scenario.specs):
        raise ValueError(f"Got {len(schedules)} schedules for {len(scenario.specs)} stores")
    aggregate = aggregate_market_flows(
        [spec.efficiency for spec in scenario.specs], [s.flows for s in schedules]
    )
    if len(aggregate) != len(price_functions):
        raise ValueError(
            f"Schedules cover {len(aggregate)} periods but there are {len(price_functions)} price functions"
        )
    return [float(price_at(pf, q)) for pf, q in zip(price_functions, aggregate)]


def aggregate_market_flows(efficiencies: Sequence[float], flows: Sequence[np.ndarray]) -> np.ndarray:
    """Sum of market-side quantities h_i(x_it) over stores, per period"""
    if len(flows) == 0:
        raise ValueError("At least one flow vector is needed")
    total = np.zeros(len(flows[0]))
    for efficiency, x in zip(efficiencies, flows):
        total = total + eff_map(efficiency, x)
    return total


def _initial_half_width(R1: ResidualSupply, R2: ResidualSupply) -> float:
    lows = [R1.price_range[0], R2.price_range[0]]
    highs = [R1.price_range[1], R2.price_range[1]]
    return max(max(highs) - min(lows), 1.0)
