"""Store costs under different ownership

A store owned by consumers, by the generator, or by society as a whole
faces the same scheduling problem as a merchant store, only with different
per-period costs. Each function here builds those costs as a FunctionCosts
instance (one callable per period) that plugs straight into optimize_single
through its costs argument. Costs are checked for convexity on construction.
"""

from typing import List, Sequence
import numpy as np

from storage_arbitrage.dispatch.costs import FunctionCosts, check_convexity
from storage_arbitrage.market.price_functions import PriceFunction, price_at
from storage_arbitrage.store.store import StoreSpec, eff_map
from storage_arbitrage.welfare.surplus import DemandModel, GeneratorModel, surplus_delta_exact


class _OwnedCost:
    """Cost of store flow x in one period as a function of its market-side quantity h(x)

    Subclasses implement _value(h) with _value(0) = 0 and _slope(h), the
    derivative with respect to h.
    """

    def __init__(self, efficiency: float):
        self.efficiency = efficiency

    def __call__(self, x: np.ndarray) -> np.ndarray:
        h = np.atleast_1d(eff_map(self.efficiency, x))
        values = np.array([self._value(float(h_i)) for h_i in h])
        return values if np.ndim(x) > 0 else values[0]

    def derivative(self, x: float, side: str = "right") -> float:
        buying = x > 0 or (x == 0 and side == "right")
        dh = 1.0 if buying else self.efficiency
        return dh * self._slope(float(eff_map(self.efficiency, x)), side)

    def _value(self, h: float) -> float:
        raise NotImplementedError

    def _slope(self, h: float, side: str) -> float:
        raise NotImplementedError


class _ConsumerOwnedCost(_OwnedCost):
    """Payment h p(h) plus the consumers' surplus loss from the price moving from p(0) to p(h)

    The payment is on the market-side quantity h = h(x), so a sale of x < 0
    is paid at efficiency * x rather than x.
    """

    def __init__(self, pf: PriceFunction, demand: DemandModel, efficiency: float):
        super().__init__(efficiency)
        self.pf = pf
        self.demand = demand
        self.base_price = float(price_at(pf, 0.0))

    def _value(self, h: float) -> float:
        price = float(price_at(self.pf, h))
        return h * price - surplus_delta_exact([self.demand], [price], [self.base_price])

    def _slope(self, h: float, side: str) -> float:
        price = float(price_at(self.pf, h))
        return price + (h + float(self.demand(price))) * float(self.pf.slope(h, side))


class _GeneratorOwnedCost(_OwnedCost):
    """Extra production cost less extra revenue from consumers, after supply is re-optimised

    Supply is priced at marginal cost and clears demand plus the store's purchase h.
    """

    def __init__(self, gen: GeneratorModel, demand: DemandModel, efficiency: float):
        super().__init__(efficiency)
        self.gen = gen
        self.demand = demand
        self.q0, self.p0 = gen.clear(demand)
        self.cost0 = gen.production_cost(self.q0)
        self.revenue0 = self.p0 * float(demand(self.p0))

    def _value(self, h: float) -> float:
        q, p = self.gen.clear(self.demand, h)
        return (self.gen.production_cost(q) - self.cost0) - (p * float(self.demand(p)) - self.revenue0)

    def _slope(self, h: float, side: str) -> float:
        q, p = self.gen.clear(self.demand, h)
        mc_slope = self.gen.marginal_cost_slope(q)
        d_slope = self.demand.slope(p)
        dq = 1 / (1 - d_slope * mc_slope)
        return dq * (p - (float(self.demand(p)) + p * d_slope) * mc_slope)


class _SocialCost(_GeneratorOwnedCost):
    """Extra production cost less the consumers' extra gross benefit

    Consumer payments are transfers within society, so the marginal cost of
    a purchase is the marginal production cost at the new clearing point.
    """

    def _value(self, h: float) -> float:
        _, p = self.gen.clear(self.demand, h)
        return super()._value(h) - surplus_delta_exact([self.demand], [p], [self.p0])

    def _slope(self, h: float, side: str) -> float:
        _, p = self.gen.clear(self.demand, h)
        return p


def consumer_owned_costs(scenario, demand: Sequence[DemandModel], store: int = 0) -> FunctionCosts:
    """Per-period costs of a store owned by the consumers

    Parameters:
    -----------
    scenario: object with price_functions and specs, e.g. data.scenario.Scenario
    demand: list of DemandModel
        One demand model per period
    store: int
        Index of the store in scenario.specs whose rates and efficiency apply

    Returns:
    --------
    costs: FunctionCosts
        costs.functions holds the per-period cost functions of the flow x
    """
    prices = scenario.price_functions
    _check_lengths(prices, demand)
    spec = scenario.specs[store]
    functions = [_ConsumerOwnedCost(pf, d, spec.efficiency) for pf, d in zip(prices, demand)]
    return _checked_costs(functions, spec)


def generator_owned_costs(
    scenario, gen: Sequence[GeneratorModel], demand: Sequence[DemandModel], store: int = 0
) -> FunctionCosts:
    """Per-period costs of a store owned by a generator that re-optimises its supply

    Raises NoClearingError when supply and demand do not meet in some period.
    """
    _check_lengths(gen, demand)
    spec = scenario.specs[store]
    functions = [_GeneratorOwnedCost(g, d, spec.efficiency) for g, d in zip(gen, demand)]
    return _checked_costs(functions, spec)


def social_costs(
    scenario, gen: Sequence[GeneratorModel], demand: Sequence[DemandModel], store: int = 0
) -> FunctionCosts:
    """Per-period costs of a store run by a planner that also owns the generator

    The generator's supply is replaced by its marginal cost curve.
    """
    _check_lengths(gen, demand)
    spec = scenario.specs[store]
    functions = [_SocialCost(g, d, spec.efficiency) for g, d in zip(gen, demand)]
    return _checked_costs(functions, spec)


def _check_lengths(first: Sequence, demand: Sequence[DemandModel]):
    if len(first) != len(demand):
        raise ValueError(f"Got {len(demand)} demand models for {len(first)} periods")


def _checked_costs(functions: List[_OwnedCost], spec: StoreSpec) -> FunctionCosts:
    costs = FunctionCosts(functions, -spec.rate_out, spec.rate_in)
    check_convexity(costs)
    return costs
