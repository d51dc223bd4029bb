"""Consumer demand, generator cost models and changes in consumer surplus

Absolute consumer surplus integrates demand up to an infinite price and
diverges for inelastic demand, so surplus is only reported as a difference
between two price paths.
"""

import dataclasses
from typing import Optional, Sequence, Tuple, Union
import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq

from storage_arbitrage.exceptions import NoClearingError, PreconditionError

ArrayLike = Union[float, np.ndarray]


@dataclasses.dataclass(frozen=True)
class DemandModel:
    """Consumer demand in one period as a nonincreasing, nonnegative function of price

    Use DemandModel.inelastic, DemandModel.linear or DemandModel.tabulated.

    Attributes:
        kind (str): "inelastic", "linear" or "tabulated"
        d_star (float): demand at every price (inelastic)
        a, b (float): d(p) = max(a - b p, 0) (linear)
        breakpoints (tuple of (price, quantity) pairs): interpolated linearly,
            constant beyond the table (tabulated)
    """

    kind: str
    d_star: float = 0.0
    a: float = 0.0
    b: float = 0.0
    breakpoints: Optional[Tuple[Tuple[float, float], ...]] = None

    def __post_init__(self):
        if self.kind == "inelastic":
            if self.d_star < 0:
                raise ValueError(f"Demand {self.d_star} must be nonnegative")
        elif self.kind == "linear":
            if self.b < 0 or self.a < 0:
                raise ValueError(f"Linear demand needs a >= 0 and b >= 0, got a={self.a}, b={self.b}")
        elif self.kind == "tabulated":
            table = np.array(self.breakpoints, dtype=float)
            if len(table) < 2 or np.any(np.diff(table[:, 0]) <= 0):
                raise ValueError("Demand breakpoint prices must be strictly increasing")
            if np.any(np.diff(table[:, 1]) > 0) or np.any(table[:, 1] < 0):
                raise ValueError("Tabulated demand must be nonincreasing and nonnegative")
        else:
            raise ValueError(f'Invalid demand "kind" {self.kind}')

    @classmethod
    def inelastic(cls, d_star: float) -> "DemandModel":
        return cls(kind="inelastic", d_star=float(d_star))

    @classmethod
    def linear(cls, a: float, b: float) -> "DemandModel":
        return cls(kind="linear", a=float(a), b=float(b))

    @classmethod
    def tabulated(cls, breakpoints: Sequence[Tuple[float, float]]) -> "DemandModel":
        return cls(kind="tabulated", breakpoints=tuple((float(p), float(q)) for p, q in breakpoints))

    def __call__(self, price: ArrayLike) -> ArrayLike:
        price = np.asarray(price, dtype=float)
        if self.kind == "inelastic":
            return np.full_like(price, self.d_star)[()]
        if self.kind == "linear":
            return np.maximum(self.a - self.b * price, 0.0)[()]
        table = np.array(self.breakpoints)
        return np.interp(price, table[:, 0], table[:, 1])[()]

    def slope(self, price: float) -> float:
        """Right derivative of demand with respect to price"""
        if self.kind == "inelastic":
            return 0.0
        if self.kind == "linear":
            return -self.b if self.a - self.b * price > 0 else 0.0
        table = np.array(self.breakpoints)
        i = np.searchsorted(table[:, 0], price, side="right") - 1
        if i < 0 or i >= len(table) - 1:
            return 0.0
        return float((table[i + 1, 1] - table[i, 1]) / (table[i + 1, 0] - table[i, 0]))


@dataclasses.dataclass(frozen=True)
class GeneratorModel:
    """Supply side of one period: a nondecreasing marginal cost curve up to a capacity

    marginal cost is intercept + slope * q, or interpolated from
    (quantity, marginal cost) breakpoints.
    """

    capacity: float
    intercept: float = 0.0
    slope: float = 0.0
    breakpoints: Optional[Tuple[Tuple[float, float], ...]] = None

    def __post_init__(self):
        if self.capacity <= 0:
            raise ValueError(f"Generator capacity {self.capacity} must be positive")
        if self.breakpoints is None:
            if self.slope < 0:
                raise ValueError("Marginal cost must be nondecreasing")
        else:
            table = np.array(self.breakpoints, dtype=float)
            if len(table) < 2 or np.any(np.diff(table[:, 0]) <= 0) or np.any(np.diff(table[:, 1]) < 0):
                raise ValueError("Marginal cost breakpoints must be increasing in quantity and nondecreasing")

    def marginal_cost(self, q: ArrayLike) -> ArrayLike:
        q = np.asarray(q, dtype=float)
        if self.breakpoints is None:
            return (self.intercept + self.slope * q)[()]
        table = np.array(self.breakpoints)
        return np.interp(q, table[:, 0], table[:, 1])[()]

    def marginal_cost_slope(self, q: float) -> float:
        if self.breakpoints is None:
            return self.slope
        table = np.array(self.breakpoints)
        i = np.searchsorted(table[:, 0], q, side="right") - 1
        if i < 0 or i >= len(table) - 1:
            return 0.0
        return float((table[i + 1, 1] - table[i, 1]) / (table[i + 1, 0] - table[i, 0]))

    def production_cost(self, q: float) -> float:
        """Cost of producing q, the integral of the marginal cost from 0"""
        if self.breakpoints is None:
            return self.intercept * q + 0.5 * self.slope * q**2
        value, _ = quad(self.marginal_cost, 0.0, q, limit=200)
        return value

    def clear(self, demand: DemandModel, extra: float = 0.0) -> Tuple[float, float]:
        """Quantity and price at which supply priced at marginal cost meets demand plus extra

        Returns (q, p) with q = demand(p) + extra and p = marginal_cost(q).
        """

        def excess(q: float) -> float:
            return q - extra - float(demand(self.marginal_cost(q)))

        lo, hi = 0.0, self.capacity
        if excess(lo) > 0 or excess(hi) < 0:
            raise NoClearingError(
                f"No supply in [{lo}, {hi}] meets demand plus {extra} at marginal cost"
            )
        q = lo if excess(lo) == 0 else brentq(excess, lo, hi, xtol=1e-13, rtol=1e-14)
        return q, float(self.marginal_cost(q))


def surplus_delta_exact(
    demand: Sequence[DemandModel],
    prices_with: Sequence[float],
    prices_without: Sequence[float],
) -> float:
    """Change in consumer surplus, sum_t integral of d_t(p) from prices_with_t to prices_without_t

    Positive when consumers gain from storage (prices fall on balance).
    """
    if not len(demand) == len(prices_with) == len(prices_without):
        raise ValueError("Demand models and price vectors must have equal lengths")
    total = 0.0
    for d, p_with, p_without in zip(demand, prices_with, prices_without):
        if p_with == p_without:
            continue
        if d.kind == "inelastic":
            total += d.d_star * (p_without - p_with)
        else:
            value, _ = quad(d, p_with, p_without, limit=200)
            total += value
    return float(total)


def surplus_delta_approx(
    flows_marketside: Sequence[float],
    slopes: Sequence[float],
    base_demand: Sequence[float],
) -> float:
    """First-order change in consumer surplus, -sum_t h(x_t) pslope_t d_t(pbar_t)"""
    h = np.asarray(flows_marketside, dtype=float)
    slopes = np.asarray(slopes, dtype=float)
    base_demand = np.asarray(base_demand, dtype=float)
    if not h.shape == slopes.shape == base_demand.shape:
        raise ValueError("Flows, slopes and base demand must have equal lengths")
    return float(-np.sum(h * slopes * base_demand))


def consumer_surplus(demand: DemandModel, price: float) -> float:
    """Absolute consumer surplus at price, for demand that vanishes at some finite price"""
    if demand.kind == "inelastic":
        raise PreconditionError("Absolute surplus diverges for inelastic demand; use surplus_delta_exact")
    if demand.kind == "linear":
        if demand.b == 0:
            raise PreconditionError("Absolute surplus diverges for demand with zero slope")
        choke = demand.a / demand.b
    else:
        if demand.breakpoints[-1][1] > 0:
            raise PreconditionError("Absolute surplus diverges for demand that stays positive")
        choke = demand.breakpoints[-1][0]
    if price >= choke:
        return 0.0
    value, _ = quad(demand, price, choke, limit=200)
    return value
