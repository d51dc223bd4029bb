"""Separable convex period costs for single-store scheduling

A PeriodCosts instance holds the cost C_t(x) of a store flow x in each period
t together with the rate bounds lower_t <= x <= upper_t. The scheduler only
needs three things from it: cost values, one-sided derivatives, and the
response x_t(mu), the set of minimisers of C_t(x) - mu * x over the rate
bounds, returned as its (low, high) end points. Responses are nondecreasing
in mu.
"""

from typing import Callable, Optional, Sequence, Tuple, Union
import numpy as np

from storage_arbitrage.exceptions import NonConvexCostError, PriceDomainError
from storage_arbitrage.market.price_functions import RANGE_TOL, PriceFunction, price_at
from storage_arbitrage.store.store import eff_map

RESPONSE_BISECTIONS = 100
CONVEXITY_GRID = 201
CONVEXITY_TOL = 1e-9

Index = Union[int, slice, np.ndarray]


class PeriodCosts:
    """Base class: generic responses by bisection on one-sided derivatives

    Subclasses implement period_values and derivative, and may override
    values, response, mu_bounds and curvature_bound with closed forms.
    """

    def __init__(self, lower: np.ndarray, upper: np.ndarray):
        self.lower = np.asarray(lower, dtype=float)
        self.upper = np.asarray(upper, dtype=float)
        if np.any(self.lower > 0) or np.any(self.upper < 0):
            raise ValueError("Rate bounds must satisfy lower <= 0 <= upper")

    @property
    def horizon(self) -> int:
        return len(self.lower)

    def period_values(self, t: int, x: np.ndarray) -> np.ndarray:
        """Cost in period t (0-based) at each entry of x"""
        raise NotImplementedError

    def derivative(self, index: Index, x: np.ndarray, side: str = "right") -> np.ndarray:
        """One-sided derivative of the costs of the periods in index at x"""
        raise NotImplementedError

    def values(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.array([self.period_values(t, x[t : t + 1])[0] for t in range(self.horizon)])

    def response(self, mu, index: Index = slice(None)) -> Tuple[np.ndarray, np.ndarray]:
        """End points of argmin_x C_t(x) - mu * x over the rate bounds"""
        idx = np.arange(self.horizon)[index]
        idx = np.atleast_1d(idx)
        mu = np.broadcast_to(np.asarray(mu, dtype=float), idx.shape)
        lower, upper = self.lower[idx], self.upper[idx]
        low = _bisect_derivative(
            lambda x: self.derivative(idx, x, "right") >= mu, lower, upper
        )
        # the first point whose left derivative exceeds mu closes the minimiser set
        high = _bisect_derivative(
            lambda x: self.derivative(idx, x, "left") > mu, lower, upper
        )
        high = np.maximum(high, low)
        if np.ndim(index) == 0 and not isinstance(index, slice):
            return low[0], high[0]
        return low, high

    def mu_bounds(self) -> Tuple[float, float]:
        """Multipliers below and above which every response sits at a rate bound"""
        everything = np.arange(self.horizon)
        d_lower = self.derivative(everything, self.lower, "right")
        d_upper = self.derivative(everything, self.upper, "left")
        return _padded_bounds(float(np.min(d_lower)), float(np.max(d_upper)))

    def curvature_bound(self) -> float:
        """Upper estimate of the second derivative, from sampled derivatives"""
        everything = np.arange(self.horizon)
        samples = np.linspace(0, 1, 11)
        bound = 0.0
        previous = None
        for s in samples:
            x = self.lower + s * (self.upper - self.lower)
            d = self.derivative(everything, x, "right")
            if previous is not None:
                width = (self.upper - self.lower) / 10
                bound = max(bound, float(np.max((d - previous[1]) / np.where(width > 0, width, 1))))
            previous = (x, d)
        return max(bound, 1e-6)

    def subgradient(self, x: np.ndarray, tol: float = 1e-9) -> Tuple[np.ndarray, np.ndarray]:
        """Interval of multipliers for which x is a period-wise minimiser

        At a rate bound the interval extends to infinity on the blocked side.
        """
        everything = np.arange(self.horizon)
        left = self.derivative(everything, x, "left")
        right = self.derivative(everything, x, "right")
        left = np.where(x <= self.lower + tol, -np.inf, left)
        right = np.where(x >= self.upper - tol, np.inf, right)
        return left, right

    def subproblem_gap(self, x: np.ndarray, mu: np.ndarray) -> np.ndarray:
        """C_t(x_t) - mu_t x_t minus its minimum over the rate bounds, per period"""
        best, _ = self.response(mu)
        gap = (self.values(x) - mu * x) - (self.values(best) - mu * best)
        return np.maximum(gap, 0.0)


class MarketCosts(PeriodCosts):
    """Cost h(x) p_t(h(x) + k_t) of a store facing price functions p_t

    k_t is the aggregate market-side quantity of the store's companions. Linear
    price functions use closed-form responses.
    """

    def __init__(
        self,
        prices: Sequence[PriceFunction],
        efficiency: float,
        rate_in: np.ndarray,
        rate_out: np.ndarray,
        others: Optional[np.ndarray] = None,
    ):
        T = len(prices)
        super().__init__(-np.broadcast_to(rate_out, (T,)), np.broadcast_to(rate_in, (T,)))
        self.prices = list(prices)
        self.efficiency = float(efficiency)
        self.others = np.zeros(T) if others is None else np.asarray(others, dtype=float)
        if len(self.others) != T:
            raise ValueError(f"Got {len(self.others)} companion flows for {T} periods")
        self._check_price_ranges()
        self.is_linear = all(pf.is_linear for pf in self.prices)
        if self.is_linear:
            self._pbar = np.array([pf.pbar for pf in self.prices])
            self._pslope = np.array([pf.pslope for pf in self.prices])
            self._base_price = self._pbar + self._pslope * self.others

    def _check_price_ranges(self):
        for t, (pf, k) in enumerate(zip(self.prices, self.others)):
            lo, hi = pf.valid_range
            needed_lo = k + self.efficiency * self.lower[t]
            needed_hi = k + self.upper[t]
            if needed_lo < lo - RANGE_TOL or needed_hi > hi + RANGE_TOL:
                raise PriceDomainError(
                    f"Period {t + 1}: quantities [{needed_lo}, {needed_hi}] exceed the valid range [{lo}, {hi}]"
                )

    def period_values(self, t: int, x: np.ndarray) -> np.ndarray:
        h = np.asarray(eff_map(self.efficiency, x))
        return h * price_at(self.prices[t], h + self.others[t])

    def values(self, x: np.ndarray) -> np.ndarray:
        if not self.is_linear:
            return super().values(x)
        h = np.asarray(eff_map(self.efficiency, x))
        return h * (self._base_price + self._pslope * h)

    def derivative(self, index: Index, x: np.ndarray, side: str = "right") -> np.ndarray:
        idx = np.atleast_1d(np.arange(self.horizon)[index])
        x = np.broadcast_to(np.asarray(x, dtype=float), idx.shape)
        buying = (x > 0) | ((x == 0) & (side == "right"))
        dh = np.where(buying, 1.0, self.efficiency)
        h = dh * x
        y = h + self.others[idx]
        if self.is_linear:
            price = self._pbar[idx] + self._pslope[idx] * y
            slope = self._pslope[idx]
        else:
            price = np.array([price_at(self.prices[i], y_i) for i, y_i in zip(idx, y)])
            slope = np.array([self.prices[i].slope(y_i, side) for i, y_i in zip(idx, y)])
        return dh * (price + h * slope)

    def response(self, mu, index: Index = slice(None)):
        if not self.is_linear:
            return super().response(mu, index)
        a = self._base_price[index]
        s = self._pslope[index]
        lower, upper = self.lower[index], self.upper[index]
        e = self.efficiency
        curved = s > 0
        safe = np.where(curved, s, 1.0)
        buy = np.clip((mu - a) / (2 * safe), 0.0, upper)
        sell = np.clip((mu - e * a) / (2 * e * e * safe), lower, 0.0)
        buy_low = np.where(curved, buy, np.where(mu > a, upper, 0.0))
        buy_high = np.where(curved, buy, np.where(mu >= a, upper, 0.0))
        sell_low = np.where(curved, sell, np.where(mu > e * a, 0.0, lower))
        sell_high = np.where(curved, sell, np.where(mu >= e * a, 0.0, lower))
        low = np.where(mu <= e * a, sell_low, np.where(mu >= a, buy_low, 0.0))
        high = np.where(mu >= a, buy_high, np.where(mu <= e * a, sell_high, 0.0))
        return low[()], high[()]

    def mu_bounds(self) -> Tuple[float, float]:
        if not self.is_linear:
            return super().mu_bounds()
        e = self.efficiency
        d_lower = e * self._base_price + 2 * e * e * self._pslope * self.lower
        d_upper = self._base_price + 2 * self._pslope * self.upper
        return _padded_bounds(float(np.min(d_lower)), float(np.max(d_upper)))

    def curvature_bound(self) -> float:
        if not self.is_linear:
            return super().curvature_bound()
        return max(2 * float(np.max(self._pslope)), 1e-6)


class QuadraticCosts(PeriodCosts):
    """C_t(x) = (x - center_t)^2 / 2, used to project onto the feasible set"""

    def __init__(self, center: np.ndarray, lower: np.ndarray, upper: np.ndarray):
        super().__init__(lower, upper)
        self.center = np.asarray(center, dtype=float)

    def period_values(self, t: int, x: np.ndarray) -> np.ndarray:
        return 0.5 * (np.asarray(x) - self.center[t]) ** 2

    def values(self, x: np.ndarray) -> np.ndarray:
        return 0.5 * (np.asarray(x) - self.center) ** 2

    def derivative(self, index: Index, x: np.ndarray, side: str = "right") -> np.ndarray:
        return np.asarray(x) - self.center[index]

    def response(self, mu, index: Index = slice(None)):
        x = np.clip(self.center[index] + mu, self.lower[index], self.upper[index])
        return x, x

    def curvature_bound(self) -> float:
        return 1.0


class FunctionCosts(PeriodCosts):
    """Costs given as one callable per period

    Each callable f maps flows to costs (vectorised) and provides
    f.derivative(x, side) returning the one-sided derivative.
    """

    def __init__(self, functions: Sequence[Callable], lower: np.ndarray, upper: np.ndarray):
        T = len(functions)
        super().__init__(np.broadcast_to(lower, (T,)), np.broadcast_to(upper, (T,)))
        self.functions = list(functions)

    def period_values(self, t: int, x: np.ndarray) -> np.ndarray:
        return np.asarray(self.functions[t](np.asarray(x, dtype=float)), dtype=float)

    def derivative(self, index: Index, x: np.ndarray, side: str = "right") -> np.ndarray:
        idx = np.atleast_1d(np.arange(self.horizon)[index])
        x = np.broadcast_to(np.asarray(x, dtype=float), idx.shape)
        return np.array([self.functions[i].derivative(x_i, side) for i, x_i in zip(idx, x)], dtype=float)


def check_convexity(costs: PeriodCosts, grid_n: int = CONVEXITY_GRID):
    """Raise NonConvexCostError if some period cost has a negative second difference

    The check samples each period's rate interval on a uniform grid.
    """
    for t in range(costs.horizon):
        x = np.linspace(costs.lower[t], costs.upper[t], grid_n)
        f = costs.period_values(t, x)
        second_differences = f[:-2] - 2 * f[1:-1] + f[2:]
        scale = max(1.0, float(np.max(np.abs(f))))
        bad = np.flatnonzero(second_differences < -CONVEXITY_TOL * scale)
        if len(bad) > 0:
            raise NonConvexCostError(
                f"Period {t + 1} cost is not convex near x={x[bad[0] + 1]:.6g} "
                f"(second difference {second_differences[bad[0]]:.3g})"
            )


def _bisect_derivative(satisfied: Callable, lower: np.ndarray, upper: np.ndarray) -> np.ndarray:
    """Smallest x in [lower, upper] where the monotone predicate holds (upper if never)

    satisfied maps an x vector to a boolean vector and must be monotone in x.
    """
    a, b = lower.copy(), upper.copy()
    at_lower = satisfied(a)
    for _ in range(RESPONSE_BISECTIONS):
        middle = (a + b) / 2
        ok = satisfied(middle)
        b = np.where(ok, middle, b)
        a = np.where(ok, a, middle)
        if np.all(b - a <= 1e-15 * (1 + np.abs(b))):
            break
    return np.where(at_lower, lower, b)


def _padded_bounds(d_min: float, d_max: float) -> Tuple[float, float]:
    margin = 1.0 + 1e-3 * max(abs(d_min), abs(d_max))
    return d_min - margin, d_max + margin
