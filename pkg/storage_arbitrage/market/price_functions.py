"""Per-period price functions and checks of the standing market assumptions

A price function gives the market clearing price in one period as a function
of the net quantity bought by the stores. Two forms are supported: the linear
form p(x) = pbar + pslope * x, and a tabulated form interpolated linearly
between (quantity, price) breakpoints.

The solvers rely on three assumptions about every price function: it is
strictly positive, it is nondecreasing, and x * p(x + k) is convex in x for
each companion quantity k of interest. validate_price_function checks them on
a sampled grid.
"""

import dataclasses
from typing import List, Optional, Sequence, Tuple, Union
import numpy as np

from storage_arbitrage.exceptions import DegenerateMarketError, PriceDomainError

RANGE_TOL = 1e-9  # slack allowed at the ends of a valid range
CONVEXITY_TOL = 1e-9  # second differences above -CONVEXITY_TOL count as convex
MONOTONE_TOL = 1e-12

ArrayLike = Union[float, np.ndarray]


@dataclasses.dataclass(frozen=True)
class PriceFunction:
    """Price in one period as a function of net storage purchases.

    Use PriceFunction.linear or PriceFunction.tabulated to construct.

    Attributes:
        pbar (float): price with no storage activity (linear form)
        pslope (float): price increase per unit bought (linear form)
        breakpoints (tuple of (quantity, price) pairs or None): tabulated form,
            quantities strictly increasing
        valid_range (tuple of float): quantities the function may be evaluated at
    """

    pbar: float = 0.0
    pslope: float = 0.0
    breakpoints: Optional[Tuple[Tuple[float, float], ...]] = None
    valid_range: Tuple[float, float] = (-np.inf, np.inf)

    @classmethod
    def linear(
        cls,
        pbar: float,
        pslope: float,
        valid_range: Tuple[float, float] = (-np.inf, np.inf),
    ) -> "PriceFunction":
        return cls(
            pbar=float(pbar),
            pslope=float(pslope),
            valid_range=(float(valid_range[0]), float(valid_range[1])),
        )

    @classmethod
    def tabulated(
        cls,
        breakpoints: Sequence[Tuple[float, float]],
        valid_range: Optional[Tuple[float, float]] = None,
    ) -> "PriceFunction":
        points = tuple((float(q), float(p)) for q, p in breakpoints)
        if len(points) < 2:
            raise ValueError("A tabulated price function needs at least 2 breakpoints")
        quantities = np.array([q for q, _ in points])
        if np.any(np.diff(quantities) <= 0):
            raise ValueError("Breakpoint quantities must be strictly increasing")
        if valid_range is None:
            valid_range = (points[0][0], points[-1][0])
        return cls(breakpoints=points, valid_range=valid_range)

    @property
    def is_linear(self) -> bool:
        return self.breakpoints is None

    def __call__(self, x: ArrayLike) -> ArrayLike:
        return price_at(self, x)

    def slope(self, x: ArrayLike, side: str = "right") -> ArrayLike:
        """One-sided derivative of the price with respect to quantity"""
        x = np.asarray(x, dtype=float)
        if self.is_linear:
            return np.full_like(x, self.pslope)[()]
        quantities, prices = self._table()
        slopes = np.diff(prices) / np.diff(quantities)
        segment = np.clip(np.searchsorted(quantities, x, side=side) - 1, 0, len(slopes) - 1)
        return slopes[segment][()]

    def shifted(self, k: float) -> "PriceFunction":
        """Return x -> p(x + k) as a new price function"""
        lo, hi = self.valid_range
        if self.is_linear:
            return PriceFunction.linear(self.pbar + self.pslope * k, self.pslope, (lo - k, hi - k))
        return PriceFunction.tabulated(
            [(q - k, p) for q, p in self.breakpoints], valid_range=(lo - k, hi - k)
        )

    def _table(self) -> Tuple[np.ndarray, np.ndarray]:
        quantities = np.array([q for q, _ in self.breakpoints])
        prices = np.array([p for _, p in self.breakpoints])
        return quantities, prices


@dataclasses.dataclass(frozen=True)
class AssumptionViolation:
    """One failed market assumption together with its witnessing grid point"""

    assumption: str  # "positivity", "monotonicity" or "convexity"
    x: float
    k: float = 0.0
    value: float = 0.0


@dataclasses.dataclass(frozen=True)
class ResidualSupply:
    """External supply minus external demand as a strictly increasing function of price.

    Linear form: R(p) = intercept + slope * p. Tabulated form: (price, quantity)
    breakpoints, interpolated linearly and extrapolated with the end slopes.
    """

    intercept: float = 0.0
    slope: float = 1.0
    breakpoints: Optional[Tuple[Tuple[float, float], ...]] = None
    price_range: Tuple[float, float] = (0.0, 1000.0)

    def __post_init__(self):
        if self.breakpoints is None:
            if self.slope <= 0:
                raise ValueError("Residual supply must be strictly increasing")
        else:
            table = np.array(self.breakpoints, dtype=float)
            if len(table) < 2 or np.any(np.diff(table[:, 0]) <= 0) or np.any(np.diff(table[:, 1]) <= 0):
                raise ValueError("Residual supply breakpoints must be strictly increasing")

    def __call__(self, price: ArrayLike) -> ArrayLike:
        price = np.asarray(price, dtype=float)
        if self.breakpoints is None:
            return (self.intercept + self.slope * price)[()]
        table = np.array(self.breakpoints, dtype=float)
        return _extrapolated_interp(price, table[:, 0], table[:, 1])[()]

    def inverse(self, quantity: ArrayLike) -> ArrayLike:
        """Price at which the residual supply equals quantity (the price function)"""
        quantity = np.asarray(quantity, dtype=float)
        if self.breakpoints is None:
            return ((quantity - self.intercept) / self.slope)[()]
        table = np.array(self.breakpoints, dtype=float)
        return _extrapolated_interp(quantity, table[:, 1], table[:, 0])[()]


def price_at(pf: PriceFunction, x: ArrayLike) -> ArrayLike:
    """Evaluate the price function at quantity x

    Parameters:
    -----------
    pf: PriceFunction
    x: float or array_like
        Net quantity bought by the stores

    Returns:
    --------
    price: float or np.ndarray
    """
    x = np.asarray(x, dtype=float)
    lo, hi = pf.valid_range
    if np.any(x < lo - RANGE_TOL) or np.any(x > hi + RANGE_TOL):
        bad = x[(x < lo - RANGE_TOL) | (x > hi + RANGE_TOL)].ravel()[0]
        raise PriceDomainError(f"Quantity {bad} outside the valid range [{lo}, {hi}]")
    if pf.is_linear:
        return (pf.pbar + pf.pslope * x)[()]
    quantities, prices = pf._table()
    return np.interp(x, quantities, prices)[()]


def validate_price_function(
    pf: PriceFunction,
    k_range: Tuple[float, float] = (0.0, 0.0),
    grid_n: int = 101,
    x_range: Optional[Tuple[float, float]] = None,
) -> List[AssumptionViolation]:
    """Check positivity, monotonicity and convexity of x * p(x + k) on a grid

    Parameters:
    -----------
    pf: PriceFunction
    k_range: tuple of float
        Range of companion quantities k to sample (5 samples, or 1 if degenerate)
    grid_n: int
        Number of grid points over the quantity range (at least 3)
    x_range: tuple of float, optional
        Quantity range to check, defaults to pf.valid_range

    Returns:
    --------
    violations: list of AssumptionViolation
        One entry per failed assumption, empty if all assumptions hold
    """
    if grid_n < 3:
        raise ValueError("grid_n must be at least 3")
    lo, hi = pf.valid_range if x_range is None else x_range
    if not (np.isfinite(lo) and np.isfinite(hi)):
        raise ValueError("A finite quantity range is needed to validate a price function")
    grid = _check_grid(pf, lo, hi, grid_n)
    violations = []
    prices = price_at(pf, grid)
    nonpositive = np.flatnonzero(prices <= 0)
    if len(nonpositive) > 0:
        i = nonpositive[0]
        violations.append(AssumptionViolation("positivity", float(grid[i]), 0.0, float(prices[i])))
    decreasing = np.flatnonzero(np.diff(prices) < -MONOTONE_TOL)
    if len(decreasing) > 0:
        i = decreasing[0]
        violations.append(
            AssumptionViolation("monotonicity", float(grid[i]), 0.0, float(prices[i + 1] - prices[i]))
        )
    convexity = _convexity_violation(pf, lo, hi, k_range, grid_n)
    if convexity is not None:
        violations.append(convexity)
    return violations


def slope_from_elasticity(pbar: float, e_s: float, s: float, e_d: float, d: float) -> float:
    """Price slope implied by supply and demand elasticities at the no-storage price

    Returns pbar / (e_s * s - e_d * d); demand elasticities are negative.
    """
    denominator = e_s * s - e_d * d
    if denominator <= 0:
        raise DegenerateMarketError(
            f"e_s*s - e_d*d = {denominator} must be positive (e_s={e_s}, s={s}, e_d={e_d}, d={d})"
        )
    return pbar / denominator


def _check_grid(pf: PriceFunction, lo: float, hi: float, grid_n: int) -> np.ndarray:
    grid = np.linspace(lo, hi, grid_n)
    if pf.is_linear:
        return grid
    quantities, _ = pf._table()
    inside = quantities[(quantities >= lo) & (quantities <= hi)]
    midpoints = (inside[1:] + inside[:-1]) / 2
    return np.unique(np.concatenate([grid, inside, midpoints]))


def _convexity_violation(
    pf: PriceFunction,
    lo: float,
    hi: float,
    k_range: Tuple[float, float],
    grid_n: int,
) -> Optional[AssumptionViolation]:
    """Return the first sampled (x, k) where x * p(x + k) has a negative second difference"""
    k_samples = np.unique(np.linspace(k_range[0], k_range[1], 5))
    for k in k_samples:
        x_lo, x_hi = max(lo, lo - k), min(hi, hi - k)
        if x_hi <= x_lo:
            continue
        x = np.linspace(x_lo, x_hi, grid_n)
        f = x * price_at(pf, x + k)
        second_differences = f[:-2] - 2 * f[1:-1] + f[2:]
        scale = max(1.0, float(np.max(np.abs(f))))
        bad = np.flatnonzero(second_differences < -CONVEXITY_TOL * scale)
        if len(bad) > 0:
            i = bad[0]
            return AssumptionViolation("convexity", float(x[i + 1]), float(k), float(second_differences[i]))
    return None


def _extrapolated_interp(x: np.ndarray, xp: np.ndarray, fp: np.ndarray) -> np.ndarray:
    """Linear interpolation that continues the end segments beyond the table"""
    y = np.interp(x, xp, fp)
    left_slope = (fp[1] - fp[0]) / (xp[1] - xp[0])
    right_slope = (fp[-1] - fp[-2]) / (xp[-1] - xp[-2])
    y = np.where(x < xp[0], fp[0] + left_slope * (x - xp[0]), y)
    y = np.where(x > xp[-1], fp[-1] + right_slope * (x - xp[-1]), y)
    return y
