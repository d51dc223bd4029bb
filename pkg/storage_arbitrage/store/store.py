"""Physical store model: specifications, schedules, feasibility and cost

Levels are indexed S_0..S_T and flows x_1..x_T, with x_t = S_t - S_{t-1}
(positive when buying). Sales reach the market reduced by the round-trip
efficiency, so the market sees h(x) = x for x >= 0 and epsilon * x for x < 0.
"""

import dataclasses
from typing import List, Optional, Sequence, Tuple, Union
import numpy as np

from storage_arbitrage.market.price_functions import PriceFunction, price_at

FEASIBILITY_TOL = 1e-9  # energy units

FlowVector = np.ndarray  # signed energy flows x_1..x_T
ArrayOrFloat = Union[float, np.ndarray]


@dataclasses.dataclass(frozen=True)
class StoreSpec:
    """Physical parameters of one store

    Attributes:
        capacity (float): energy capacity E
        rate_in (float): maximum energy bought per period P_I
        rate_out (float): maximum energy withdrawn per period P_O
        efficiency (float): round-trip efficiency in (0, 1]
        level_start (float): required level at the start of the horizon
        level_end (float): required level at the end of the horizon
    """

    capacity: float
    rate_in: float
    rate_out: float
    efficiency: float = 1.0
    level_start: float = 0.0
    level_end: float = 0.0

    def __post_init__(self):
        if self.capacity <= 0:
            raise ValueError(f"capacity must be positive, got {self.capacity}")
        if self.rate_in <= 0 or self.rate_out <= 0:
            raise ValueError(f"rates must be positive, got rate_in={self.rate_in}, rate_out={self.rate_out}")
        if not 0 < self.efficiency <= 1:
            raise ValueError(f"efficiency must lie in (0, 1], got {self.efficiency}")
        for name in ("level_start", "level_end"):
            level = getattr(self, name)
            if not 0 <= level <= self.capacity:
                raise ValueError(f"{name}={level} must lie in [0, {self.capacity}]")

    def scaled(self, factor: float) -> "StoreSpec":
        """Return the store with capacity, rates and boundary levels multiplied by factor"""
        return dataclasses.replace(
            self,
            capacity=self.capacity * factor,
            rate_in=self.rate_in * factor,
            rate_out=self.rate_out * factor,
            level_start=self.level_start * factor,
            level_end=self.level_end * factor,
        )


@dataclasses.dataclass(frozen=True, eq=False)
class Schedule:
    """Store levels S_0..S_T over a horizon of T periods"""

    levels: np.ndarray

    def __post_init__(self):
        levels = np.array(self.levels, dtype=float)
        if levels.ndim != 1 or len(levels) < 2:
            raise ValueError("A schedule needs a 1d vector of at least 2 levels")
        if not np.all(np.isfinite(levels)):
            raise ValueError("Schedule levels must be finite")
        levels.setflags(write=False)
        object.__setattr__(self, "levels", levels)

    @classmethod
    def from_flows(cls, level_start: float, x: Sequence[float]) -> "Schedule":
        return cls(np.concatenate([[level_start], level_start + np.cumsum(x)]))

    @classmethod
    def idle(cls, level: float, horizon: int) -> "Schedule":
        return cls(np.full(horizon + 1, float(level)))

    @property
    def horizon(self) -> int:
        return len(self.levels) - 1

    @property
    def flows(self) -> FlowVector:
        return flows(self)


@dataclasses.dataclass(frozen=True)
class Violation:
    """A violated store constraint

    kind is one of "level_start", "level_end", "level_low", "level_high",
    "rate_in", "rate_out"; period is the level index for level kinds and the
    flow index (1..T) for rate kinds.
    """

    kind: str
    period: int
    value: float
    bound: float


def eff_map(efficiency: float, x: ArrayOrFloat) -> ArrayOrFloat:
    """Market-side quantity of a store flow: x when buying, efficiency * x when selling"""
    x = np.asarray(x, dtype=float)
    return np.where(x >= 0, x, efficiency * x)[()]


def flows(s: Schedule) -> FlowVector:
    """Flows x_t = S_t - S_{t-1}, t = 1..T"""
    return np.diff(s.levels)


def feasible(
    spec: StoreSpec,
    s: Schedule,
    tol: float = FEASIBILITY_TOL,
    capacity: Optional[ArrayOrFloat] = None,
    rate_in: Optional[ArrayOrFloat] = None,
    rate_out: Optional[ArrayOrFloat] = None,
) -> Tuple[bool, List[Violation]]:
    """Check a schedule against the store's boundary, capacity and rate constraints

    Parameters:
    -----------
    spec: StoreSpec
    s: Schedule
    tol: float
        Allowed constraint violation (energy units)
    capacity: float or (T+1,) array_like, optional
        Capacity per level index, overriding spec.capacity
    rate_in, rate_out: float or (T,) array_like, optional
        Rate bounds per period, overriding the spec's rates

    Returns:
    --------
    is_feasible: bool
    violations: list of Violation
    """
    levels = s.levels
    x = flows(s)
    T = s.horizon
    capacity = _per_index(spec.capacity if capacity is None else capacity, T + 1)
    rate_in = _per_index(spec.rate_in if rate_in is None else rate_in, T)
    rate_out = _per_index(spec.rate_out if rate_out is None else rate_out, T)
    violations = []
    if abs(levels[0] - spec.level_start) > tol:
        violations.append(Violation("level_start", 0, float(levels[0]), spec.level_start))
    if abs(levels[-1] - spec.level_end) > tol:
        violations.append(Violation("level_end", T, float(levels[-1]), spec.level_end))
    for t in range(1, T):
        if levels[t] < -tol:
            violations.append(Violation("level_low", t, float(levels[t]), 0.0))
        if levels[t] > capacity[t] + tol:
            violations.append(Violation("level_high", t, float(levels[t]), float(capacity[t])))
    for t in range(T):
        if x[t] > rate_in[t] + tol:
            violations.append(Violation("rate_in", t + 1, float(x[t]), float(rate_in[t])))
        if x[t] < -rate_out[t] - tol:
            violations.append(Violation("rate_out", t + 1, float(x[t]), float(-rate_out[t])))
    return len(violations) == 0, violations


def store_cost(
    j_flows: FlowVector,
    others_flows: Optional[FlowVector],
    prices: Sequence[PriceFunction],
    efficiency: float,
) -> float:
    """Cost to store j of its flows given the companions' aggregate market-side quantity

    Parameters:
    -----------
    j_flows: (T,) array_like
        Flows of store j
    others_flows: (T,) array_like or None
        sum_{i != j} h_i(x_it) per period (None for no companions)
    prices: list of PriceFunction
        One price function per period
    efficiency: float
        Round-trip efficiency of store j

    Returns:
    --------
    cost: float
        sum_t h(x_t) p_t(h(x_t) + others_t); the profit is -cost
    """
    j_flows = np.asarray(j_flows, dtype=float)
    if len(j_flows) != len(prices):
        raise ValueError(f"Got {len(j_flows)} flows for {len(prices)} price functions")
    others_flows = np.zeros_like(j_flows) if others_flows is None else np.asarray(others_flows, dtype=float)
    h = eff_map(efficiency, j_flows)
    return float(sum(h_t * price_at(pf, h_t + k_t) for h_t, k_t, pf in zip(h, others_flows, prices)))


def traded_volume(efficiency: float, x: FlowVector) -> float:
    """Total market-side volume sum_t |h(x_t)|"""
    return float(np.sum(np.abs(eff_map(efficiency, x))))


def _per_index(value: ArrayOrFloat, length: int) -> np.ndarray:
    array = np.asarray(value, dtype=float)
    if array.ndim == 0:
        return np.full(length, float(array))
    if len(array) != length:
        raise ValueError(f"Expected {length} per-period values, got {len(array)}")
    return array
