"""Scheduling with a short look-ahead: solve a window, commit its start, roll on"""

import dataclasses
import logging
from typing import List, Optional, Sequence
import numpy as np

from storage_arbitrage.dispatch.dispatchers import optimize_single
from storage_arbitrage.market.price_functions import PriceFunction
from storage_arbitrage.store.store import Schedule, StoreSpec, store_cost

logger = logging.getLogger(__name__)


@dataclasses.dataclass(frozen=True, eq=False)
class RollingHorizonResult:
    schedule: Schedule
    objective: float
    seams: List[int]  # level indices at which one committed block hands over to the next

    @property
    def profit(self) -> float:
        return -self.objective


def rolling_horizon(
    spec: StoreSpec,
    prices: Sequence[PriceFunction],
    window: int,
    step: int,
    others: Optional[np.ndarray] = None,
) -> RollingHorizonResult:
    """Stitch together solutions of overlapping windows of the horizon

    Each window of `window` periods starts from the level committed so far and
    ends at the store's terminal level, or as close to it as the rates allow
    when the window is too short to get there; only its first `step` periods
    are kept.

    Parameters:
    -----------
    spec: StoreSpec
    prices: list of PriceFunction
    window: int
        Look-ahead in periods
    step: int
        Periods committed per window, 1 <= step <= window
    others: (T,) array_like, optional
        Aggregate market-side flows of companion stores

    Returns:
    --------
    result: RollingHorizonResult
    """
    if not 1 <= step <= window:
        raise ValueError(f"Need 1 <= step <= window, got step={step}, window={window}")
    T = len(prices)
    others = np.zeros(T) if others is None else np.asarray(others, dtype=float)
    levels = [spec.level_start]
    seams = []
    start = 0
    while start < T:
        end = min(start + window, T)
        level = float(np.clip(levels[-1], 0.0, spec.capacity))
        target = _window_target(spec, level, end - start, end == T)
        window_spec = dataclasses.replace(spec, level_start=level, level_end=target)
        sol = optimize_single(window_spec, prices[start:end], others[start:end])
        keep = end - start if end == T else step
        levels.extend(sol.schedule.levels[1 : keep + 1])
        start += keep
        if start < T:
            seams.append(start)
    schedule = Schedule(np.array(levels))
    objective = store_cost(schedule.flows, others, prices, spec.efficiency)
    logger.info("Rolling horizon over %d periods with %d seams", T, len(seams))
    return RollingHorizonResult(schedule=schedule, objective=objective, seams=seams)


def _window_target(spec: StoreSpec, level: float, periods: int, last: bool) -> float:
    """Terminal level of a window, moved towards level_end by at most what the rates allow"""
    if last:
        return spec.level_end
    return float(np.clip(spec.level_end, level - spec.rate_out * periods, level + spec.rate_in * periods))
