"""Effect of relaxing or tightening one store constraint at a single time

The base problem is solved, then solved again with the capacity (or one rate
bound) changed at t0 only. Flows change on at most two adjacent intervals
(t1, t0] and (t0, t2], and only when the perturbed constraint binds in the
base solution.
"""

import dataclasses
import logging
from typing import Optional, Sequence, Tuple
import numpy as np

from storage_arbitrage.dispatch.dispatchers import CertifiedSolution, optimize_single
from storage_arbitrage.market.price_functions import PriceFunction
from storage_arbitrage.store.store import StoreSpec

logger = logging.getLogger(__name__)

CHANGE_TOL = 1e-7


@dataclasses.dataclass(frozen=True, eq=False)
class SensitivityReport:
    """Flow changes caused by a perturbation delta of one constraint at t0

    Intervals are (first, last] pairs of period indices, None when nothing
    changed on that side of t0. flow_deltas[t - 1] is the change of x_t.
    """

    t0: int
    delta: float
    changed_interval_before: Optional[Tuple[int, int]]
    changed_interval_after: Optional[Tuple[int, int]]
    flow_deltas: np.ndarray
    objective_delta: float
    base: CertifiedSolution
    perturbed: CertifiedSolution

    @property
    def changed(self) -> bool:
        return self.changed_interval_before is not None or self.changed_interval_after is not None


def sensitivity_capacity(
    spec: StoreSpec,
    prices: Sequence[PriceFunction],
    others: Optional[np.ndarray],
    t0: int,
    delta: float,
    tol: float = CHANGE_TOL,
) -> SensitivityReport:
    """Re-solve with the capacity at level index t0 changed to E + delta

    Parameters:
    -----------
    spec: StoreSpec
    prices: list of PriceFunction
    others: (T,) array_like or None
        Aggregate market-side flows of companion stores
    t0: int
        Level index, 0 < t0 < T
    delta: float
        Capacity change (energy)
    tol: float
        Flow changes at most tol count as unchanged

    Returns:
    --------
    report: SensitivityReport
    """
    T = len(prices)
    if not 0 < t0 < T:
        raise ValueError(f"t0={t0} must satisfy 0 < t0 < {T}")
    capacity = np.full(T + 1, float(spec.capacity))
    capacity[t0] += delta
    if capacity[t0] < 0:
        raise ValueError(f"Capacity {capacity[t0]} at t0={t0} would be negative")
    base = optimize_single(spec, prices, others)
    perturbed = optimize_single(spec, prices, others, capacity=capacity)
    return _compare(base, perturbed, t0, delta, tol)


def sensitivity_rate(
    spec: StoreSpec,
    prices: Sequence[PriceFunction],
    others: Optional[np.ndarray],
    t0: int,
    which: str,
    delta: float,
    tol: float = CHANGE_TOL,
) -> SensitivityReport:
    """Re-solve with the input ("in") or output ("out") rate bound of period t0 changed by delta

    t0 is a period index, 1 <= t0 <= T.
    """
    T = len(prices)
    if not 1 <= t0 <= T:
        raise ValueError(f"t0={t0} must satisfy 1 <= t0 <= {T}")
    if which not in ("in", "out"):
        raise ValueError(f'Invalid "which" {which}, expected "in" or "out"')
    rate_in = np.full(T, float(spec.rate_in))
    rate_out = np.full(T, float(spec.rate_out))
    bound = rate_in if which == "in" else rate_out
    bound[t0 - 1] += delta
    if bound[t0 - 1] < 0:
        raise ValueError(f"Rate bound {bound[t0 - 1]} at t0={t0} would be negative")
    base = optimize_single(spec, prices, others)
    perturbed = optimize_single(spec, prices, others, rate_in=rate_in, rate_out=rate_out)
    return _compare(base, perturbed, t0, delta, tol)


def _compare(
    base: CertifiedSolution,
    perturbed: CertifiedSolution,
    t0: int,
    delta: float,
    tol: float,
) -> SensitivityReport:
    flow_deltas = perturbed.flows - base.flows
    changed = np.flatnonzero(np.abs(flow_deltas) > tol) + 1  # period indices
    before = changed[changed <= t0]
    after = changed[changed > t0]
    interval_before = (int(before.min()) - 1, t0) if len(before) > 0 else None
    interval_after = (t0, int(after.max())) if len(after) > 0 else None
    logger.info(
        "Perturbation %.3g at t0=%d changes periods %s", delta, t0, changed.tolist()
    )
    return SensitivityReport(
        t0=t0,
        delta=delta,
        changed_interval_before=interval_before,
        changed_interval_after=interval_after,
        flow_deltas=np.where(np.abs(flow_deltas) > tol, flow_deltas, 0.0),
        objective_delta=perturbed.objective - base.objective,
        base=base,
        perturbed=perturbed,
    )
