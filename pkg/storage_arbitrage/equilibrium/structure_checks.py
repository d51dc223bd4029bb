"""Structural properties of competitive equilibria: scaling with store count and level ordering"""

import dataclasses
import itertools
import logging
from typing import Dict, Optional, Sequence, Tuple
import numpy as np

from storage_arbitrage.equilibrium.equilibria import EquilibriumResult, nash_linear
from storage_arbitrage.dispatch.dispatchers import optimize_single
from storage_arbitrage.market.price_functions import PriceFunction
from storage_arbitrage.store.store import StoreSpec, eff_map

logger = logging.getLogger(__name__)

ORDERING_TOL = 1e-8


@dataclasses.dataclass(frozen=True)
class ScalingReport:
    """max_t |h(x_t^(n)) - 2 h(x_t^(1)) / (n+1)| over all stores, for each n"""

    discrepancies: Dict[int, float]

    @property
    def max_discrepancy(self) -> float:
        return max(self.discrepancies.values(), default=0.0)


@dataclasses.dataclass(frozen=True)
class OrderingReport:
    """Whether store levels are ordered by capacity at every time

    violation is (t, i, j): at level index t store i has the smaller capacity
    but the higher level.
    """

    applicable: bool
    ordered: bool
    violation: Optional[Tuple[int, int, int]] = None


def scaling_check(
    spec: StoreSpec,
    prices: Sequence[PriceFunction],
    n_list: Sequence[int],
) -> ScalingReport:
    """Compare n stores scaled by 2/(n+1) with a single store

    Parameters:
    -----------
    spec: StoreSpec
        The single store; its efficiency is shared by all stores
    prices: list of PriceFunction
        Linear price functions
    n_list: list of int
        Store counts to check

    Returns:
    --------
    report: ScalingReport
    """
    single = eff_map(spec.efficiency, optimize_single(spec, prices).flows)
    discrepancies = {}
    for n in n_list:
        specs = [spec.scaled(2 / (n + 1))] * n
        result = nash_linear(specs, prices)
        expected = 2 * single / (n + 1)
        discrepancies[n] = max(
            float(np.max(np.abs(eff_map(s.efficiency, x) - expected), initial=0.0))
            for s, x in zip(specs, result.flows)
        )
        logger.info("Scaling discrepancy for n=%d: %.3g", n, discrepancies[n])
    return ScalingReport(discrepancies)


def ordering_check(
    result: EquilibriumResult,
    specs: Sequence[StoreSpec],
    tol: float = ORDERING_TOL,
) -> OrderingReport:
    """Check that store levels are ordered by capacity at every time

    Applies to stores with identical rates and efficiencies whose starting
    and finishing levels are ordered like their capacities; otherwise the
    report is marked not applicable.
    """
    if not _ordering_hypotheses(specs):
        return OrderingReport(applicable=False, ordered=False)
    for i, j in itertools.permutations(range(len(specs)), 2):
        if specs[i].capacity > specs[j].capacity:
            continue
        above = np.flatnonzero(result.schedules[i].levels > result.schedules[j].levels + tol)
        if len(above) > 0:
            return OrderingReport(applicable=True, ordered=False, violation=(int(above[0]), i, j))
    return OrderingReport(applicable=True, ordered=True)


def _ordering_hypotheses(specs: Sequence[StoreSpec]) -> bool:
    first = specs[0]
    for spec in specs[1:]:
        if (spec.rate_in, spec.rate_out, spec.efficiency) != (first.rate_in, first.rate_out, first.efficiency):
            return False
    for a, b in itertools.permutations(specs, 2):
        if a.capacity <= b.capacity and (a.level_start > b.level_start or a.level_end > b.level_end):
            return False
    return True
