"""Tools for running several equilibrium computations side by side

The intended use of 'run' is to compare best-response iterations from
several starting points, then view them using tensorboard on the log
directory. 'competition_study' solves the market for a growing number of
competing stores sharing a fixed total capacity.
"""

import dataclasses
from typing import Dict, List, Optional, Sequence
from joblib import Parallel, delayed

from storage_arbitrage.dispatch.dispatchers import optimize_single
from storage_arbitrage.equilibrium import equilibria
from storage_arbitrage.market.price_functions import PriceFunction
from storage_arbitrage.store.store import Schedule, StoreSpec, traded_volume


@dataclasses.dataclass(frozen=True)
class CompetitionStudy:
    """Totals over n competing stores, per store count n

    law_profits and law_volumes scale the single-store values by 4n/(n+1)^2
    and 2n/(n+1), the factors for stores that never meet a constraint.
    """

    n_list: List[int]
    total_profits: Dict[int, float]
    total_volumes: Dict[int, float]
    cooperative_profits: Dict[int, float]
    law_profits: Dict[int, float]
    law_volumes: Dict[int, float]
    converged: Dict[int, bool]
    results: Dict[int, equilibria.EquilibriumResult]


def run(
    specs: Sequence[StoreSpec],
    prices: Sequence[PriceFunction],
    inits: Sequence[Sequence[Schedule]],
    max_sweeps: int = equilibria.MAX_SWEEPS,
) -> List[equilibria.EquilibriumResult]:
    """Best-response iterations from each initial point, logged using tensorboard

    Parameters:
    -----------
    specs: list of StoreSpec
    prices: list of PriceFunction
    inits: list of lists of Schedule
        One feasible schedule per store for each starting point
    max_sweeps: int
        Sweep cap of every run

    Returns:
    --------
    results: list of EquilibriumResult, one per starting point
    """
    return Parallel(n_jobs=-1)(
        delayed(equilibria.nash_best_response)(
            specs,
            prices,
            init=list(init),
            max_sweeps=max_sweeps,
            logging=True,
            log_name=f"init_{k}",
        )
        for k, init in enumerate(inits)
    )


def competition_study(
    spec: StoreSpec,
    prices: Sequence[PriceFunction],
    n_list: Sequence[int],
    split: bool = True,
    n_jobs: int = -1,
) -> CompetitionStudy:
    """Nash and cooperative profits of n identical stores for each n in n_list

    Parameters:
    -----------
    spec: StoreSpec
        The single store; with split=True its capacity, rates and boundary
        levels are divided equally among the n stores
    prices: list of PriceFunction
    n_list: list of int
    split: boolean
        If False every store is a full copy of spec
    n_jobs: int
        joblib workers, one store count per worker

    Returns:
    --------
    study: CompetitionStudy
    """
    rows = Parallel(n_jobs=n_jobs)(
        delayed(_study_row)(spec, prices, n, split) for n in n_list
    )
    single = optimize_single(spec, prices)
    single_volume = traded_volume(spec.efficiency, single.flows)
    n_list = list(n_list)
    return CompetitionStudy(
        n_list=n_list,
        total_profits={n: row[0].total_profit for n, row in zip(n_list, rows)},
        total_volumes={n: row[1] for n, row in zip(n_list, rows)},
        cooperative_profits={n: row[2] for n, row in zip(n_list, rows)},
        law_profits={n: 4 * n / (n + 1) ** 2 * single.profit for n in n_list},
        law_volumes={n: 2 * n / (n + 1) * single_volume for n in n_list},
        converged={n: row[0].converged for n, row in zip(n_list, rows)},
        results={n: row[0] for n, row in zip(n_list, rows)},
    )


def _study_row(spec: StoreSpec, prices: Sequence[PriceFunction], n: int, split: bool):
    member = spec.scaled(1 / n) if split else spec
    specs = [member] * n
    if all(pf.is_linear for pf in prices):
        result = equilibria.nash_linear(specs, prices)
    else:
        result = equilibria.nash_best_response(specs, prices)
    volume = sum(traded_volume(s.efficiency, x) for s, x in zip(specs, result.flows))
    coop: Optional[equilibria.EquilibriumResult] = equilibria.aggregate_shortcut(specs, prices)
    if coop is None:
        coop = equilibria.cooperative(specs, prices)
    return result, float(volume), coop.total_profit
