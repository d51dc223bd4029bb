"""Store behaviour across the proportional price family p_t(x) = pbar_t (1 + lambda x)

Large lambda means a large store relative to the market. Above some
lambda_max neither the capacity nor the rate constraints bind, and from then
on traded volumes scale exactly as 1/lambda.
"""

import dataclasses
import logging
from typing import List, Sequence
import numpy as np
from joblib import Parallel, delayed
from sklearn.model_selection import ParameterGrid

from storage_arbitrage.dispatch.dispatchers import binding_constraints, optimize_single
from storage_arbitrage.exceptions import LambdaNotFoundError
from storage_arbitrage.market.price_functions import PriceFunction, price_at
from storage_arbitrage.store.store import StoreSpec, eff_map, traded_volume

logger = logging.getLogger(__name__)

LAMBDA_REL_TOL = 1e-4
BINDING_TOL = 1e-6
NO_TRADE_TOL = 1e-9


@dataclasses.dataclass(frozen=True, eq=False)
class MarketImpactPoint:
    """Optimal operation of one store at one market impact factor"""

    lam: float
    levels: np.ndarray
    flows: np.ndarray
    clearing_prices: np.ndarray
    profit: float
    traded_volume: float
    binding: List[str]


def proportional_prices(base_series: Sequence[float], lam: float) -> List[PriceFunction]:
    """Linear price functions pbar_t + lam * pbar_t * x, without range validation"""
    return [PriceFunction.linear(pbar, lam * pbar) for pbar in np.asarray(base_series, dtype=float)]


def find_lambda_max(
    spec: StoreSpec,
    base_series: Sequence[float],
    lam_lo: float = 1e-4,
    lam_hi: float = 1e4,
    rel_tol: float = LAMBDA_REL_TOL,
    bind_tol: float = BINDING_TOL,
) -> float:
    """Smallest market impact factor at which no capacity or rate constraint binds

    Bisection is geometric on [lam_lo, lam_hi]. A constraint binds when the
    level is within bind_tol of the capacity or a flow within bind_tol of a
    rate bound.

    Parameters:
    -----------
    spec: StoreSpec
    base_series: (T,) array_like
        Prices pbar_t without storage
    lam_lo, lam_hi: float
        Bisection bracket, 0 < lam_lo < lam_hi
    rel_tol: float
        Relative width of the final bracket
    bind_tol: float
        Distance to a bound that counts as binding

    Returns:
    --------
    lambda_max: float
        Upper end of the final bracket; 0 when the store does not trade at all
    """
    if not 0 < lam_lo < lam_hi:
        raise ValueError(f"Need 0 < lam_lo < lam_hi, got ({lam_lo}, {lam_hi})")

    def binds(lam: float) -> bool:
        sol = optimize_single(spec, proportional_prices(base_series, lam))
        return len(binding_constraints(spec, sol, bind_tol)) > 0

    top = optimize_single(spec, proportional_prices(base_series, lam_hi))
    if np.max(np.abs(top.flows), initial=0.0) <= NO_TRADE_TOL:
        logger.info("No trade at lambda=%g, lambda_max taken as 0", lam_hi)
        return 0.0
    if binding_constraints(spec, top, bind_tol):
        raise LambdaNotFoundError(f"Constraints still bind at lambda={lam_hi}")
    if not binds(lam_lo):
        return lam_lo
    lo, hi = lam_lo, lam_hi
    while hi / lo > 1 + rel_tol:
        middle = np.sqrt(lo * hi)
        if binds(middle):
            lo = middle
        else:
            hi = middle
    logger.info("lambda_max in [%g, %g]", lo, hi)
    return float(hi)


def sweep_market_impact(
    spec: StoreSpec,
    base_series: Sequence[float],
    lambdas: Sequence[float],
    bind_tol: float = BINDING_TOL,
    n_jobs: int = -1,
) -> List[MarketImpactPoint]:
    """Solve the store problem for each market impact factor in lambdas, in parallel"""
    grid = list(ParameterGrid({"lam": list(lambdas)}))
    points = Parallel(n_jobs=n_jobs)(
        delayed(_solve_at)(spec, base_series, params["lam"], bind_tol) for params in grid
    )
    return sorted(points, key=lambda point: point.lam)


def volume_scaling_residual(spec: StoreSpec, base_series: Sequence[float], lam: float) -> float:
    """max_t |x_t(2 lam) - x_t(lam) / 2|, which vanishes for lam >= lambda_max"""
    flows = optimize_single(spec, proportional_prices(base_series, lam)).flows
    flows_double = optimize_single(spec, proportional_prices(base_series, 2 * lam)).flows
    return float(np.max(np.abs(flows_double - flows / 2), initial=0.0))


def _solve_at(spec: StoreSpec, base_series: Sequence[float], lam: float, bind_tol: float) -> MarketImpactPoint:
    prices = proportional_prices(base_series, lam)
    sol = optimize_single(spec, prices)
    h = eff_map(spec.efficiency, sol.flows)
    return MarketImpactPoint(
        lam=float(lam),
        levels=np.array(sol.schedule.levels),
        flows=sol.flows,
        clearing_prices=np.array([price_at(pf, q) for pf, q in zip(prices, h)]),
        profit=sol.profit,
        traded_volume=traded_volume(spec.efficiency, sol.flows),
        binding=binding_constraints(spec, sol, bind_tol),
    )
