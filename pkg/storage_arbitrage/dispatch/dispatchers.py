"""Optimal scheduling of a single price-making store, with optimality certificates

The store chooses levels S_0..S_T to minimise sum_t C_t(x_t), x_t = S_t - S_{t-1},
subject to fixed boundary levels, 0 <= S_t <= E and -P_O <= x_t <= P_I.
A schedule is optimal when there are multipliers mu_1..mu_T such that
    (i)   the schedule is feasible,
    (ii)  each x_t minimises C_t(x) - mu_t x over [-P_O, P_I],
    (iii) mu_{t+1} = mu_t while 0 < S_t < E, mu_{t+1} <= mu_t where S_t = 0
          and mu_{t+1} >= mu_t where S_t = E.
The default solver builds such a pair directly: levels follow a taut string
through the tube of allowed levels, with mu constant between the times at
which the string touches a bound. Every solve reports the largest violation
of (i)-(iii) as its kkt_residual.
"""

import dataclasses
import logging
from typing import List, Optional, Sequence, Tuple, Union
import numpy as np
import tensorflow as tf
from sklearn.base import BaseEstimator

from storage_arbitrage.dispatch.costs import MarketCosts, PeriodCosts, QuadraticCosts
from storage_arbitrage.exceptions import InfeasibleScheduleError, UnboundedTradeError
from storage_arbitrage.market.price_functions import PriceFunction
from storage_arbitrage.store.store import (
    FEASIBILITY_TOL,
    Schedule,
    StoreSpec,
    eff_map,
    feasible,
    traded_volume,
)

logger = logging.getLogger(__name__)

LOGDIR = "logdir/"  # Log directory to save tensorboard files in
CERTIFICATE_TOL = 1e-8
CERTIFICATE_GRID = 10001  # grid points per period when verifying condition (ii)
LEVEL_TOL = 1e-12  # relative slack when comparing trial levels with bounds
MU_BISECTIONS = 200
SET_VALUED_TOL = 1e-12

ArrayOrFloat = Union[float, np.ndarray]


@dataclasses.dataclass(frozen=True, eq=False)
class Multipliers:
    """Marginal value mu_t of stored energy in each period t = 1..T"""

    mu: np.ndarray


@dataclasses.dataclass(frozen=True, eq=False)
class CertifiedSolution:
    """An optimal schedule together with the multipliers certifying it

    nonunique is set when some period's minimiser set is an interval, in which
    case the minimum-norm choice of flows was returned.
    """

    schedule: Schedule
    multipliers: Multipliers
    objective: float
    kkt_residual: float
    nonunique: bool = False

    @property
    def flows(self) -> np.ndarray:
        return self.schedule.flows

    @property
    def profit(self) -> float:
        return -self.objective


@dataclasses.dataclass(frozen=True, eq=False)
class CertificateReport:
    """Per-condition residuals of a schedule/multiplier pair

    Attributes:
        feasibility (float): largest constraint violation (energy)
        subproblem_gaps {array of shape (T,)}: optimality gap of each x_t in
            its period subproblem
        slackness {array of shape (T-1,)}: violation of the multiplier jump
            pattern at each intermediate level
        max_residual (float): largest of all the above
        tol (float): tolerance the report was judged against
    """

    feasibility: float
    subproblem_gaps: np.ndarray
    slackness: np.ndarray
    max_residual: float
    tol: float = CERTIFICATE_TOL

    @property
    def passed(self) -> bool:
        return self.max_residual <= self.tol


class StoreDispatcher(BaseEstimator):
    """Profit-maximising schedule of one store facing per-period costs.

    Attributes:
        capacity (float or array of shape (T+1,)): energy capacity per level index
        rate_in (float or array of shape (T,)): purchase rate bound per period
        rate_out (float or array of shape (T,)): sale rate bound per period
        efficiency (float): round-trip efficiency in (0, 1]
        level_start (float): level S_0
        level_end (float): level S_T
        solver (str): "taut_string" (exact) or "projected_gradient"
        iterations (int): iteration cap of the projected gradient solver
        logging (boolean): log projected gradient iterations in tensorboard if True
        schedule_ {Schedule}: optimal levels
        multipliers_ {Multipliers}: certifying multipliers
        objective_ {float}: minimised total cost
        kkt_residual_ {float}: largest violation of the optimality conditions
        nonunique_ {bool}: True if some period admits several optimal flows
    """

    def __init__(
        self,
        capacity: ArrayOrFloat = 1.0,
        rate_in: ArrayOrFloat = 1.0,
        rate_out: ArrayOrFloat = 1.0,
        efficiency: float = 1.0,
        level_start: float = 0.0,
        level_end: float = 0.0,
        solver: str = "taut_string",
        iterations: int = 5e3,
        logging: bool = False,
    ):
        self.capacity = capacity
        self.rate_in = rate_in
        self.rate_out = rate_out
        self.efficiency = efficiency
        self.level_start = level_start
        self.level_end = level_end
        self.solver = solver
        self.iterations = int(iterations)
        self.logging = logging

    @classmethod
    def from_spec(cls, spec: StoreSpec, **kwargs) -> "StoreDispatcher":
        params = dict(
            capacity=spec.capacity,
            rate_in=spec.rate_in,
            rate_out=spec.rate_out,
            efficiency=spec.efficiency,
            level_start=spec.level_start,
            level_end=spec.level_end,
        )
        params.update({key: value for key, value in kwargs.items() if value is not None})
        return cls(**params)

    def fit(
        self,
        X: Union[Sequence[PriceFunction], PeriodCosts],
        others: Optional[np.ndarray] = None,
    ) -> "StoreDispatcher":
        """Find the optimal schedule

        Parameters:
            X: list of PriceFunction (one per period), or a PeriodCosts instance
               whose rate bounds are used as given
            others: aggregate market-side flows of companion stores per period
        """
        costs = X if isinstance(X, PeriodCosts) else self._market_costs(X, others)
        level_lo, level_hi = self._level_bounds(costs.horizon)
        if self.solver == "taut_string":
            levels, mu = _solve_taut_string(costs, level_lo, level_hi)
        elif self.solver == "projected_gradient":
            levels = self._projected_gradient(costs, level_lo, level_hi)
            mu = recover_multipliers(costs, levels, level_lo, level_hi)
        else:
            raise ValueError(f'Invalid "solver" {self.solver}')
        self.costs_ = costs
        self.schedule_ = Schedule(levels)
        self.multipliers_ = Multipliers(mu)
        self.objective_ = float(np.sum(costs.values(self.schedule_.flows)))
        report = certificate_residuals(costs, levels, mu, level_lo, level_hi)
        self.kkt_residual_ = report.max_residual
        low, high = costs.response(mu)
        self.nonunique_ = bool(np.any(high - low > SET_VALUED_TOL))
        logger.debug(
            "Solved %d periods with %s: objective %.6g, kkt residual %.3g",
            costs.horizon,
            self.solver,
            self.objective_,
            self.kkt_residual_,
        )
        return self

    def predict(self, X: None = None) -> np.ndarray:
        """Return the optimal flows.

        Parameters:
            X: unused, but included to be consistent with sklearn conventions
        """
        return self.schedule_.flows

    def score(self, X: None = None) -> float:
        """Default scoring is the profit, minus the minimised cost"""
        return -self.objective_

    def solution(self) -> CertifiedSolution:
        return CertifiedSolution(
            schedule=self.schedule_,
            multipliers=self.multipliers_,
            objective=self.objective_,
            kkt_residual=self.kkt_residual_,
            nonunique=self.nonunique_,
        )

    def _market_costs(self, prices: Sequence[PriceFunction], others: Optional[np.ndarray]) -> MarketCosts:
        T = len(prices)
        return MarketCosts(
            prices,
            self.efficiency,
            np.broadcast_to(np.asarray(self.rate_in, dtype=float), (T,)),
            np.broadcast_to(np.asarray(self.rate_out, dtype=float), (T,)),
            others,
        )

    def _level_bounds(self, horizon: int) -> Tuple[np.ndarray, np.ndarray]:
        """Allowed level interval for each index 0..T, boundary levels pinned"""
        level_lo = np.zeros(horizon + 1)
        level_hi = np.array(np.broadcast_to(np.asarray(self.capacity, dtype=float), (horizon + 1,)))
        level_lo[0] = level_hi[0] = self.level_start
        level_lo[-1] = level_hi[-1] = self.level_end
        return level_lo, level_hi

    def _projected_gradient(self, costs: PeriodCosts, level_lo: np.ndarray, level_hi: np.ndarray) -> np.ndarray:
        """Accelerated projected gradient on the flows, projecting exactly onto the feasible set"""
        step = 1 / costs.curvature_bound()
        x = _project(np.zeros(costs.horizon), costs, level_lo, level_hi)
        y = x
        momentum = 1.0
        if self.logging:
            writer = tf.summary.create_file_writer(f"{LOGDIR}projected_gradient")
        for iteration in range(self.iterations):
            gradient = costs.derivative(slice(None), y, "right")
            x_next = _project(y - step * gradient, costs, level_lo, level_hi)
            momentum_next = (1 + np.sqrt(1 + 4 * momentum**2)) / 2
            y = x_next + ((momentum - 1) / momentum_next) * (x_next - x)
            change = float(np.max(np.abs(x_next - x)))
            x, momentum = x_next, momentum_next
            if self.logging:
                with writer.as_default():
                    tf.summary.scalar("objective", float(np.sum(costs.values(x))), step=iteration)
                    tf.summary.scalar("flow_change", change, step=iteration)
            if change <= 1e-13:
                break
        return np.concatenate([[level_lo[0]], level_lo[0] + np.cumsum(x)])


def optimize_single(
    spec: StoreSpec,
    prices: Sequence[PriceFunction],
    others: Optional[np.ndarray] = None,
    costs: Optional[PeriodCosts] = None,
    capacity: Optional[ArrayOrFloat] = None,
    rate_in: Optional[ArrayOrFloat] = None,
    rate_out: Optional[ArrayOrFloat] = None,
    solver: str = "taut_string",
) -> CertifiedSolution:
    """Optimal schedule of one store with its optimality certificate

    Parameters:
    -----------
    spec: StoreSpec
    prices: list of PriceFunction
        One validated price function per period
    others: (T,) array_like, optional
        Aggregate market-side flows of the companion stores
    costs: PeriodCosts, optional
        Replaces the market costs built from prices (ownership variants,
        cooperative and potential blocks)
    capacity, rate_in, rate_out: float or array_like, optional
        Time-varying bounds overriding the spec
    solver: str
        "taut_string" or "projected_gradient"

    Returns:
    --------
    solution: CertifiedSolution
    """
    dispatcher = StoreDispatcher.from_spec(
        spec, capacity=capacity, rate_in=rate_in, rate_out=rate_out, solver=solver
    )
    dispatcher.fit(prices if costs is None else costs, others)
    return dispatcher.solution()


def verify_certificate(
    spec: StoreSpec,
    prices: Sequence[PriceFunction],
    others: Optional[np.ndarray],
    sol: CertifiedSolution,
    tol: float = CERTIFICATE_TOL,
    grid_n: int = CERTIFICATE_GRID,
    costs: Optional[PeriodCosts] = None,
    capacity: Optional[ArrayOrFloat] = None,
    rate_in: Optional[ArrayOrFloat] = None,
    rate_out: Optional[ArrayOrFloat] = None,
) -> CertificateReport:
    """Independently check a schedule and multipliers against the optimality conditions

    Condition (ii) is checked against the minimum of C_t(x) - mu_t x over a
    uniform grid of grid_n points on [-P_O, P_I].
    """
    dispatcher = StoreDispatcher.from_spec(spec, capacity=capacity, rate_in=rate_in, rate_out=rate_out)
    if costs is None:
        costs = dispatcher._market_costs(prices, others)
    level_lo, level_hi = dispatcher._level_bounds(sol.schedule.horizon)
    levels = sol.schedule.levels
    x = sol.schedule.flows
    mu = np.asarray(sol.multipliers.mu, dtype=float)
    _, violations = feasible(spec, sol.schedule, tol=0.0, capacity=level_hi, rate_in=costs.upper, rate_out=-costs.lower)
    feasibility = max([abs(v.value - v.bound) for v in violations], default=0.0)
    own = costs.values(x) - mu * x
    gaps = np.zeros(costs.horizon)
    for t in range(costs.horizon):
        grid = np.linspace(costs.lower[t], costs.upper[t], grid_n)
        grid_values = costs.period_values(t, grid) - mu[t] * grid
        gaps[t] = max(0.0, own[t] - float(np.min(grid_values)))
    slackness = _slackness_residuals(levels, mu, level_lo, level_hi)
    max_residual = max(feasibility, float(np.max(gaps, initial=0.0)), float(np.max(slackness, initial=0.0)))
    return CertificateReport(feasibility, gaps, slackness, max_residual, tol)


def certificate_residuals(
    costs: PeriodCosts,
    levels: np.ndarray,
    mu: np.ndarray,
    level_lo: np.ndarray,
    level_hi: np.ndarray,
) -> CertificateReport:
    """Optimality residuals using exact period minimisers instead of a grid"""
    x = np.diff(levels)
    feasibility = max(
        float(np.max(level_lo - levels)),
        float(np.max(levels - level_hi)),
        float(np.max(x - costs.upper)),
        float(np.max(costs.lower - x)),
        0.0,
    )
    gaps = costs.subproblem_gap(x, mu)
    slackness = _slackness_residuals(levels, mu, level_lo, level_hi)
    max_residual = max(feasibility, float(np.max(gaps, initial=0.0)), float(np.max(slackness, initial=0.0)))
    return CertificateReport(feasibility, gaps, slackness, max_residual)


def recover_multipliers(
    costs: PeriodCosts,
    levels: np.ndarray,
    level_lo: np.ndarray,
    level_hi: np.ndarray,
    tol: float = FEASIBILITY_TOL,
) -> np.ndarray:
    """Multipliers consistent with a given schedule, from per-period subgradients

    Between consecutive times at which the level touches a bound mu must be
    constant and lie in every period's subgradient interval; the value closest
    to the previous segment's multiplier is taken. Segments whose intervals do
    not intersect get the midpoint, which shows up in the certificate residual.
    """
    x = np.diff(levels)
    left, right = costs.subgradient(x)
    T = costs.horizon
    touches = [
        t for t in range(1, T) if levels[t] <= level_lo[t] + tol or levels[t] >= level_hi[t] - tol
    ]
    mu = np.zeros(T)
    previous = None
    for a, b in zip([0] + touches, touches + [T]):
        lower, upper = float(np.max(left[a:b])), float(np.min(right[a:b]))
        if lower > upper:
            value = (lower + upper) / 2
        elif previous is not None:
            value = min(max(previous, lower), upper)
        elif np.isfinite(lower) and np.isfinite(upper):
            value = (lower + upper) / 2
        else:
            value = lower if np.isfinite(lower) else (upper if np.isfinite(upper) else 0.0)
        mu[a:b] = value
        previous = value
    return mu


def two_period_unconstrained(
    pbar1: float, pbar2: float, pslope1: float, pslope2: float, efficiency: float
) -> float:
    """Quantity bought in period 1 by an unconstrained store over two periods

    Returns 0 when efficiency * pbar2 / pbar1 < 1, otherwise
    (efficiency * pbar2 - pbar1) / (2 (pslope1 + efficiency^2 pslope2)).
    """
    if efficiency * pbar2 / pbar1 < 1:
        return 0.0
    numerator = efficiency * pbar2 - pbar1
    denominator = 2 * (pslope1 + efficiency**2 * pslope2)
    if denominator == 0:
        if numerator > 0:
            raise UnboundedTradeError(
                f"Prices ({pbar1}, {pbar2}) leave a margin but have zero slopes"
            )
        return 0.0
    return numerator / denominator


def price_differential(
    pbar1: float,
    pbar2: float,
    pslope1: float,
    pslope2: float,
    efficiency: float,
    sale_sign: float = 1.0,
) -> float:
    """Price difference p_2(sale_sign * efficiency * x) - p_1(x) along the two-period optimum

    x is two_period_unconstrained(...). sale_sign = 1 evaluates p_2 at
    +efficiency * x; sale_sign = -1 evaluates the period-2 clearing price,
    where the store's sale enters the market as -efficiency * x.
    """
    x = two_period_unconstrained(pbar1, pbar2, pslope1, pslope2, efficiency)
    return (pbar2 + pslope2 * sale_sign * efficiency * x) - (pbar1 + pslope1 * x)


def binding_constraints(
    spec: StoreSpec,
    sol: CertifiedSolution,
    tol: float = 1e-6,
) -> List[str]:
    """Names of the capacity and rate constraints within tol of binding

    The lower level bound 0 is not reported: it is invariant under rescaling
    of the store and never prevents volumes from scaling with 1/lambda.
    """
    levels = sol.schedule.levels[1:-1]
    x = sol.flows
    binding = []
    if np.any(levels >= spec.capacity - tol):
        binding.append("capacity")
    if np.any(x >= spec.rate_in - tol):
        binding.append("rate_in")
    if np.any(x <= -spec.rate_out + tol):
        binding.append("rate_out")
    return binding


def _solve_taut_string(
    costs: PeriodCosts, level_lo: np.ndarray, level_hi: np.ndarray
) -> Tuple[np.ndarray, np.ndarray]:
    """Exact optimal levels and multipliers for separable convex costs

    Walks forward from each touch point, narrowing the interval [m_lo, m_hi]
    of constant multipliers that keep the level path inside the tube. When
    the interval would become empty the path must bend at the last point that
    narrowed it from the blocked side, which becomes the next touch point.
    """
    T = costs.horizon
    _check_reachable(costs, level_lo, level_hi)
    mu_floor, mu_ceil = costs.mu_bounds()
    levels = np.empty(T + 1)
    levels[0] = level_lo[0]
    mu = np.empty(T)
    start, previous, segments = 0, None, 0
    while start < T:
        end, m, end_level = _next_segment(costs, start, levels[start], level_lo, level_hi, mu_floor, mu_ceil, previous)
        _fill_segment(costs, start, end, m, end_level, levels, level_lo, level_hi)
        mu[start:end] = m
        start, previous = end, m
        segments += 1
    logger.debug("Taut string with %d segments over %d periods", segments, T)
    return levels, mu


def _next_segment(
    costs: PeriodCosts,
    start: int,
    level: float,
    level_lo: np.ndarray,
    level_hi: np.ndarray,
    mu_floor: float,
    mu_ceil: float,
    previous: Optional[float],
) -> Tuple[int, float, float]:
    """Return (end index, multiplier, end level) of the segment beginning at start

    Paths for the current multiplier bounds are cumulated over the whole
    remaining horizon at once; the scan jumps to the next index at which
    one of them leaves the tube.
    """
    T = costs.horizon
    m_lo, m_hi = mu_floor, mu_ceil
    arg_lo = arg_hi = None
    index = np.arange(start + 1, T + 1)
    slack = LEVEL_TOL * np.maximum(1.0, np.maximum(np.abs(level_lo[index]), np.abs(level_hi[index])))
    floor, ceil = level_lo[index] - slack, level_hi[index] + slack
    # levels reached with the highest/lowest responses at m_lo and at m_hi
    up_lo, down_lo = _paths(costs, start, level, m_lo)
    up_hi, down_hi = _paths(costs, start, level, m_hi)
    k = 0
    while k < len(index):
        leaves = (
            (up_hi[k:] < floor[k:]) | (down_lo[k:] > ceil[k:]) | (up_lo[k:] < floor[k:]) | (down_hi[k:] > ceil[k:])
        )
        if not np.any(leaves):
            break
        k += int(np.argmax(leaves))
        t = int(index[k])
        if up_hi[k] < floor[k]:
            if arg_hi is None:
                raise InfeasibleScheduleError(f"Level {level_lo[t]} at t={t} cannot be reached")
            return arg_hi, m_hi, level_hi[arg_hi]
        if down_lo[k] > ceil[k]:
            if arg_lo is None:
                raise InfeasibleScheduleError(f"Level {level_hi[t]} at t={t} cannot be reached")
            return arg_lo, m_lo, level_lo[arg_lo]
        narrow_hi = down_hi[k] > ceil[k]
        if up_lo[k] < floor[k]:
            m_lo = _threshold(costs, start, t, level, level_lo[t], m_lo, m_hi, rising=True)
            arg_lo = t
            up_lo, down_lo = _paths(costs, start, level, m_lo)
        if narrow_hi:
            m_hi = _threshold(costs, start, t, level, level_hi[t], m_lo, m_hi, rising=False)
            arg_hi = t
            up_hi, down_hi = _paths(costs, start, level, m_hi)
        k += 1
    if previous is None:
        m = (m_lo + m_hi) / 2
    else:
        m = min(max(previous, m_lo), m_hi)
    return T, m, level_lo[T]


def _threshold(
    costs: PeriodCosts,
    start: int,
    t: int,
    level: float,
    target: float,
    m_lo: float,
    m_hi: float,
    rising: bool,
) -> float:
    """Bisect for the multiplier at which the path from start reaches target at t

    rising=True returns the smallest mu whose highest path reaches target,
    rising=False the largest mu whose lowest path stays at or below target.
    """
    left, right = m_lo, m_hi
    for _ in range(MU_BISECTIONS):
        middle = (left + right) / 2
        low, high = costs.response(middle, slice(start, t))
        if rising:
            ok = level + np.sum(high) >= target
            left, right = (left, middle) if ok else (middle, right)
        else:
            ok = level + np.sum(low) <= target
            left, right = (middle, right) if ok else (left, middle)
        if right - left <= 1e-15 * max(1.0, abs(right)):
            break
    return right if rising else left


def _paths(costs: PeriodCosts, start: int, level: float, m: float) -> Tuple[np.ndarray, np.ndarray]:
    """Levels at start+1..T reached with the highest and lowest responses to m"""
    low, high = costs.response(m, slice(start, costs.horizon))
    return level + np.cumsum(np.atleast_1d(high)), level + np.cumsum(np.atleast_1d(low))


def _fill_segment(
    costs: PeriodCosts,
    start: int,
    end: int,
    m: float,
    end_level: float,
    levels: np.ndarray,
    level_lo: np.ndarray,
    level_hi: np.ndarray,
):
    """Write the levels of the segment (start, end] for multiplier m"""
    low, high = costs.response(m, slice(start, end))
    x = _distribute(np.atleast_1d(low), np.atleast_1d(high), end_level - levels[start])
    path = levels[start] + np.cumsum(x)
    path[-1] = end_level
    levels[start + 1 : end + 1] = np.clip(path, level_lo[start + 1 : end + 1], level_hi[start + 1 : end + 1])


def _distribute(low: np.ndarray, high: np.ndarray, target: float) -> np.ndarray:
    """Minimum-norm x with low <= x <= high and sum(x) = target (clipped to the box)"""
    total_low, total_high = float(np.sum(low)), float(np.sum(high))
    if total_high - total_low <= SET_VALUED_TOL or target <= total_low:
        return low.copy()
    if target >= total_high:
        return high.copy()
    left, right = float(np.min(low)), float(np.max(high))
    for _ in range(MU_BISECTIONS):
        shift = (left + right) / 2
        if np.sum(np.clip(shift, low, high)) < target:
            left = shift
        else:
            right = shift
        if right - left <= 1e-15 * max(1.0, abs(right)):
            break
    return np.clip((left + right) / 2, low, high)


def _check_reachable(costs: PeriodCosts, level_lo: np.ndarray, level_hi: np.ndarray, tol: float = FEASIBILITY_TOL):
    """Raise InfeasibleScheduleError unless the end level can be reached within the tube"""
    reach_lo = reach_hi = level_lo[0]
    for t in range(1, costs.horizon + 1):
        reach_lo = max(level_lo[t], reach_lo + costs.lower[t - 1])
        reach_hi = min(level_hi[t], reach_hi + costs.upper[t - 1])
        if reach_lo > reach_hi + tol:
            raise InfeasibleScheduleError(
                f"No level in [{level_lo[t]}, {level_hi[t]}] is reachable at t={t} within the rate bounds"
            )


def _project(y: np.ndarray, costs: PeriodCosts, level_lo: np.ndarray, level_hi: np.ndarray) -> np.ndarray:
    """Euclidean projection of flows y onto the feasible set"""
    quadratic = QuadraticCosts(y, costs.lower, costs.upper)
    levels, _ = _solve_taut_string(quadratic, level_lo, level_hi)
    return np.diff(levels)


def _slackness_residuals(
    levels: np.ndarray,
    mu: np.ndarray,
    level_lo: np.ndarray,
    level_hi: np.ndarray,
    tol: float = FEASIBILITY_TOL,
) -> np.ndarray:
    """Violation of the multiplier jump pattern at each level S_1..S_{T-1}"""
    T = len(mu)
    residuals = np.zeros(max(T - 1, 0))
    for t in range(1, T):
        jump = mu[t] - mu[t - 1]
        at_lo = levels[t] <= level_lo[t] + tol
        at_hi = levels[t] >= level_hi[t] - tol
        if at_lo and at_hi:
            residuals[t - 1] = 0.0
        elif at_lo:
            residuals[t - 1] = max(0.0, jump)
        elif at_hi:
            residuals[t - 1] = max(0.0, -jump)
        else:
            residuals[t - 1] = abs(jump)
    return residuals
