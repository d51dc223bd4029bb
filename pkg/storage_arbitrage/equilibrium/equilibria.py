"""Schedules of several stores sharing one market

Stores may cooperate (minimise their combined cost) or compete as Cournot
players, each choosing its schedule optimally given the others'. With linear
prices the competitive game has an exact potential, so best responses converge
to its unique minimiser. For identical stores that never hit a constraint the
equilibrium is available in closed form.
"""

import dataclasses
import logging
from typing import List, Optional, Sequence, Tuple
import numpy as np
import tensorflow as tf

from storage_arbitrage.dispatch.costs import FunctionCosts, MarketCosts, QuadraticCosts
from storage_arbitrage.dispatch.dispatchers import StoreDispatcher, optimize_single
from storage_arbitrage.exceptions import PreconditionError
from storage_arbitrage.market.clearing import aggregate_market_flows
from storage_arbitrage.market.price_functions import PriceFunction, price_at
from storage_arbitrage.store.store import Schedule, StoreSpec, eff_map, feasible, store_cost, traded_volume

logger = logging.getLogger(__name__)

LOGDIR = "logdir/"  # Log directory to save tensorboard files in
MAX_SWEEPS = 500
POTENTIAL_TOL = 1e-10
FLOW_CHANGE_TOL = 1e-10
LAMBDA_BISECTIONS = 200


@dataclasses.dataclass(frozen=True, eq=False)
class EquilibriumResult:
    """Schedules of all stores with their profits and the resulting prices

    Attributes:
        schedules (list of Schedule): one per store, in input order
        profits (list of float): profit of each store given the others
        clearing_prices {array of shape (T,)}: market prices under all schedules
        iterations (int): sweeps over the stores
        br_residual (float): largest profit gain any single store could still
            make by re-optimising alone (for cooperative results, the joint
            cost reduction of the last sweep)
        mode (str): "nash" or "cooperative"
        converged (bool): False if the sweep cap was reached first
        local_optimum (bool): set for cooperative results, which are not
            guaranteed to be global
        nonunique (bool): set when uniqueness of the equilibrium is not guaranteed
        potential_trajectory {array or None}: potential after each best-response step
    """

    schedules: List[Schedule]
    profits: List[float]
    clearing_prices: np.ndarray
    iterations: int
    br_residual: float
    mode: str
    converged: bool = True
    local_optimum: bool = False
    nonunique: bool = False
    potential_trajectory: Optional[np.ndarray] = None

    @property
    def total_profit(self) -> float:
        return float(sum(self.profits))

    @property
    def flows(self) -> List[np.ndarray]:
        return [s.flows for s in self.schedules]


@dataclasses.dataclass(frozen=True, eq=False)
class SymmetricNashResult:
    """Closed-form equilibrium of n identical stores that never meet a constraint

    Attributes:
        per_store_flows {array of shape (T,)}: flows of each store
        lambda_star (float): common marginal value of stored energy
        per_store_profit (float): profit of each store
        n (int): number of stores
        identity_residual (float): max_t |h(x_t)(pbar_t + (n+1) pslope_t h(x_t)) - lambda_star x_t|
    """

    per_store_flows: np.ndarray
    lambda_star: float
    per_store_profit: float
    n: int
    identity_residual: float = 0.0
    efficiency: float = 1.0

    @property
    def total_profit(self) -> float:
        return self.n * self.per_store_profit

    @property
    def total_volume(self) -> float:
        return self.n * traded_volume(self.efficiency, self.per_store_flows)


class _CooperativeCost:
    """Joint cost increase (h + K) p(h + K) - K p(K) of one store's flow x, h = h(x)"""

    def __init__(self, pf: PriceFunction, others: float, efficiency: float):
        self.pf = pf
        self.others = others
        self.efficiency = efficiency

    def __call__(self, x: np.ndarray) -> np.ndarray:
        y = eff_map(self.efficiency, x) + self.others
        return y * price_at(self.pf, y) - self.others * price_at(self.pf, self.others)

    def derivative(self, x: float, side: str = "right") -> float:
        buying = x > 0 or (x == 0 and side == "right")
        dh = 1.0 if buying else self.efficiency
        y = eff_map(self.efficiency, x) + self.others
        return dh * (price_at(self.pf, y) + y * self.pf.slope(y, side))


def cooperative(
    specs: Sequence[StoreSpec],
    prices: Sequence[PriceFunction],
    tol: float = POTENTIAL_TOL,
    max_sweeps: int = MAX_SWEEPS,
    init: Optional[Sequence[Schedule]] = None,
) -> EquilibriumResult:
    """Schedules minimising the stores' combined cost, by coordinate descent over stores

    Each store in turn is re-optimised against a cost that includes the
    price effect of its flows on the other stores' trades.

    Parameters:
    -----------
    specs: list of StoreSpec
    prices: list of PriceFunction
    tol: float
        A sweep reducing the joint cost by less than tol * max(1, |joint cost|) stops
    max_sweeps: int
    init: list of Schedule, optional
        Starting schedules, defaults to minimum-trade schedules

    Returns:
    --------
    result: EquilibriumResult with mode "cooperative"
    """
    if len(specs) == 0:
        raise ValueError("At least one store is needed")
    T = len(prices)
    schedules = _initial_schedules(specs, T, init)
    joint = _joint_cost(specs, prices, schedules)
    improvement = np.inf
    converged = False
    for sweep in range(1, max_sweeps + 1):
        for j, spec in enumerate(specs):
            others = _companion_flows(specs, schedules, j)
            costs = _cooperative_costs(spec, prices, others)
            schedules[j] = optimize_single(spec, prices, costs=costs).schedule
        new_joint = _joint_cost(specs, prices, schedules)
        improvement = joint - new_joint
        joint = new_joint
        logger.debug("Cooperative sweep %d: joint cost %.10g", sweep, joint)
        if improvement < tol * max(1.0, abs(joint)):
            converged = True
            break
    if not converged:
        logger.warning("Cooperative descent stopped after %d sweeps", max_sweeps)
    return _result(specs, prices, schedules, sweep, max(improvement, 0.0), "cooperative", converged, local_optimum=True)


def aggregate_shortcut(
    specs: Sequence[StoreSpec],
    prices: Sequence[PriceFunction],
) -> Optional[EquilibriumResult]:
    """Cooperative solution through one store with the summed capacity and rates

    The summed store's schedule is split among the stores in proportion to
    their capacities. Returns None when efficiencies differ or when some
    store's share of the schedule violates its own constraints.
    """
    if len({spec.efficiency for spec in specs}) != 1:
        logger.info("Aggregate shortcut not applicable: efficiencies differ")
        return None
    total = StoreSpec(
        capacity=sum(spec.capacity for spec in specs),
        rate_in=sum(spec.rate_in for spec in specs),
        rate_out=sum(spec.rate_out for spec in specs),
        efficiency=specs[0].efficiency,
        level_start=sum(spec.level_start for spec in specs),
        level_end=sum(spec.level_end for spec in specs),
    )
    sol = optimize_single(total, prices)
    schedules = []
    for spec in specs:
        share = Schedule(sol.schedule.levels * spec.capacity / total.capacity)
        ok, violations = feasible(spec, share)
        if not ok:
            logger.info("Aggregate shortcut not applicable: %s", violations[0])
            return None
        schedules.append(share)
    return _result(specs, prices, schedules, 1, 0.0, "cooperative", True)


def nash_best_response(
    specs: Sequence[StoreSpec],
    prices: Sequence[PriceFunction],
    init: Optional[Sequence[Schedule]] = None,
    tol: Optional[float] = None,
    max_sweeps: int = MAX_SWEEPS,
    logging: bool = False,
    log_name: str = "nash_best_response",
) -> EquilibriumResult:
    """Cournot equilibrium by cyclic best responses

    Parameters:
    -----------
    specs: list of StoreSpec
    prices: list of PriceFunction
    init: list of Schedule, optional
        Starting schedules, defaults to minimum-trade schedules
    tol: float, optional
        Stop once no store gained more than tol in a sweep; defaults to
        max(1e-9, 1e-7 * |total profit|)
    max_sweeps: int
        Sweep cap, after which the result is returned with converged=False
    logging: boolean
        Log per-sweep diagnostics in tensorboard if True
    log_name: str
        Subdirectory of LOGDIR for the tensorboard files

    Returns:
    --------
    result: EquilibriumResult with mode "nash"
    """
    T = len(prices)
    schedules = _initial_schedules(specs, T, init)
    track_potential = all(pf.is_linear for pf in prices)
    trajectory = [potential_value(specs, prices, schedules)] if track_potential else []
    if logging:
        writer = tf.summary.create_file_writer(f"{LOGDIR}{log_name}")
    converged = False
    for sweep in range(1, max_sweeps + 1):
        gains = np.zeros(len(specs))
        for j, spec in enumerate(specs):
            others = _companion_flows(specs, schedules, j)
            current = -store_cost(schedules[j].flows, others, prices, spec.efficiency)
            sol = optimize_single(spec, prices, others)
            gains[j] = sol.profit - current
            if gains[j] > 0:
                schedules[j] = sol.schedule
            if track_potential:
                trajectory.append(potential_value(specs, prices, schedules))
        profits = _store_profits(specs, prices, schedules)
        threshold = equilibrium_tol(profits) if tol is None else tol
        if logging:
            with writer.as_default():
                tf.summary.scalar("max_gain", float(np.max(gains)), step=sweep)
                tf.summary.scalar("total_profit", float(sum(profits)), step=sweep)
                if track_potential:
                    tf.summary.scalar("potential", trajectory[-1], step=sweep)
        logger.debug("Best-response sweep %d: max gain %.3g", sweep, np.max(gains))
        if np.max(gains) <= threshold:
            converged = True
            break
    if not converged:
        logger.warning("Best responses did not converge in %d sweeps", max_sweeps)
    residual = br_residual(specs, prices, schedules)
    return _result(
        specs,
        prices,
        schedules,
        sweep,
        residual,
        "nash",
        converged,
        potential_trajectory=np.array(trajectory) if track_potential else None,
    )


def potential_value(
    specs: Sequence[StoreSpec],
    prices: Sequence[PriceFunction],
    schedules: Sequence[Schedule],
) -> float:
    """Exact potential of the Cournot game with linear prices

    sum_t [pbar_t H_t + pslope_t (sum_i h_it^2 + H_t^2) / 2], with h_it the
    market-side quantity of store i and H_t = sum_i h_it.
    """
    pbar, pslope = _linear_coefficients(prices)
    h = np.array([eff_map(spec.efficiency, s.flows) for spec, s in zip(specs, schedules)])
    total = h.sum(axis=0)
    return float(np.sum(pbar * total + 0.5 * pslope * (np.sum(h**2, axis=0) + total**2)))


def nash_linear(
    specs: Sequence[StoreSpec],
    prices: Sequence[PriceFunction],
    tol: float = POTENTIAL_TOL,
    flow_tol: float = FLOW_CHANGE_TOL,
    max_sweeps: int = 100 * MAX_SWEEPS,
    init: Optional[Sequence[Schedule]] = None,
) -> EquilibriumResult:
    """The unique Cournot equilibrium for linear prices, as the minimiser of the potential

    Block coordinate descent over stores: with the other stores fixed, the
    potential differs from the store's own cost by a constant, so each block
    step is a certified single-store solve. Stops when a sweep lowers the
    potential by less than tol * max(1, |potential|) and no flow moved by more
    than flow_tol. Falls back to nash_best_response when some pslope is 0.
    """
    pbar, pslope = _linear_coefficients(prices)
    if np.any(pslope <= 0):
        logger.warning("Zero price slope: equilibrium need not be unique, using best responses")
        result = nash_best_response(specs, prices, init=init)
        return dataclasses.replace(result, nonunique=True)
    T = len(prices)
    schedules = _initial_schedules(specs, T, init)
    potential = potential_value(specs, prices, schedules)
    converged = False
    for sweep in range(1, max_sweeps + 1):
        change = 0.0
        for j, spec in enumerate(specs):
            others = _companion_flows(specs, schedules, j)
            sol = optimize_single(spec, prices, others)
            change = max(change, float(np.max(np.abs(sol.flows - schedules[j].flows))))
            schedules[j] = sol.schedule
        new_potential = potential_value(specs, prices, schedules)
        decrease = potential - new_potential
        potential = new_potential
        if decrease < tol * max(1.0, abs(potential)) and change <= flow_tol:
            converged = True
            break
    logger.info("Potential minimised in %d sweeps: %.10g", sweep, potential)
    if not converged:
        logger.warning("Potential descent stopped after %d sweeps", max_sweeps)
    residual = br_residual(specs, prices, schedules)
    return _result(specs, prices, schedules, sweep, residual, "nash", converged)


def unconstrained_symmetric_nash(
    n: int,
    prices: Sequence[PriceFunction],
    efficiency: float = 1.0,
    s0: float = 0.0,
    level_tol: float = 1e-9,
) -> SymmetricNashResult:
    """Equilibrium of n identical stores without capacity or rate constraints

    Each store buys (lam - pbar_t) / ((n+1) pslope_t) when lam > pbar_t, sells
    (lam - e pbar_t) / ((n+1) pslope_t e^2) when lam < e pbar_t and is idle
    otherwise; lam is found by bisection so that the flows sum to zero.

    Parameters:
    -----------
    n: int
        Number of stores
    prices: list of PriceFunction
        Linear price functions with positive slopes
    efficiency: float
    s0: float
        Starting (and finishing) level of each store
    level_tol: float
        Levels below -level_tol violate the no-emptying precondition

    Returns:
    --------
    result: SymmetricNashResult
    """
    if n < 1:
        raise ValueError(f"n={n} must be at least 1")
    pbar, pslope = _linear_coefficients(prices)
    if np.any(pslope <= 0):
        raise PreconditionError("The symmetric closed form needs positive price slopes")
    lo, hi = float(np.min(efficiency * pbar)), float(np.max(pbar))
    for _ in range(LAMBDA_BISECTIONS):
        middle = (lo + hi) / 2
        if np.sum(_symmetric_flows(middle, pbar, pslope, efficiency, n)) < 0:
            lo = middle
        else:
            hi = middle
        if hi - lo <= 1e-15 * max(1.0, abs(hi)):
            break
    lam = (lo + hi) / 2
    x = _symmetric_flows(lam, pbar, pslope, efficiency, n)
    # the bisection leaves a tiny imbalance; absorb it in the largest flow's period
    if np.any(x != 0):
        x[np.argmax(np.abs(x))] -= np.sum(x)
    levels = s0 + np.cumsum(x)
    empty = np.flatnonzero(levels < -level_tol)
    if len(empty) > 0:
        t = int(empty[0]) + 1
        raise PreconditionError(f"Level {levels[t - 1]:.6g} at t={t} is negative; raise s0")
    h = eff_map(efficiency, x)
    residual = float(np.max(np.abs(h * (pbar + (n + 1) * pslope * h) - lam * x), initial=0.0))
    return SymmetricNashResult(
        per_store_flows=x,
        lambda_star=lam,
        per_store_profit=float(np.sum(pslope * h**2)),
        n=n,
        identity_residual=residual,
        efficiency=efficiency,
    )


def br_residual(
    specs: Sequence[StoreSpec],
    prices: Sequence[PriceFunction],
    schedules: Sequence[Schedule],
) -> float:
    """Largest profit any one store gains by re-optimising against the others"""
    residual = 0.0
    for j, spec in enumerate(specs):
        others = _companion_flows(specs, schedules, j)
        current = -store_cost(schedules[j].flows, others, prices, spec.efficiency)
        best = optimize_single(spec, prices, others).profit
        residual = max(residual, best - current)
    return residual


def _symmetric_flows(
    lam: float, pbar: np.ndarray, pslope: np.ndarray, efficiency: float, n: int
) -> np.ndarray:
    buy = (lam - pbar) / ((n + 1) * pslope)
    sell = (lam - efficiency * pbar) / ((n + 1) * pslope * efficiency**2)
    return np.where(lam > pbar, buy, np.where(lam < efficiency * pbar, sell, 0.0))


def equilibrium_tol(profits: Sequence[float]) -> float:
    return max(1e-9, 1e-7 * abs(float(sum(profits))))


def _linear_coefficients(prices: Sequence[PriceFunction]) -> Tuple[np.ndarray, np.ndarray]:
    if not all(pf.is_linear for pf in prices):
        raise PreconditionError("Linear price functions are required")
    return np.array([pf.pbar for pf in prices]), np.array([pf.pslope for pf in prices])


def _initial_schedules(
    specs: Sequence[StoreSpec], T: int, init: Optional[Sequence[Schedule]]
) -> List[Schedule]:
    """Given schedules, else the feasible schedules closest to zero trade"""
    if init is not None:
        if len(init) != len(specs):
            raise ValueError(f"Got {len(init)} initial schedules for {len(specs)} stores")
        for spec, schedule in zip(specs, init):
            ok, violations = feasible(spec, schedule)
            if not ok:
                raise ValueError(f"Infeasible initial schedule: {violations[0]}")
        return list(init)
    schedules = []
    for spec in specs:
        closest = QuadraticCosts(np.zeros(T), np.full(T, -spec.rate_out), np.full(T, spec.rate_in))
        schedules.append(StoreDispatcher.from_spec(spec).fit(closest).schedule_)
    return schedules


def _companion_flows(specs: Sequence[StoreSpec], schedules: Sequence[Schedule], j: int) -> np.ndarray:
    T = schedules[0].horizon
    total = np.zeros(T)
    for i, (spec, schedule) in enumerate(zip(specs, schedules)):
        if i != j:
            total = total + eff_map(spec.efficiency, schedule.flows)
    return total


def _cooperative_costs(spec: StoreSpec, prices: Sequence[PriceFunction], others: np.ndarray):
    """Per-period joint cost of one store's flow with the other stores fixed"""
    T = len(prices)
    if all(pf.is_linear for pf in prices):
        # (h + K)(a + b(h + K)) - K(a + bK) = h (a + 2bK) + b h^2
        shifted = [
            PriceFunction.linear(
                pf.pbar + 2 * pf.pslope * k, pf.pslope, (pf.valid_range[0] - k, pf.valid_range[1] - k)
            )
            for pf, k in zip(prices, others)
        ]
        return MarketCosts(shifted, spec.efficiency, np.full(T, spec.rate_in), np.full(T, spec.rate_out))
    functions = [_CooperativeCost(pf, float(k), spec.efficiency) for pf, k in zip(prices, others)]
    return FunctionCosts(functions, -spec.rate_out, spec.rate_in)


def _joint_cost(specs: Sequence[StoreSpec], prices: Sequence[PriceFunction], schedules: Sequence[Schedule]) -> float:
    total = aggregate_market_flows([spec.efficiency for spec in specs], [s.flows for s in schedules])
    return float(sum(q * price_at(pf, q) for pf, q in zip(prices, total)))


def _store_profits(
    specs: Sequence[StoreSpec], prices: Sequence[PriceFunction], schedules: Sequence[Schedule]
) -> List[float]:
    return [
        -store_cost(s.flows, _companion_flows(specs, schedules, j), prices, spec.efficiency)
        for j, (spec, s) in enumerate(zip(specs, schedules))
    ]


def _result(
    specs: Sequence[StoreSpec],
    prices: Sequence[PriceFunction],
    schedules: Sequence[Schedule],
    iterations: int,
    residual: float,
    mode: str,
    converged: bool,
    local_optimum: bool = False,
    potential_trajectory: Optional[np.ndarray] = None,
) -> EquilibriumResult:
    total = aggregate_market_flows([spec.efficiency for spec in specs], [s.flows for s in schedules])
    return EquilibriumResult(
        schedules=list(schedules),
        profits=_store_profits(specs, prices, schedules),
        clearing_prices=np.array([price_at(pf, q) for pf, q in zip(prices, total)]),
        iterations=iterations,
        br_residual=residual,
        mode=mode,
        converged=converged,
        local_optimum=local_optimum,
        potential_trajectory=potential_trajectory,
    )
