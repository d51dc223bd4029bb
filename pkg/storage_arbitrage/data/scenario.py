"""Scenarios: a price series, a market impact factor and the stores trading against it

Scenarios are read from JSON files such as

    {"lambda": 0.01, "efficiency": 0.75, "capacity": 10, "rate_in": 1,
     "rate_out": 1, "n_stores": 1, "synth": {"seed": 0, "days": 7}}

"pslope" (one slope, or one per period) may replace "lambda" to give the
price slopes directly. Per-store values in "stores" override the scalar
keys; with "split": true the capacity, rates and boundary levels are shared
equally by n_stores.
"""

import dataclasses
import functools
import json
import logging
import os
from typing import Any, Dict, List, Optional
import numpy as np

from storage_arbitrage.data.price_series import PriceSeries, load_price_csv, synth_prices, to_price_functions
from storage_arbitrage.exceptions import ConfigError
from storage_arbitrage.market.price_functions import PriceFunction
from storage_arbitrage.store.store import StoreSpec
from storage_arbitrage.welfare.surplus import DemandModel, GeneratorModel

logger = logging.getLogger(__name__)

STORE_KEYS = ("efficiency", "capacity", "rate_in", "rate_out", "level_start", "level_end")
SYNTH_KEYS = ("seed", "days", "day_amp", "week_amp", "season_amp", "base", "noise_sd", "start")
KNOWN_KEYS = set(STORE_KEYS) | {
    "lambda",
    "pslope",
    "n_stores",
    "price_csv",
    "synth",
    "stores",
    "split",
    "demand",
    "generator",
}
STORE_DEFAULTS = {"efficiency": 1.0, "level_start": 0.0, "level_end": 0.0}


@dataclasses.dataclass(frozen=True, eq=False)
class Scenario:
    """Everything a solver needs about one market and its stores

    Attributes:
        series (PriceSeries): prices without storage
        lam (float or None): market impact factor of the family pbar_t (1 + lam x)
        specs (list of StoreSpec): the stores, at least one
        demand (list of DemandModel or None): one per period
        generator (list of GeneratorModel or None): one per period
        pslope (np.ndarray or None): price slopes used instead of lam, one per period
    """

    series: PriceSeries
    lam: Optional[float]
    specs: List[StoreSpec]
    demand: Optional[List[DemandModel]] = None
    generator: Optional[List[GeneratorModel]] = None
    pslope: Optional[np.ndarray] = None

    def __post_init__(self):
        if (self.lam is None) == (self.pslope is None):
            raise ConfigError("Exactly one of lambda and pslope is required")
        if self.lam is not None and self.lam < 0:
            raise ConfigError(f"lambda={self.lam} must be nonnegative")
        if self.pslope is not None:
            if len(self.pslope) != self.T:
                raise ConfigError(f"pslope: got {len(self.pslope)} slopes for {self.T} periods")
            if np.any(self.pslope < 0):
                raise ConfigError("pslope: price slopes must be nonnegative")
        if len(self.specs) == 0:
            raise ConfigError("A scenario needs at least one store")
        for name in ("demand", "generator"):
            models = getattr(self, name)
            if models is not None and len(models) != self.T:
                raise ConfigError(f"{name}: got {len(models)} models for {self.T} periods")

    @property
    def T(self) -> int:
        return len(self.series)

    @property
    def flow_range(self):
        """Aggregate market-side quantities the stores can reach together"""
        return (
            -sum(spec.efficiency * spec.rate_out for spec in self.specs),
            sum(spec.rate_in for spec in self.specs),
        )

    @functools.cached_property
    def price_functions(self) -> List[PriceFunction]:
        return to_price_functions(self.series, self.lam, self.flow_range, pslope=self.pslope)


def load_scenario(path: str, seed: Optional[int] = None) -> Scenario:
    """Read a scenario from a JSON config file

    Parameters:
    -----------
    path: str
    seed: int, optional
        Overrides the seed of a synthetic price series

    Returns:
    --------
    scenario: Scenario
    """
    try:
        with open(path) as f:
            config = json.load(f)
    except json.JSONDecodeError as error:
        raise ConfigError(f"{path}: invalid JSON, {error}") from error
    return scenario_from_config(config, base_dir=os.path.dirname(os.path.abspath(path)), seed=seed)


def scenario_from_config(config: Dict[str, Any], base_dir: str = ".", seed: Optional[int] = None) -> Scenario:
    unknown = set(config) - KNOWN_KEYS
    if unknown:
        raise ConfigError(f"Unknown config keys: {', '.join(sorted(unknown))}")
    series = _series(config, base_dir, seed)
    specs = _specs(config)
    demand = _demand(config["demand"], len(series)) if "demand" in config else None
    generator = _generator(config["generator"], len(series)) if "generator" in config else None
    if ("lambda" in config) == ("pslope" in config):
        raise ConfigError('Exactly one of "lambda" and "pslope" is required')
    scenario = Scenario(
        series=series,
        lam=_number(config, "lambda") if "lambda" in config else None,
        specs=specs,
        demand=demand,
        generator=generator,
        pslope=_slopes(config["pslope"], len(series)) if "pslope" in config else None,
    )
    logger.info("Scenario with %d periods and %d stores", scenario.T, len(specs))
    return scenario


def _series(config: Dict[str, Any], base_dir: str, seed: Optional[int]) -> PriceSeries:
    if ("price_csv" in config) == ("synth" in config):
        raise ConfigError('Exactly one of "price_csv" and "synth" is required')
    if "price_csv" in config:
        return load_price_csv(os.path.join(base_dir, config["price_csv"]))
    params = dict(config["synth"])
    unknown = set(params) - set(SYNTH_KEYS)
    if unknown:
        raise ConfigError(f"Unknown synth keys: {', '.join(sorted(unknown))}")
    if seed is not None:
        params["seed"] = seed
    for key in ("seed", "days"):
        if key not in params:
            raise ConfigError(f'synth: missing "{key}"')
    return synth_prices(**params)


def _specs(config: Dict[str, Any]) -> List[StoreSpec]:
    n = int(config.get("n_stores", 1))
    if n < 1:
        raise ConfigError(f"n_stores={n} must be at least 1")
    overrides = config.get("stores", [{}] * n)
    if len(overrides) != n:
        raise ConfigError(f"stores: got {len(overrides)} entries for n_stores={n}")
    share = 1 / n if config.get("split", False) else 1.0
    specs = []
    for j, override in enumerate(overrides):
        unknown = set(override) - set(STORE_KEYS)
        if unknown:
            raise ConfigError(f"stores[{j}]: unknown keys {', '.join(sorted(unknown))}")
        values = {}
        for key in STORE_KEYS:
            if key in override:
                values[key] = _number(override, key, f"stores[{j}].")
            elif key in config:
                values[key] = _number(config, key)
            elif key in STORE_DEFAULTS:
                values[key] = STORE_DEFAULTS[key]
            else:
                raise ConfigError(f'Missing store field "{key}"')
        try:
            spec = StoreSpec(**values)
        except ValueError as error:
            raise ConfigError(f"stores[{j}]: {error}") from error
        specs.append(spec.scaled(share) if share != 1.0 else spec)
    return specs


def _demand(value: Any, T: int) -> List[DemandModel]:
    entries = value if isinstance(value, list) else [value] * T
    if len(entries) != T:
        raise ConfigError(f"demand: got {len(entries)} entries for {T} periods")
    models = []
    for entry in entries:
        if isinstance(entry, (int, float)):
            models.append(DemandModel.inelastic(entry))
        elif isinstance(entry, dict) and set(entry) == {"a", "b"}:
            models.append(DemandModel.linear(entry["a"], entry["b"]))
        else:
            raise ConfigError(f"demand: expected a number or {{a, b}}, got {entry!r}")
    return models


def _slopes(value: Any, T: int) -> np.ndarray:
    entries = value if isinstance(value, list) else [value] * T
    if len(entries) != T:
        raise ConfigError(f"pslope: got {len(entries)} entries for {T} periods")
    return np.array([_number({"pslope": entry}, "pslope") for entry in entries])


def _generator(value: Any, T: int) -> List[GeneratorModel]:
    required = {"marginal_cost_intercept", "marginal_cost_slope", "capacity"}
    if not isinstance(value, dict) or set(value) != required:
        raise ConfigError(f"generator: expected keys {', '.join(sorted(required))}")
    model = GeneratorModel(
        capacity=float(value["capacity"]),
        intercept=float(value["marginal_cost_intercept"]),
        slope=float(value["marginal_cost_slope"]),
    )
    return [model] * T


def _number(config: Dict[str, Any], key: str, prefix: str = "") -> float:
    if key not in config:
        raise ConfigError(f'Missing field "{prefix}{key}"')
    value = config[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f'Field "{prefix}{key}" must be a number, got {value!r}')
    return float(value)
