"""Half-hourly price series: reading, writing, synthesis and conversion to price functions

CSV files have the header `timestamp,price_gbp_per_mwh`, ISO-8601 timestamps
with minute precision (2014-01-01T00:30) and plain decimal prices.
"""

import dataclasses
import logging
from typing import List, Optional, Tuple
import numpy as np
import pandas as pd

from storage_arbitrage.exceptions import PriceDataError, PriceDomainError
from storage_arbitrage.market.price_functions import ArrayLike, PriceFunction, validate_price_function

logger = logging.getLogger(__name__)

HEADER = ("timestamp", "price_gbp_per_mwh")
TIMESTAMP_FORMAT = "%Y-%m-%dT%H:%M"
PERIOD = pd.Timedelta(minutes=30)
PERIODS_PER_DAY = 48
DEFAULT_START = "2014-01-01T00:00"


@dataclasses.dataclass(frozen=True, eq=False)
class PriceSeries:
    """Prices without storage, pbar_t, at uniformly spaced timestamps"""

    timestamps: pd.DatetimeIndex
    pbar: np.ndarray

    def __post_init__(self):
        timestamps = pd.DatetimeIndex(self.timestamps)
        pbar = np.array(self.pbar, dtype=float)
        if len(timestamps) != len(pbar):
            raise PriceDataError(f"Got {len(timestamps)} timestamps for {len(pbar)} prices")
        if len(pbar) == 0:
            raise PriceDataError("A price series needs at least one period")
        steps = np.diff(timestamps.asi8)
        if np.any(steps <= 0):
            i = int(np.flatnonzero(steps <= 0)[0]) + 1
            raise PriceDataError(f"Timestamps not strictly increasing at {timestamps[i]}")
        if len(steps) > 0 and np.any(steps != steps[0]):
            i = int(np.flatnonzero(steps != steps[0])[0]) + 1
            raise PriceDataError(f"Timestamps not uniformly spaced at {timestamps[i]}")
        if np.any(pbar <= 0):
            i = int(np.flatnonzero(pbar <= 0)[0])
            raise PriceDataError(f"Nonpositive price {pbar[i]} at {timestamps[i]}")
        pbar.setflags(write=False)
        object.__setattr__(self, "timestamps", timestamps)
        object.__setattr__(self, "pbar", pbar)

    def __len__(self) -> int:
        return len(self.pbar)

    def window(self, start: int, stop: int) -> "PriceSeries":
        return PriceSeries(self.timestamps[start:stop], self.pbar[start:stop])


def load_price_csv(path: str) -> PriceSeries:
    """Read and validate a half-hourly price file

    Raises PriceDataError naming the line for parse errors and nonpositive
    prices, and naming the first missing timestamp for gaps.
    """
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False)
    except pd.errors.ParserError as error:
        raise PriceDataError(f"{path}: {error}") from error
    except pd.errors.EmptyDataError as error:
        raise PriceDataError(f"{path}: empty file") from error
    if tuple(frame.columns) != HEADER:
        raise PriceDataError(f"{path}, line 1: expected header {','.join(HEADER)}")
    timestamps = []
    prices = []
    for i, (stamp, price) in enumerate(zip(frame["timestamp"], frame["price_gbp_per_mwh"])):
        line = i + 2
        timestamps.append(_parse_timestamp(stamp, path, line))
        prices.append(_parse_price(price, path, line))
        if prices[-1] <= 0:
            raise PriceDataError(f"{path}, line {line}: nonpositive price {price} at {stamp}")
        if i > 0:
            step = timestamps[-1] - timestamps[-2]
            if step <= pd.Timedelta(0):
                raise PriceDataError(f"{path}, line {line}: timestamp {stamp} does not increase")
            if step > PERIOD:
                missing = (timestamps[-2] + PERIOD).strftime(TIMESTAMP_FORMAT)
                raise PriceDataError(f"{path}, line {line}: gap, missing period {missing}")
            if step != PERIOD:
                raise PriceDataError(f"{path}, line {line}: timestamp {stamp} is not on the half hour grid")
    logger.info("Read %d prices from %s", len(prices), path)
    return PriceSeries(pd.DatetimeIndex(timestamps), np.array(prices))


def save_price_csv(series: PriceSeries, path: str):
    """Write a price series in the format read by load_price_csv"""
    frame = pd.DataFrame(
        {
            HEADER[0]: series.timestamps.strftime(TIMESTAMP_FORMAT),
            HEADER[1]: series.pbar,
        }
    )
    frame.to_csv(path, index=False, lineterminator="\n")


def synth_prices(
    seed: int,
    days: int,
    day_amp: float = 15.0,
    week_amp: float = 3.0,
    season_amp: float = 5.0,
    base: float = 50.0,
    noise_sd: float = 2.0,
    start: str = DEFAULT_START,
) -> PriceSeries:
    """Synthetic half-hourly prices, high by day and low by night

    The series is base plus a daily sinusoid peaking at midday, a weekly
    modulation, a seasonal cosine peaking on the start date and Gaussian
    noise, floored at base / 10. Noise comes from a PCG64 generator seeded
    with seed, mapping uniform draws to normals by the Box-Muller transform.

    Parameters:
    -----------
    seed: int
    days: int
        Length of the series in days (48 periods each)
    day_amp, week_amp, season_amp: float
        Amplitudes of the daily, weekly and seasonal components
    base: float
        Mean price level
    noise_sd: float
        Standard deviation of the noise
    start: str
        Timestamp of the first period

    Returns:
    --------
    series: PriceSeries
    """
    if days < 1:
        raise ValueError(f"days={days} must be at least 1")
    margin = base - (day_amp + week_amp + season_amp + 5 * noise_sd)
    if margin <= 0:
        raise PriceDataError(
            f"base={base} must exceed day_amp + week_amp + season_amp + 5 noise_sd (short by {-margin})"
        )
    n = days * PERIODS_PER_DAY
    k = np.arange(n)
    day = k // PERIODS_PER_DAY
    daily = -day_amp * np.cos(2 * np.pi * (k % PERIODS_PER_DAY) / PERIODS_PER_DAY)
    weekly = week_amp * np.cos(2 * np.pi * (day % 7) / 7)
    seasonal = season_amp * np.cos(2 * np.pi * (day % 365) / 365)
    pbar = base + daily + weekly + seasonal
    if noise_sd > 0:
        rng = np.random.Generator(np.random.PCG64(seed))
        u1, u2 = rng.random(n), rng.random(n)
        pbar = pbar + noise_sd * np.sqrt(-2 * np.log1p(-u1)) * np.cos(2 * np.pi * u2)
    pbar = np.maximum(pbar, base / 10)
    timestamps = pd.date_range(pd.Timestamp(start), periods=n, freq=PERIOD)
    return PriceSeries(timestamps, pbar)


def to_price_functions(
    series: PriceSeries,
    lam: Optional[float],
    flow_range: Tuple[float, float],
    pslope: Optional[ArrayLike] = None,
) -> List[PriceFunction]:
    """Price functions pbar_t (1 + lam x) valid over flow_range

    With pslope given, the slopes are taken from it (one value for all
    periods or one per period) and lam is ignored.

    Raises PriceDomainError if some function fails its assumption checks on
    flow_range (for instance, prices turning nonpositive at large sales).
    """
    if pslope is None:
        if lam is None or lam < 0:
            raise ValueError(f"lambda={lam} must be nonnegative")
        slopes = lam * series.pbar
        family = f"lambda={lam}"
    else:
        slopes = np.broadcast_to(np.asarray(pslope, dtype=float), series.pbar.shape)
        if np.any(slopes < 0):
            raise ValueError("Price slopes must be nonnegative")
        family = "the given price slopes"
    prices = []
    for t, (stamp, pbar, slope) in enumerate(zip(series.timestamps, series.pbar, slopes)):
        pf = PriceFunction.linear(pbar, float(slope), valid_range=flow_range)
        violations = validate_price_function(pf)
        if violations:
            v = violations[0]
            raise PriceDomainError(
                f"Period {t + 1} ({stamp}): {v.assumption} fails at x={v.x} for {family}"
            )
        prices.append(pf)
    return prices


def _parse_timestamp(value: str, path: str, line: int) -> pd.Timestamp:
    try:
        return pd.to_datetime(value, format=TIMESTAMP_FORMAT)
    except ValueError as error:
        raise PriceDataError(f"{path}, line {line}: invalid timestamp {value!r}") from error


def _parse_price(value: str, path: str, line: int) -> float:
    try:
        price = float(value)
    except ValueError as error:
        raise PriceDataError(f"{path}, line {line}: invalid price {value!r}") from error
    if not np.isfinite(price):
        raise PriceDataError(f"{path}, line {line}: invalid price {value!r}")
    return price
