"""Store levels and clearing prices over a short stretch for several market impact factors"""

from typing import Optional, Sequence
import numpy as np
import matplotlib.pyplot as plt
from matplotlib.axes import Axes

from storage_arbitrage.dispatch.market_impact import MarketImpactPoint


def plot_market_impact(
    points: Sequence[MarketImpactPoint],
    pbar: np.ndarray,
    periods: Optional[slice] = None,
):
    """Plot store level and clearing price against period for each lambda

    Parameters:
    -----------
    points: list of MarketImpactPoint
        Output of dispatch.market_impact.sweep_market_impact
    pbar: (T,) array_like
        Prices without storage
    periods: slice, optional
        Periods to show, defaults to all
    """
    periods = slice(None) if periods is None else periods
    _, axs = plt.subplots(2, 1, sharex=True)
    _make_level_plot(axs[0], points, periods)
    _make_price_plot(axs[1], points, np.asarray(pbar), periods)
    _format_plot(axs)


def _make_level_plot(ax: Axes, points: Sequence[MarketImpactPoint], periods: slice):
    """Plot store level at the end of each period"""
    for point in points:
        t = np.arange(len(point.levels))[1:][periods]
        ax.plot(t, point.levels[1:][periods], label=f"$\\lambda$ = {point.lam:g}")


def _make_price_plot(ax: Axes, points: Sequence[MarketImpactPoint], pbar: np.ndarray, periods: slice):
    """Plot clearing prices with the no-storage prices for reference"""
    t = np.arange(1, len(pbar) + 1)[periods]
    ax.plot(t, pbar[periods], color="black", linestyle="--", label="No storage")
    for point in points:
        ax.plot(t, point.clearing_prices[periods], label=f"$\\lambda$ = {point.lam:g}")


def _format_plot(axs: np.ndarray):
    axs[0].set_ylabel("Store level")
    axs[1].set_ylabel("Price")
    axs[1].set_xlabel("Period")
    axs[0].legend()
    axs[1].legend()
