"""Smoke tests for the plotting functions
"""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from storage_arbitrage import visualize
from storage_arbitrage.dispatch.market_impact import sweep_market_impact
from storage_arbitrage.equilibrium.assess_convergence import competition_study
from storage_arbitrage.market.price_functions import PriceFunction
from storage_arbitrage.store.store import StoreSpec


def test_plot_market_impact():
    spec = StoreSpec(capacity=1, rate_in=1, rate_out=1)
    pbar = np.array([10.0, 12.0, 20.0, 18.0])
    points = sweep_market_impact(spec, pbar, [0.01, 0.1], n_jobs=1)
    visualize.plot_market_impact(points, pbar, periods=slice(0, 3))
    assert len(plt.gcf().axes) == 2
    plt.close("all")


def test_plot_competition():
    spec = StoreSpec(capacity=1, rate_in=1, rate_out=1)
    prices = [PriceFunction.linear(p, 1.0) for p in (10, 20, 12, 22)]
    study = competition_study(spec, prices, [1, 2], n_jobs=1)
    visualize.plot_competition_levels(study.results[2])
    assert len(plt.gca().get_lines()) == 2
    visualize.plot_competition_profits(study)
    assert len(plt.gcf().axes) == 2
    plt.close("all")
