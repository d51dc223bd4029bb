#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Plots of competing stores: levels over time, and total profit against the number of stores
"""

from typing import Optional
import numpy as np
import matplotlib.pyplot as plt
from matplotlib.axes import Axes

from storage_arbitrage.equilibrium.assess_convergence import CompetitionStudy
from storage_arbitrage.equilibrium.equilibria import EquilibriumResult


def plot_competition_levels(result: EquilibriumResult, periods: Optional[slice] = None):
    """Plot the level of each store against period

    Parameters:
    -----------
    result: EquilibriumResult
        Output of a Nash or cooperative solve
    periods: slice, optional
        Level indices to show, defaults to all
    """
    periods = slice(None) if periods is None else periods
    _, ax = plt.subplots()
    for j, schedule in enumerate(result.schedules):
        t = np.arange(len(schedule.levels))[periods]
        ax.plot(t, schedule.levels[periods], label=f"Store {j + 1}")
    ax.set_xlabel("Period")
    ax.set_ylabel("Store level")
    ax.set_title(f"{result.mode.capitalize()} solution, {len(result.schedules)} stores")
    ax.legend()


def plot_competition_profits(study: CompetitionStudy):
    """Plot total Nash profit against the number of stores

    The cooperative profit and the unconstrained 4n/(n+1)^2 law are shown
    for comparison.

    Parameters:
    -----------
    study: CompetitionStudy
        Output of equilibrium.assess_convergence.competition_study
    """
    _, axs = plt.subplots(2, 1, sharex=True)
    _make_profit_plot(axs[0], study)
    _make_volume_plot(axs[1], study)
    axs[0].set_ylabel("Total profit")
    axs[1].set_ylabel("Total traded volume")
    axs[1].set_xlabel("Number of stores")
    axs[0].legend()
    axs[1].legend()


def _make_profit_plot(ax: Axes, study: CompetitionStudy):
    n = study.n_list
    ax.plot(n, [study.total_profits[k] for k in n], marker="o", label="Nash")
    ax.plot(n, [study.cooperative_profits[k] for k in n], marker="x", label="Cooperative")
    ax.plot(n, [study.law_profits[k] for k in n], linestyle="--", label="Unconstrained law")


def _make_volume_plot(ax: Axes, study: CompetitionStudy):
    n = study.n_list
    ax.plot(n, [study.total_volumes[k] for k in n], marker="o", label="Nash")
    ax.plot(n, [study.law_volumes[k] for k in n], linestyle="--", label="Unconstrained law")
