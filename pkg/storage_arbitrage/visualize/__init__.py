from .plot_market_impact import plot_market_impact
from .plot_competition import plot_competition_levels, plot_competition_profits
