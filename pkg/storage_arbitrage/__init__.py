from storage_arbitrage.market.price_functions import PriceFunction, ResidualSupply, validate_price_function
from storage_arbitrage.market.clearing import clear_two_period, clearing_prices
from storage_arbitrage.store.store import StoreSpec, Schedule, feasible, store_cost
from storage_arbitrage.dispatch.dispatchers import StoreDispatcher, optimize_single, verify_certificate
from storage_arbitrage.dispatch.sensitivity import sensitivity_capacity, sensitivity_rate
from storage_arbitrage.dispatch.market_impact import find_lambda_max, sweep_market_impact
from storage_arbitrage.dispatch.rolling_horizon import rolling_horizon
from storage_arbitrage.equilibrium.equilibria import cooperative, nash_best_response, nash_linear
from storage_arbitrage.equilibrium.assess_convergence import run as assess_convergence, competition_study
from storage_arbitrage.welfare.surplus import surplus_delta_approx, surplus_delta_exact
from storage_arbitrage.data.price_series import load_price_csv, synth_prices
from storage_arbitrage.data.scenario import load_scenario
from storage_arbitrage.visualize import plot_market_impact, plot_competition_levels, plot_competition_profits
