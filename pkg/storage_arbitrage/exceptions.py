"""Errors raised by storage_arbitrage

Input and domain problems derive from ValueError, solver failures from
RuntimeError, so callers can catch either family broadly.
"""


class PriceDomainError(ValueError):
    """A quantity lies outside the valid range of a price function"""


class DegenerateMarketError(ValueError):
    """Elasticity data give a nonpositive price-slope denominator"""


class NoClearingError(RuntimeError):
    """No market-clearing solution was bracketed"""


class InfeasibleScheduleError(ValueError):
    """The boundary levels cannot be joined under the store's constraints"""


class UnboundedTradeError(ValueError):
    """Profitable trade with no price response, so the optimal volume is unbounded"""


class LambdaNotFoundError(RuntimeError):
    """Store constraints bind over the whole market-impact bracket"""


class PreconditionError(ValueError):
    """An operation was called outside the conditions it is defined for"""


class NonConvexCostError(ValueError):
    """A per-period cost function failed the sampled convexity check"""


class PriceDataError(ValueError):
    """A price file is malformed, has gaps or nonpositive prices"""


class ConfigError(ValueError):
    """A scenario configuration is missing fields or has invalid values"""
