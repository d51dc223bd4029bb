"""Tests for price_series.py
"""

import numpy as np
import pytest

from storage_arbitrage.data import price_series
from storage_arbitrage.exceptions import PriceDataError, PriceDomainError


def _write(tmp_path, text):
    path = tmp_path / "prices.csv"
    path.write_text(text)
    return str(path)


def test_load_two_rows(tmp_path):
    path = _write(tmp_path, "timestamp,price_gbp_per_mwh\n2014-01-01T00:00,41.5\n2014-01-01T00:30,39.25\n")
    series = price_series.load_price_csv(path)
    assert len(series) == 2
    assert np.allclose(series.pbar, [41.5, 39.25])


def test_load_without_trailing_newline(tmp_path):
    path = _write(tmp_path, "timestamp,price_gbp_per_mwh\n2014-01-01T00:00,41.5\n2014-01-01T00:30,39.25")
    assert len(price_series.load_price_csv(path)) == 2


def test_gap_names_missing_timestamp(tmp_path):
    path = _write(tmp_path, "timestamp,price_gbp_per_mwh\n2014-01-01T00:00,41.5\n2014-01-01T01:00,39.25\n")
    with pytest.raises(PriceDataError, match="2014-01-01T00:30"):
        price_series.load_price_csv(path)


def test_nonpositive_price(tmp_path):
    path = _write(tmp_path, "timestamp,price_gbp_per_mwh\n2014-01-01T00:00,0.0\n")
    with pytest.raises(PriceDataError, match="line 2"):
        price_series.load_price_csv(path)


def test_unparseable_price(tmp_path):
    path = _write(tmp_path, "timestamp,price_gbp_per_mwh\n2014-01-01T00:00,41.5\n2014-01-01T00:30,1,234\n")
    with pytest.raises(PriceDataError):
        price_series.load_price_csv(path)


def test_wrong_header(tmp_path):
    path = _write(tmp_path, "time,price\n2014-01-01T00:00,41.5\n")
    with pytest.raises(PriceDataError, match="header"):
        price_series.load_price_csv(path)


def test_save_then_load(tmp_path):
    series = price_series.synth_prices(seed=3, days=2)
    path = str(tmp_path / "synth.csv")
    price_series.save_price_csv(series, path)
    loaded = price_series.load_price_csv(path)
    assert np.array_equal(loaded.pbar, series.pbar)
    assert (loaded.timestamps == series.timestamps).all()


def test_synth_is_deterministic():
    a = price_series.synth_prices(seed=7, days=3)
    b = price_series.synth_prices(seed=7, days=3)
    c = price_series.synth_prices(seed=8, days=3)
    assert np.array_equal(a.pbar, b.pbar)
    assert not np.array_equal(a.pbar, c.pbar)
    assert len(a) == 3 * price_series.PERIODS_PER_DAY


def test_synth_daily_cycle():
    series = price_series.synth_prices(seed=0, days=7, week_amp=0, season_amp=0, noise_sd=0)
    pbar = series.pbar.reshape(7, price_series.PERIODS_PER_DAY)
    assert np.allclose(pbar, pbar[0])
    assert np.argmax(pbar[0]) == 24
    assert np.argmin(pbar[0]) == 0


def test_synth_constant_series():
    series = price_series.synth_prices(seed=0, days=1, day_amp=0, week_amp=0, season_amp=0, noise_sd=0)
    assert np.all(series.pbar == 50)


def test_synth_positivity_margin():
    with pytest.raises(PriceDataError):
        price_series.synth_prices(seed=0, days=1, base=20, day_amp=15)


def test_synth_respects_floor():
    series = price_series.synth_prices(seed=1, days=30)
    assert np.all(series.pbar >= 5)


def test_constant_price_functions_without_impact():
    series = price_series.synth_prices(seed=0, days=1)
    prices = price_series.to_price_functions(series, 0.0, (-1, 1))
    assert all(pf.pslope == 0 for pf in prices)


def test_proportional_price_function():
    series = price_series.PriceSeries(["2014-01-01T00:00"], [20.0])
    pf = price_series.to_price_functions(series, 1.0, (-0.5, 0.5))[0]
    assert np.isclose(pf(-0.5), 10)


def test_impact_scaling_invariance():
    series = price_series.synth_prices(seed=2, days=1)
    k = 4.0
    x = np.linspace(-0.5, 0.5, 11)
    base = price_series.to_price_functions(series, 0.1, (-1, 1))
    scaled = price_series.to_price_functions(series, 0.1 * k, (-1 / k, 1 / k))
    for pf, pf_scaled in zip(base, scaled):
        assert np.allclose(pf(x), pf_scaled(x / k), rtol=1e-12)


def test_impact_too_large():
    series = price_series.PriceSeries(["2014-01-01T00:00"], [20.0])
    with pytest.raises(PriceDomainError, match="positivity"):
        price_series.to_price_functions(series, 2.0, (-1, 1))


def test_series_rejects_nonuniform_timestamps():
    with pytest.raises(PriceDataError):
        price_series.PriceSeries(["2014-01-01T00:00", "2014-01-01T00:30", "2014-01-01T01:30"], [1.0, 2.0, 3.0])
