"""Tests for cli.py
"""

import json
import numpy as np
import pytest

from storage_arbitrage import cli
from storage_arbitrage.data.price_series import load_price_csv

PRICES = "timestamp,price_gbp_per_mwh\n2014-01-01T00:00,10\n2014-01-01T00:30,10\n2014-01-01T01:00,30\n2014-01-01T01:30,30\n"


@pytest.fixture
def config_path(tmp_path):
    (tmp_path / "prices.csv").write_text(PRICES)
    config = {"lambda": 0.1, "capacity": 10, "rate_in": 1, "rate_out": 1, "price_csv": "prices.csv"}
    path = tmp_path / "scenario.json"
    path.write_text(json.dumps(config))
    return str(path)


def _json_report(capsys, argv):
    status = cli.main(argv)
    return status, json.loads(capsys.readouterr().out)


def test_optimize_json(capsys, config_path):
    status, report = _json_report(capsys, ["optimize", "--config", config_path])
    assert status == 0
    assert report["ok"]
    assert np.isclose(report["summary"]["profit"], 32)
    assert report["summary"]["binding"] == ["rate_in", "rate_out"]
    assert [row["flow_1"] for row in report["periods"]] == pytest.approx([1, 1, -1, -1])
    assert report["periods"][2]["clearing_price"] == pytest.approx(27)


def test_optimize_csv(capsys, config_path):
    assert cli.main(["--format", "csv", "optimize", "--config", config_path]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0].startswith("# ")
    assert "t,timestamp,pbar,clearing_price,level_1,flow_1" in lines
    assert lines[-1].startswith("4,2014-01-01T01:30,")


def test_reports_are_deterministic(tmp_path, config_path):
    first, second = tmp_path / "first.json", tmp_path / "second.json"
    assert cli.main(["--out", str(first), "optimize", "--config", config_path]) == 0
    assert cli.main(["--out", str(second), "optimize", "--config", config_path]) == 0
    assert first.read_bytes() == second.read_bytes()


def test_nash_and_coop(capsys, tmp_path):
    (tmp_path / "prices.csv").write_text(PRICES)
    config = {
        "lambda": 0.1,
        "capacity": 10,
        "rate_in": 1,
        "rate_out": 1,
        "n_stores": 2,
        "split": True,
        "price_csv": "prices.csv",
    }
    path = tmp_path / "two.json"
    path.write_text(json.dumps(config))
    status, nash = _json_report(capsys, ["nash", "--config", str(path)])
    assert status == 0
    assert nash["summary"]["mode"] == "nash"
    assert len(nash["summary"]["profits"]) == 2
    status, coop = _json_report(capsys, ["coop", "--config", str(path)])
    assert status == 0
    assert coop["summary"]["method"] == "aggregate"
    assert coop["summary"]["total_profit"] >= nash["summary"]["total_profit"] - 1e-9


def test_competition_study(capsys, config_path):
    status, report = _json_report(capsys, ["nash", "--config", config_path, "--n-list", "1", "2"])
    assert status == 0
    assert [row["n"] for row in report["periods"]] == [1, 2]


def test_sensitivity(capsys, config_path):
    # purchases cannot grow while both sales are at their rate bound
    argv = ["sensitivity", "--config", config_path, "--t0", "1", "--delta", "0.01", "--target", "rate_in"]
    status, report = _json_report(capsys, argv)
    assert status == 0
    assert report["summary"]["changed_interval_before"] is None
    assert report["periods"] == []


def test_surplus(capsys, tmp_path):
    (tmp_path / "prices.csv").write_text(PRICES)
    config = {"lambda": 0.1, "capacity": 10, "rate_in": 1, "rate_out": 1, "price_csv": "prices.csv", "demand": 100}
    path = tmp_path / "surplus.json"
    path.write_text(json.dumps(config))
    status, report = _json_report(capsys, ["surplus", "--config", str(path)])
    assert status == 0
    # inelastic demand: buying at slope 1 and selling at slope 3 lowers prices on balance
    assert np.isclose(report["summary"]["surplus_delta_exact"], 100 * (-1 - 1 + 3 + 3))
    assert np.isclose(report["summary"]["surplus_delta_approx"], report["summary"]["surplus_delta_exact"])


def test_clearing2p(capsys):
    status, report = _json_report(capsys, ["clearing2p", "--r1", "-10", "1", "--r2", "-20", "1"])
    assert status == 0
    row = report["periods"][0]
    assert row["q"] == pytest.approx(10 / 3)
    assert row["p1"] == pytest.approx(40 / 3)
    assert row["p2"] == pytest.approx(50 / 3)


def test_synth(tmp_path):
    path = tmp_path / "synth.csv"
    assert cli.main(["--out", str(path), "--seed", "4", "synth", "--days", "1"]) == 0
    assert len(load_price_csv(str(path))) == 48


def test_invalid_config_exits_nonzero(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"lambda": 0.1, "capacity": 10, "colour": "red"}))
    assert cli.main(["optimize", "--config", str(path)]) == 2


def test_missing_config_exits_nonzero(tmp_path):
    assert cli.main(["optimize", "--config", str(tmp_path / "missing.json")]) == 2


def test_batch(tmp_path, config_path):
    out = tmp_path / "reports"
    assert cli.main(["--out", str(out), "optimize", "--batch", str(tmp_path)]) == 0
    assert (out / "scenario.json").exists()


def test_optimize_cycles_daily_on_synthetic_prices(capsys, tmp_path):
    days = 5
    config = {
        "lambda": 0.001,
        "efficiency": 0.75,
        "capacity": 4,
        "rate_in": 1,
        "rate_out": 1,
        "synth": {"seed": 0, "days": days},
    }
    path = tmp_path / "synth.json"
    path.write_text(json.dumps(config))
    status, report = _json_report(capsys, ["optimize", "--config", str(path)])
    assert status == 0
    levels = np.array([row["level_1"] for row in report["periods"]]).reshape(days, 48)
    cycles = np.sum((levels.max(axis=1) >= 4 - 1e-6) & (levels.min(axis=1) <= 1e-6))
    assert cycles >= 0.9 * days


def test_surplus_falls_with_explicit_price_slopes(capsys, tmp_path):
    prices = "timestamp,price_gbp_per_mwh\n2014-01-01T00:00,10\n2014-01-01T00:30,20\n"
    (tmp_path / "prices.csv").write_text(prices)
    config = {
        "pslope": [2, 1],
        "capacity": 10,
        "rate_in": 3,
        "rate_out": 3,
        "price_csv": "prices.csv",
        "demand": 100,
    }
    path = tmp_path / "steep_night.json"
    path.write_text(json.dumps(config))
    status, report = _json_report(capsys, ["surplus", "--config", str(path)])
    assert status == 0
    assert report["scenario"]["pslope"] == [2, 1]
    assert report["scenario"]["lambda"] is None
    # 5/3 moved from night to day raises the night price by twice what it lowers the day price
    assert [row["flow_1"] for row in report["periods"]] == pytest.approx([5 / 3, -5 / 3])
    assert np.isclose(report["summary"]["surplus_delta_approx"], -500 / 3)
    assert np.isclose(report["summary"]["surplus_delta_exact"], -500 / 3)
