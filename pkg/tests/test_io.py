import math
from dataclasses import replace

import numpy as np
import pytest

from betaconst.errors import ConfigError, InputError, ParseError
from betaconst.inference import TestConfig
from betaconst.io import (
    PriceTable,
    WindowPlan,
    grid_to_table,
    read_csv,
    trading_dates,
    window_report,
    write_csv,
)
from betaconst.mc import McDesign, run_mc
from betaconst.sim import CIRBeta, SimConfig, simulate
from betaconst.stats import ObservationGrid

PRICES = """date,seq,px,py
2020-01-02,0,100.0,50.0
2020-01-02,1,100.5,50.2
2020-01-02,2,100.25,50.1
2020-01-02,3,101.0,50.4
2020-01-03,0,101.5,50.3
2020-01-03,1,101.0,50.5
2020-01-03,2,102.0,50.0
2020-01-03,3,102.5,50.25
"""


def _write(tmp_path, text, name="in.csv"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_read_prices(tmp_path):
    t = read_csv(_write(tmp_path, PRICES))
    assert t.days == 2 and t.n_per_day == 3 and t.mode == "prices"
    dx, dy = t.increments()
    assert dx.shape == (2, 3)
    assert dx[0, 0] == pytest.approx(math.log(100.5 / 100.0))
    # overnight move not part of any increment
    g = t.to_grid()
    assert g.n_total == 6
    assert np.sum(dx) == pytest.approx(math.log(101.0 / 100.0) + math.log(102.5 / 101.5))


def test_round_trip_is_byte_identical(tmp_path):
    src = _write(tmp_path, "# source=unit\n" + PRICES)
    t = read_csv(src)
    assert t.meta == {"source": "unit"}
    out = tmp_path / "out.csv"
    write_csv(t, out)
    # the input above is already canonical except for the meta spacing
    once = out.read_bytes()
    write_csv(read_csv(out), tmp_path / "again.csv")
    assert (tmp_path / "again.csv").read_bytes() == once
    assert once.decode().splitlines()[1:] == PRICES.splitlines()


@pytest.mark.parametrize(
    "edit, needle",
    [
        (lambda s: s.replace("2020-01-03,2,102.0,50.0\n", ""), "2020-01-03"),
        (lambda s: s.replace("2020-01-02,2,100.25,50.1\n", ""), "2020-01-02"),
        (lambda s: s.replace("100.5,50.2", "-1,50.2"), ":3:"),
        (lambda s: s.replace("2020-01-03", "2020-01-01"), "not after"),
        (lambda s: s.replace("date,seq,px,py", "date,seq,a,b"), "header"),
        (lambda s: s.replace("101.0,50.5", "101.0,"), ":7:"),
        (lambda s: s.replace("101.0,50.5", "abc,50.5"), ":7:"),
    ],
)
def test_parse_errors(tmp_path, edit, needle):
    with pytest.raises(ParseError, match=needle):
        read_csv(_write(tmp_path, edit(PRICES)))


def test_parse_error_is_input_error(tmp_path):
    with pytest.raises(InputError):
        read_csv(_write(tmp_path, "date,seq,rx,ry\n"))


def test_returns_mode(tmp_path):
    text = "date,seq,rx,ry\n2020-01-02,1,0.1,0.2\n2020-01-02,2,-0.1,0.0\n"
    t = read_csv(_write(tmp_path, text))
    assert t.mode == "returns" and t.n_per_day == 2
    out = tmp_path / "o.csv"
    write_csv(t, out)
    assert out.read_text() == text


def test_sim_export_reingest(tmp_path):
    path = simulate(SimConfig(days=7, seed=3))
    write_csv(grid_to_table(path.grid, meta={"seed": "3"}), tmp_path / "sim.csv")
    back = read_csv(tmp_path / "sim.csv")
    assert back.meta["seed"] == "3"
    dx0, dy0 = path.grid.increments()
    dx1, dy1 = back.to_grid().increments()
    np.testing.assert_allclose(dx1, dx0, rtol=1e-12, atol=0)
    np.testing.assert_allclose(dy1, dy0, rtol=1e-12, atol=0)


def test_trading_dates_skip_weekends():
    d = trading_dates(6, "2021-01-01")  # a Friday
    assert d == ("2021-01-01", "2021-01-04", "2021-01-05", "2021-01-06", "2021-01-07", "2021-01-08")


def test_window_partition():
    dates = trading_dates(73)
    ranges, dropped = WindowPlan("weekly").windows(dates)
    assert len(ranges) == 14 and dropped == 3
    flat = [i for lo, hi in ranges for i in range(lo, hi)]
    assert flat == list(range(70))
    ranges, dropped = WindowPlan("fixed", days=10).windows(dates)
    assert ranges[-1] == (60, 70) and dropped == 3


def test_calendar_windows():
    dates = trading_dates(70, "2021-01-04")
    ranges, dropped = WindowPlan("monthly", calendar=True).windows(dates)
    assert dropped == 0
    assert [dates[lo][:7] for lo, _ in ranges] == ["2021-01", "2021-02", "2021-03", "2021-04"]
    assert ranges[0] == (0, 20)  # January 2021 has 20 weekdays from the 4th
    q, _ = WindowPlan("quarterly", calendar=True).windows(dates)
    assert len(q) == 2


def test_plan_validation():
    with pytest.raises(ConfigError):
        WindowPlan("fixed")
    with pytest.raises(ConfigError):
        WindowPlan("weekly", calendar=True)
    with pytest.raises(ConfigError):
        WindowPlan("daily")


def test_exact_linear_relation_gives_beta_two():
    rng = np.random.default_rng(0)
    dx = rng.standard_normal((20, 38)) * 0.01
    t = PriceTable(trading_dates(20), "returns", dx, 2 * dx)
    rep = window_report(t, WindowPlan("weekly"))
    assert len(rep.rows) == 4
    for r in rep.rows:
        assert r.beta == pytest.approx(2.0, rel=1e-12)


def test_degenerate_window_flagged(tmp_path):
    dx, e = np.random.default_rng(1).standard_normal((2, 10, 38)) * 0.01
    dx[5:] = 0.0
    t = PriceTable(trading_dates(10), "returns", dx, dx + e)
    rep = window_report(t, WindowPlan("weekly"))
    assert rep.rows[0].valid and not rep.rows[1].valid
    assert math.isnan(rep.rows[1].statistic)
    paths = rep.write(tmp_path)
    lines = paths["windows"].read_text().splitlines()
    assert lines[2].endswith(",0,0") and "nan" in lines[2]


def test_report_files(tmp_path):
    p = simulate(SimConfig(days=15, seed=4))
    rep = window_report(grid_to_table(p.grid), WindowPlan("weekly"))
    paths = rep.write(tmp_path)
    first = {k: v.read_bytes() for k, v in paths.items()}
    rep2 = window_report(grid_to_table(p.grid), WindowPlan("weekly"))
    rep2.write(tmp_path)
    assert {k: v.read_bytes() for k, v in paths.items()} == first
    header = paths["windows"].read_text().splitlines()[0]
    assert header == ("window,start,end,days,beta,ci_lo,ci_hi,statistic,p_value,"
                      "reject_10,reject_5,reject_1,valid,skipped")
    summary = paths["summary"].read_text().splitlines()
    assert summary[0] == "interval,level,windows,valid,rejected,percent"
    assert len(summary) == 4
    betas = paths["betas"].read_text().splitlines()
    assert betas[0] == "date,beta,ci_lo,ci_hi" and len(betas) == 4
    b, lo, hi = (float(v) for v in betas[1].split(",")[1:])
    assert lo < b < hi


def test_weekly_null_rate_matches_mc():
    # 104 weekly windows of constant-beta data against the harness size at T=5
    p = simulate(SimConfig(days=520, seed=2024))
    rep = window_report(grid_to_table(p.grid), WindowPlan("weekly"))
    assert len(rep.rows) == 104
    mc = run_mc(McDesign(replications=500, window_lengths=(5,)))
    size = mc.rate(5, 0.05)
    frac = rep.rejection_fraction(0.05)
    assert abs(frac - size) <= 3 * math.sqrt(size * (1 - size) / 104)


def test_time_varying_beta_rejected_more_over_longer_windows():
    p = simulate(SimConfig(days=66 * 8, beta=CIRBeta(), seed=77))
    t = grid_to_table(p.grid)
    weekly = window_report(t, WindowPlan("weekly")).rejection_fraction(0.05)
    quarterly = window_report(t, WindowPlan("quarterly")).rejection_fraction(0.05)
    assert quarterly > weekly


def test_no_full_window():
    t = PriceTable(trading_dates(3), "returns", np.ones((3, 4)), np.ones((3, 4)))
    with pytest.raises(InputError):
        window_report(t, WindowPlan("weekly"))
