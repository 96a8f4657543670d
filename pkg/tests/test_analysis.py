import math
from decimal import Decimal
from types import SimpleNamespace

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from helpers import make_snapshot
from marketsim.accounts import AgentAccount
from marketsim.agents import LinearAgent, LinearCoefficients, RuleAgent, StrategyParams
from marketsim.agents.linear import linear_signal
from marketsim.analysis import (
    RankError,
    RoundSummary,
    behavior_report,
    consistency_metrics,
    cosine,
    bag_of_words,
    decision_coherence,
    decision_sweep,
    efficiency,
    estimate_coefficients,
    parse_grid,
    price_impact,
    state_matrix,
    strategy_consistency,
    summarize,
    variance_check,
    wealth_report,
)
from marketsim.asset import BernoulliDividend, MarketParams
from marketsim.simulator import AgentSetup, Scenario, run

D = Decimal
V = D("28.00")


def rows(prices, volumes, trades, fundamental=V):
    return [RoundSummary(i, D(p), fundamental, v, n)
            for i, (p, v, n) in enumerate(zip(prices, volumes, trades))]


def test_efficiency_constant_price():
    rep = efficiency(rows(["28", "28", "28"], [0, 5, 5], [0, 1, 1]))
    assert rep.mean_deviation == 0 and rep.volatility == 0 and rep.ratio_std == 0


def test_efficiency_two_points():
    rep = efficiency(rows(["56", "28"], [0, 10], [0, 1]))
    assert (rep.ratio_start, rep.ratio_end) == (2.0, 1.0)


def test_efficiency_hand_fixture():
    rep = efficiency(rows(["56", "42", "28"], [0, 100, 300], [0, 1, 2]))
    assert rep.ratios == (2.0, 1.5, 1.0)
    assert rep.ratio_change == -1.0
    assert rep.mean_deviation == pytest.approx(0.5, abs=1e-12)
    assert (rep.ratio_min, rep.ratio_max) == (1.0, 2.0)
    assert rep.ratio_std == pytest.approx(math.sqrt(1 / 6), abs=1e-12)
    assert rep.volatility == pytest.approx(1 / 24, abs=1e-12)
    assert rep.mean_volume == 200.0 and rep.trades_per_round == 1.5
    assert rep.avg_trade_size == pytest.approx(400 / 3)
    assert (rep.total_volume, rep.total_trades) == (400, 3)


def test_efficiency_flags_missing_fundamental():
    rep = efficiency(rows(["30", "31"], [0, 1], [0, 1], fundamental=None))
    assert rep.flags == ("fundamental_missing",) and rep.ratio_start is None
    assert rep.volatility == 0.0


def test_efficiency_needs_two_rounds():
    with pytest.raises(ValueError):
        efficiency(rows(["30"], [0], [0]))


def value_observations(n=40):
    rng = np.random.default_rng(5)
    for price in rng.uniform(10, 60, n).round(2):
        yield make_snapshot(f"{price:.2f}"), AgentAccount(1, D("1000000"), 1000), 0.0


def test_ols_recovers_planted_value_coefficient_exactly():
    coeffs = LinearCoefficients({"value_gap": 100.0})
    obs = list(value_observations())
    names, X = state_matrix("value", obs)
    q = [linear_signal("value", coeffs, s, a, n) for s, a, n in obs]
    fit = estimate_coefficients(X, q, names)
    assert fit.as_dict()["value_gap"] == pytest.approx(100.0, abs=1e-8)
    assert fit.r_squared == pytest.approx(1.0)


def test_ols_noisy_recovery_and_orthogonality():
    rng = np.random.default_rng(2024)
    X = rng.normal(size=(500, 2))
    q = X @ np.array([2.0, -3.0]) + rng.normal(0, 0.1, 500)
    fit = estimate_coefficients(X, q, ["a", "b"])
    assert np.all(np.abs(fit.coefficients - [2.0, -3.0]) < 0.05)
    assert np.max(np.abs(X.T @ fit.residuals)) < 1e-6
    assert fit.residual_variance == pytest.approx(0.01, rel=0.2)


def test_ols_zero_target():
    X = np.random.default_rng(1).normal(size=(10, 3))
    fit = estimate_coefficients(X, np.zeros(10))
    assert np.allclose(fit.coefficients, 0) and fit.r_squared is None


def test_ols_rank_error_names_columns():
    rng = np.random.default_rng(3)
    a = rng.normal(size=20)
    X = np.column_stack([a, rng.normal(size=20), 2 * a])
    with pytest.raises(RankError) as exc:
        estimate_coefficients(X, rng.normal(size=20), ["a", "b", "c"])
    assert len(exc.value.columns) == 1 and exc.value.columns[0] in ("a", "c")


def test_ols_rejects_underdetermined():
    with pytest.raises(ValueError):
        estimate_coefficients(np.ones((1, 2)), [1.0])


def test_sc_identical_and_disjoint():
    assert strategy_consistency(["price is above value"] * 4) == pytest.approx(1.0)
    assert cosine(bag_of_words("buy undervalued"), bag_of_words("sell momentum")) == 0.0
    assert strategy_consistency(["", ""]) == 1.0
    assert strategy_consistency(["one"]) is None


@given(st.lists(st.text(max_size=40), min_size=2, max_size=6))
def test_sc_bounded(texts):
    assert 0.0 <= strategy_consistency(texts) <= 1.0


def test_dc_alternating_and_degenerate():
    assert decision_coherence([[1, -1, 1, -1, 1, -1]]) == pytest.approx(-1.0)
    assert decision_coherence([[1, 1, 1, 1]]) is None
    assert decision_coherence([[1]]) is None
    # pairs never straddle two agents; concatenating would give 0.5
    assert decision_coherence([[1, 1], [-1, -1]]) == pytest.approx(1.0)


@given(st.lists(st.lists(st.sampled_from([-1, 0, 1]), max_size=8), max_size=4))
def test_dc_bounded(seqs):
    dc = decision_coherence(seqs)
    assert dc is None or -1.0 <= dc <= 1.0


def test_parse_grid_inclusive():
    grid = parse_grid("0.1:3.5:0.1")
    assert len(grid) == 35 and grid[0] == D("0.1") and grid[-1] == D("3.5")
    with pytest.raises(ValueError):
        parse_grid("1:0.5:0.1")
    with pytest.raises(ValueError):
        parse_grid("a:b")


def test_sweep_value_step_function():
    res = decision_sweep([RuleAgent(1, "value", StrategyParams(alpha=0.1))],
                         [D("0.5"), D("1.0"), D("1.5")])
    assert res.modal("value") == [(D("0.5"), "Buy"), (D("1.0"), "Hold"), (D("1.5"), "Sell")]
    assert all(max(c.distribution.values()) == 1.0 for c in res.cells)


def test_sweep_optimistic_buys_everywhere():
    res = decision_sweep([RuleAgent(1, "optimistic")], parse_grid("0.1:3.5:0.1"))
    assert {a for _, a in res.modal("optimistic")} == {"Buy"}


def test_sweep_trials_do_not_change_deterministic_cells():
    agents = [RuleAgent(1, "value"), RuleAgent(2, "market_maker")]
    grid = [D("0.8"), D("1.2")]
    one, ten = decision_sweep(agents, grid, 1), decision_sweep(agents, grid, 10)
    assert [c.distribution for c in one.cells] == [c.distribution for c in ten.cells]


def test_sweep_rows_sum_to_one_for_stochastic_agent():
    agent = LinearAgent(1, "value", LinearCoefficients({"value_gap": 3000.0}, noise_sd=300.0,
                                                       gamma=(0.0, 0.0, 0.0)))
    res = decision_sweep([agent], parse_grid("0.5:1.5:0.25"), trials=20, seed=9)
    table = res.rows()
    assert len(table) == 5 * 3
    for cell in res.cells:
        assert sum(cell.distribution.values()) == pytest.approx(1.0)
        assert 0 <= cell.market_share <= 1


def test_sweep_rejects_nonpositive_grid():
    with pytest.raises(ValueError):
        decision_sweep([RuleAgent(1, "value")], [D("0")])


INFINITE = MarketParams(D("0.05"), D("1.40"))


def test_wealth_flat_without_trades_or_income():
    market = MarketParams(D("0.0001"), D("0"))
    sc = Scenario([AgentSetup(RuleAgent(1, "hold"), D("0"), 100)], D("28"), 3, market,
                  BernoulliDividend(D("0"), D("0")))
    report = wealth_report(run(sc).records)
    assert {p.total_wealth for p in report} == {D("2800.00")}
    assert {p.total_growth_pct for p in report} == {0.0}


def test_wealth_rises_by_dividend_stream_only():
    sc = Scenario([AgentSetup(RuleAgent(1, "hold"), D("0"), 100)], D("28"), 4, INFINITE,
                  BernoulliDividend(D("1.40"), D("1.00")), seed=4)
    res = run(sc)
    report = wealth_report(res.records)
    stream = sum(r.dividend_paid * 100 for r in res.records[1:])
    assert report[-1].total_wealth - report[0].total_wealth == stream
    assert {p.trading_wealth for p in report} == {D("2800.00")}


def account(agent_id, kind, main, div, shares, price):
    return SimpleNamespace(agent_id=agent_id, agent_type=kind, main_cash=D(main),
                           dividend_cash=D(div), shares=shares,
                           wealth=D(main) + D(div) + shares * D(price))


def test_wealth_hand_fixture():
    recs = [
        SimpleNamespace(round=0, clearing_price=D("10"), accounts=[
            account(1, "value", "100", "0", 10, "10"), account(2, "value", "50", "0", 0, "10")]),
        SimpleNamespace(round=1, clearing_price=D("12"), accounts=[
            account(1, "value", "90", "5", 11, "12"), account(2, "value", "60", "1", -1 + 1, "12")]),
    ]
    last = wealth_report(recs)[-1]
    # 90 + 5 + 132 + 60 + 1 = 288 against 250 at the start
    assert last.total_wealth == D("288") and last.trading_wealth == D("282")
    assert last.total_growth_pct == pytest.approx(15.2)
    assert last.trading_growth_pct == pytest.approx(12.8)


def small_run():
    agents = [AgentSetup(RuleAgent(i, kind), D("200000"), 5000)
              for i, kind in enumerate(["value", "value", "market_maker", "momentum"])]
    return run(Scenario(agents, D("35.00"), 12, INFINITE,
                        BernoulliDividend(D("1.40"), D("1.00")), seed=1))


def test_behavior_report_ratios_in_unit_interval():
    rep = behavior_report(small_run().records)
    value = rep["value"]
    assert value.sell_ratio > value.buy_ratio
    assert value.keyword_rates["value"] > 0
    for row in rep.values():
        for x in (row.buy_ratio, row.sell_ratio, row.hold_ratio, row.market_order_share):
            assert x is None or 0.0 <= x <= 1.0
        assert row.buy_ratio + row.sell_ratio + row.hold_ratio == pytest.approx(1.0)


def test_variance_check_and_price_impact_run():
    res = small_run()
    check = variance_check(res.records)
    assert check.pooled >= 0 and set(check.per_type) == {"value", "market_maker", "momentum"}
    impact = price_impact(res.records)
    assert set(impact) == {"value", "market_maker", "momentum"}
    assert all(r.observations == 12 for r in impact.values())


def test_consistency_metrics_from_run():
    rows_ = consistency_metrics(small_run().decisions)
    for row in rows_.values():
        assert 0.0 <= row.sc <= 1.0
        assert row.dc is None or -1.0 <= row.dc <= 1.0


def test_efficiency_from_records_matches_summary():
    res = small_run()
    assert efficiency(res.records) == efficiency(summarize(res.records))
