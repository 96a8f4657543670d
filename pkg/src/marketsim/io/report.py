"""Human-readable run summaries."""

from __future__ import annotations

from typing import Optional

from ..analysis import (
    EfficiencyReport,
    behavior_report,
    consistency_metrics,
    price_impact,
    variance_check,
    wealth_report,
)


def _x(v: Optional[float], fmt: str = ".4f") -> str:
    return "NA" if v is None else format(v, fmt)


def efficiency_lines(rep: EfficiencyReport) -> list[str]:
    lines = ["Market efficiency", f"  rounds: {rep.rounds}"]
    if rep.ratio_start is None:
        lines.append("  P/F ratio: unavailable (" + ", ".join(rep.flags) + ")")
    else:
        lines += [
            f"  P/F start {_x(rep.ratio_start)}  end {_x(rep.ratio_end)}  "
            f"change {_x(rep.ratio_change, '+.4f')}",
            f"  mean |P/F - 1| {_x(rep.mean_deviation)}  min {_x(rep.ratio_min)}  "
            f"max {_x(rep.ratio_max)}  std {_x(rep.ratio_std)}",
        ]
    lines += [
        f"  return volatility {_x(rep.volatility)}",
        f"  volume total {rep.total_volume}  mean/round {_x(rep.mean_volume, '.1f')}  "
        f"trades {rep.total_trades}  trades/round {_x(rep.trades_per_round, '.2f')}  "
        f"avg size {_x(rep.avg_trade_size, '.1f')}",
    ]
    return lines


def wealth_lines(points) -> list[str]:
    last: dict = {}
    for p in points:
        last[p.agent_type] = p
    lines = ["Wealth by agent type (last row)"]
    for t, p in sorted(last.items()):
        lines.append(f"  {t:<14} total {p.total_wealth:>16}  growth {_x(p.total_growth_pct, '+.2f')}%"
                     f"  trading-only growth {_x(p.trading_growth_pct, '+.2f')}%")
    return lines


def consistency_lines(rows) -> list[str]:
    lines = ["Strategy consistency (SC) and decision coherence (DC)"]
    for t, r in rows.items():
        lines.append(f"  {t:<14} decisions {r.decisions:>4}  SC {_x(r.sc, '.3f')}  "
                     f"DC {_x(r.dc, '.3f')}")
    return lines


def run_summary(result, efficiency_report: EfficiencyReport) -> str:
    records = result.records
    lines = [f"Scenario {result.scenario.name} (seed {result.scenario.seed})", ""]
    lines += efficiency_lines(efficiency_report) + [""]
    lines += wealth_lines(wealth_report(records, result.final_accounts)) + [""]
    lines.append("Behavior by agent type")
    for t, b in behavior_report(records).items():
        lines.append(f"  {t:<14} buy {b.buy_ratio:.3f}  sell {b.sell_ratio:.3f}  "
                     f"hold {b.hold_ratio:.3f}  market share {_x(b.market_order_share, '.3f')}  "
                     f"trades/round {b.trades_per_round:.2f}")
    lines.append("")
    lines += consistency_lines(consistency_metrics(result.decisions)) + [""]
    check = variance_check(records)
    lines.append(f"Decision variance: within-type {check.within_type:.1f}  "
                 f"pooled {check.pooled:.1f}  within < pooled: {check.holds}")
    lines.append("")
    lines.append("Price impact (price change on net shares bought, descriptive)")
    for t, row in price_impact(records).items():
        lines.append(f"  {t:<14} slope {_x(row.slope, '.3e')}  R2 {_x(row.r_squared, '.3f')}")
    anomalies = [a for r in records for a in r.anomalies]
    lines += ["", f"Anomalies: {len(anomalies)}"]
    lines += [f"  {a}" for a in anomalies[:20]]
    return "\n".join(lines) + "\n"
