"""Per-type wealth, behavior, decision variance and price impact reports."""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from decimal import Decimal
from typing import Mapping, Optional, Sequence

import numpy as np

from ..orderbook import OrderKind
from .consistency import bag_of_words, decision_text
from .ols import RankError, estimate_coefficients

DEFAULT_KEYWORDS: dict[str, tuple[str, ...]] = {
    "value": ("fundamental", "overvalued", "undervalued", "ratio"),
    "contrarian": ("overreaction", "excessive", "reversal", "sentiment"),
    "optimistic": ("upside", "growth", "convergence", "undervalued"),
}


@dataclass(frozen=True)
class WealthPoint:
    agent_type: str
    round: int
    total_wealth: Decimal
    trading_wealth: Decimal
    total_growth_pct: Optional[float]
    trading_growth_pct: Optional[float]


def _growth(now: Decimal, start: Decimal) -> Optional[float]:
    return None if start == 0 else float((now - start) / start * 100)


def wealth_report(records, final_accounts=None) -> list[WealthPoint]:
    """Summed wealth per agent type per round, marked at the round's clearing price.

    Total wealth includes the dividend account; trading wealth leaves it out.
    ``final_accounts`` adds a closing row after redemption.
    """
    rows = []
    start: dict[str, tuple[Decimal, Decimal]] = {}
    snapshots = [(r.round, r.clearing_price, r.accounts) for r in records]
    if final_accounts is not None:
        last = records[-1]
        snapshots.append((last.round + 1, None, final_accounts))
    for round_no, price, accounts in snapshots:
        total: dict[str, Decimal] = defaultdict(Decimal)
        trading: dict[str, Decimal] = defaultdict(Decimal)
        for a in accounts:
            total[a.agent_type] += a.wealth
            trading[a.agent_type] += a.wealth - a.dividend_cash
        for t in sorted(total):
            start.setdefault(t, (total[t], trading[t]))
            rows.append(WealthPoint(t, round_no, total[t], trading[t],
                                    _growth(total[t], start[t][0]),
                                    _growth(trading[t], start[t][1])))
    return rows


@dataclass(frozen=True)
class BehaviorRow:
    agent_type: str
    decisions: int
    buy_ratio: float
    sell_ratio: float
    hold_ratio: float
    market_order_share: Optional[float]
    trades_per_round: float
    keyword_rates: dict[str, float]
    mean_ratio_at_buys: Optional[float]
    mean_ratio_at_sells: Optional[float]


def _decision_ratio(records, index: dict[int, int], round_no: int) -> Optional[float]:
    """P/V seen by agents deciding in ``round_no``: last price over this round's value."""
    prev = records[index[round_no - 1]] if round_no - 1 in index else None
    cur = records[index[round_no]]
    if prev is None or cur.fundamental_value in (None, 0):
        return None
    return float(prev.clearing_price / cur.fundamental_value)


def behavior_report(records, keywords: Mapping[str, Sequence[str]] = DEFAULT_KEYWORDS
                    ) -> dict[str, BehaviorRow]:
    index = {r.round: i for i, r in enumerate(records)}
    types = {a.agent_id: a.agent_type for a in records[0].accounts}
    trading_rounds = max(1, sum(1 for r in records if r.round > 0))
    by_type = defaultdict(list)
    for r in records:
        for e in r.decisions:
            by_type[e.agent_type].append(e)
    trades = defaultdict(int)
    for r in records:
        for t in r.trades:
            trades[types[t.buyer_agent]] += 1
            trades[types[t.seller_agent]] += 1
    out = {}
    for t in sorted(by_type):
        entries = by_type[t]
        n = len(entries)
        actions = [e.decision.action for e in entries]
        orders = [o for e in entries for o in e.decision.orders]
        rates = {}
        for name, words in keywords.items():
            hits = 0
            for e in entries:
                bag = bag_of_words(decision_text(e.decision), stopwords=())
                hits += sum(bag[w.lower()] for w in words)
            rates[name] = hits / n
        ratios = {"Buy": [], "Sell": []}
        for e, a in zip(entries, actions):
            if a in ratios:
                ratio = _decision_ratio(records, index, e.round)
                if ratio is not None:
                    ratios[a].append(ratio)
        out[t] = BehaviorRow(
            agent_type=t,
            decisions=n,
            buy_ratio=actions.count("Buy") / n,
            sell_ratio=actions.count("Sell") / n,
            hold_ratio=actions.count("Hold") / n,
            market_order_share=(sum(o.kind is OrderKind.MARKET for o in orders) / len(orders)
                                if orders else None),
            trades_per_round=trades[t] / trading_rounds,
            keyword_rates=rates,
            mean_ratio_at_buys=float(np.mean(ratios["Buy"])) if ratios["Buy"] else None,
            mean_ratio_at_sells=float(np.mean(ratios["Sell"])) if ratios["Sell"] else None,
        )
    return out


@dataclass(frozen=True)
class VarianceCheck:
    within_type: float
    pooled: float
    per_type: dict[str, float]

    @property
    def holds(self) -> bool:
        return self.within_type < self.pooled


def variance_check(records) -> VarianceCheck:
    """Within-type against pooled variance of signed requested quantities.

    Within-type variance is the decision-weighted mean of each type's
    population variance.
    """
    by_type = defaultdict(list)
    for r in records:
        for e in r.decisions:
            by_type[e.agent_type].append(e.decision.signed_quantity)
    pooled_values = [q for qs in by_type.values() for q in qs]
    if not pooled_values:
        raise ValueError("no decisions recorded")
    per_type = {t: float(np.var(qs)) for t, qs in sorted(by_type.items())}
    within = sum(per_type[t] * len(qs) for t, qs in by_type.items()) / len(pooled_values)
    return VarianceCheck(float(within), float(np.var(pooled_values)), per_type)


@dataclass(frozen=True)
class ImpactRow:
    agent_type: str
    intercept: Optional[float]
    slope: Optional[float]
    r_squared: Optional[float]
    observations: int


def price_impact(records) -> dict[str, ImpactRow]:
    """Per-type regression of the round's price change on that type's net bought shares.

    Descriptive only. Rows are None-filled when the regressor has no variation.
    """
    types = sorted({a.agent_type for a in records[0].accounts})
    kind = {a.agent_id: a.agent_type for a in records[0].accounts}
    dp, flows = [], {t: [] for t in types}
    for prev, cur in zip(records, records[1:]):
        dp.append(float(cur.clearing_price - prev.clearing_price))
        net = dict.fromkeys(types, 0)
        for tr in cur.trades:
            net[kind[tr.buyer_agent]] += tr.quantity
            net[kind[tr.seller_agent]] -= tr.quantity
        for t in types:
            flows[t].append(net[t])
    out = {}
    for t in types:
        X = np.column_stack([np.ones(len(dp)), flows[t]])
        try:
            fit = estimate_coefficients(X, dp, ["intercept", "net_volume"])
        except (RankError, ValueError):
            out[t] = ImpactRow(t, None, None, None, len(dp))
            continue
        out[t] = ImpactRow(t, float(fit.coefficients[0]), float(fit.coefficients[1]),
                           fit.r_squared, len(dp))
    return out
