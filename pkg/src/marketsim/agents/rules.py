"""Threshold strategies for the rule-based agent types.

Each rule maps a start-of-round snapshot to a direction, an order kind and a
reference price. Quantities come from :func:`size_rule`. Limit orders are
placed at the reference price; trading decisions replace the agent's resting
orders and holds cancel them.
"""

from __future__ import annotations

import math
from decimal import Decimal
from typing import Callable, Optional

from ..accounts import AgentAccount
from ..money import money, money_down, money_up, round_half_up, to_decimal
from ..orderbook import OrderKind, Side
from .types import MarketSnapshot, OrderRequest, ReplaceDecision, StrategyParams, TradeDecision

RULE_TYPES = (
    "value", "momentum", "market_maker", "contrarian", "news", "optimistic",
    "pessimistic", "speculator", "hold", "always_buy", "always_sell",
)

FUNDAMENTAL_UNAVAILABLE = "fundamental unavailable"


def size_rule(q_star: float, account: AgentAccount, max_fraction: float,
              side: Side, price: Decimal) -> int:
    """Clamp a desired size to ``[0, floor(max_fraction * capacity)]``.

    Capacity is available shares for sells and affordable shares at ``price``
    for buys.
    """
    if not 0 < max_fraction <= 1:
        raise ValueError("max_fraction must lie in (0, 1]")
    if side is Side.SELL:
        capacity = Decimal(account.available_shares)
    else:
        if price <= 0 or account.available_cash <= 0:
            return 0
        capacity = account.available_cash / price
    q_max = int(to_decimal(max_fraction) * capacity)
    if q_star <= 0:
        return 0
    return max(0, min(round_half_up(q_star), q_max))


def _fmt(x) -> str:
    return f"{float(x):.2f}"


class _Builder:
    """Accumulates orders for one decision."""

    def __init__(self, snapshot: MarketSnapshot, account: AgentAccount, params: StrategyParams):
        self.snapshot = snapshot
        self.account = account
        self.params = params
        self.orders: list[OrderRequest] = []

    def add(self, side: Side, kind: OrderKind, price: Decimal, q_star: Optional[float] = None) -> int:
        price = money(price)
        if price <= 0:
            return 0
        size_price = price
        if kind is OrderKind.MARKET and side is Side.BUY:
            ask = self.snapshot.depth.best_ask
            size_price = ask if ask is not None else self.snapshot.last_price
        q = self.params.order_size if q_star is None else q_star
        qty = size_rule(q, self.account, self.params.max_fraction, side, size_price)
        if qty <= 0:
            return 0
        if kind is OrderKind.MARKET:
            self.orders.append(OrderRequest(side, qty, OrderKind.MARKET))
        else:
            self.orders.append(OrderRequest(side, qty, OrderKind.LIMIT, price))
        return qty

    def decision(self, reasoning: str, valuation=None, target=None,
                 valuation_reasoning: str = "", target_reasoning: str = "") -> TradeDecision:
        valuation = None if valuation is None else money(valuation)
        target = None if target is None else money(target)
        if not self.orders:
            return TradeDecision(valuation_reasoning, valuation, target_reasoning, target, (),
                                 ReplaceDecision.CANCEL, reasoning)
        return TradeDecision(valuation_reasoning, valuation, target_reasoning, target,
                             tuple(self.orders), ReplaceDecision.REPLACE, reasoning)


def _directional(b: _Builder, direction: int, market: bool, limit_price: Decimal) -> None:
    if direction == 0:
        return
    side = Side.BUY if direction > 0 else Side.SELL
    b.add(side, OrderKind.MARKET if market else OrderKind.LIMIT, limit_price)


def _value(b: _Builder, s: MarketSnapshot, p: StrategyParams, news: float) -> TradeDecision:
    if s.fundamental_estimate is None:
        return TradeDecision.hold(FUNDAMENTAL_UNAVAILABLE)
    v = s.fundamental_estimate
    ratio = s.last_price / v
    alpha, beta = to_decimal(p.alpha), to_decimal(p.beta)
    direction = 1 if ratio < 1 - alpha else -1 if ratio > 1 + alpha else 0
    market = abs(ratio - 1) > beta
    _directional(b, direction, market, v)
    word = {1: "undervalued", -1: "overvalued", 0: "fairly valued"}[direction]
    return b.decision(
        f"price {_fmt(s.last_price)} against fundamental {_fmt(v)} gives ratio "
        f"{float(ratio):.2f}; the asset looks {word}",
        valuation=v, target=v,
        valuation_reasoning="fundamental value taken from the public estimate",
        target_reasoning="price expected to revert toward fundamental value")


def _momentum(b: _Builder, s: MarketSnapshot, p: StrategyParams, news: float) -> TradeDecision:
    dp, dvol = s.price_change, s.volume_change
    if dp > p.gamma and dvol > 0:
        direction = 1
    elif dp < -p.gamma or dvol < 0:
        direction = -1
    else:
        direction = 0
    threshold = p.momentum_sigma if p.momentum_sigma is not None else s.volatility(p.vol_window)
    _directional(b, direction, abs(dp) > threshold, s.last_price)
    trend = "up" if direction > 0 else "down" if direction < 0 else "flat"
    return b.decision(
        f"price change {dp:+.2f} with volume change {dvol:+d}; trend is {trend}",
        target=s.last_price + to_decimal(dp),
        target_reasoning="trend assumed to continue for one more round")


def _contrarian(b: _Builder, s: MarketSnapshot, p: StrategyParams, news: float) -> TradeDecision:
    avg = s.moving_average(p.window)
    z = (float(s.last_price) - avg) / s.volatility(p.vol_window)
    direction = 1 if z < -p.eta else -1 if z > p.eta else 0
    _directional(b, direction, abs(z) > p.mu, s.last_price)
    return b.decision(
        f"price deviates {z:+.2f} standard deviations from the {p.window}-round average "
        f"{avg:.2f}; trading against excessive moves",
        target=avg, target_reasoning="expect a reversal toward the moving average")


def _news(b: _Builder, s: MarketSnapshot, p: StrategyParams, news: float) -> TradeDecision:
    avg = s.moving_average(p.window)
    price = float(s.last_price)
    if news > 0 and price < avg:
        direction = 1
    elif news < 0 or price > avg + p.xi * abs(news):
        direction = -1
    else:
        direction = 0
    _directional(b, direction, abs(news) > p.nu, s.last_price)
    return b.decision(f"news signal {news:+.2f} with price {price:.2f} against average {avg:.2f}")


def _biased(multiplier_attr: str) -> Callable:
    def rule(b: _Builder, s: MarketSnapshot, p: StrategyParams, news: float) -> TradeDecision:
        if s.fundamental_estimate is None:
            return TradeDecision.hold(FUNDAMENTAL_UNAVAILABLE)
        belief = to_decimal(getattr(p, multiplier_attr)) * s.fundamental_estimate
        kappa = to_decimal(p.kappa)
        direction = 1 if s.last_price < belief - kappa else -1 if s.last_price > belief + kappa else 0
        _directional(b, direction, True, s.last_price)
        return b.decision(
            f"price {_fmt(s.last_price)} compared with a believed value of {_fmt(belief)}",
            valuation=belief, target=belief,
            valuation_reasoning=f"believed value is {getattr(p, multiplier_attr):g}x the estimate")
    return rule


def _speculator(b: _Builder, s: MarketSnapshot, p: StrategyParams, news: float) -> TradeDecision:
    expected = s.price_change
    direction = 1 if expected > p.psi else -1 if expected < -p.psi else 0
    _directional(b, direction, abs(expected) > p.omega, s.last_price)
    return b.decision(
        f"expected price change {expected:+.2f} from the latest move",
        target=s.last_price + to_decimal(expected),
        target_reasoning="last price change extrapolated one round")


def half_spread(s: MarketSnapshot, p: StrategyParams) -> float:
    rel_vol = p.lam * s.volatility(p.vol_window) / float(s.last_price)
    return min(max(p.min_half_spread, rel_vol), p.max_half_spread)


def _market_maker(b: _Builder, s: MarketSnapshot, p: StrategyParams, news: float) -> TradeDecision:
    target = p.target_inventory if p.target_inventory is not None else b.account.shares
    band = p.delta if p.delta is not None else 0.2 * target
    inventory = b.account.shares
    gap = inventory - target
    avg = s.moving_average(p.window)
    price = float(s.last_price)
    hs = half_spread(s, p)
    bid_size = ask_size = float(p.order_size)
    if inventory < target and price < avg:
        ask_size /= 2
    elif inventory > target and price > avg:
        bid_size /= 2

    rebalance = ""
    if abs(gap) > band:
        side = Side.SELL if gap > 0 else Side.BUY
        qty = b.add(side, OrderKind.MARKET, s.last_price, min(abs(gap) - band, p.order_size))
        rebalance = f"; rebalancing {qty} shares toward target inventory {target}"
        if side is Side.SELL:
            bid_size = 0
        else:
            ask_size = 0
    bid = money_down(Decimal(repr(price * (1 - hs))))
    ask = money_up(Decimal(repr(price * (1 + hs))))
    if bid_size:
        b.add(Side.BUY, OrderKind.LIMIT, bid, bid_size)
    if ask_size:
        b.add(Side.SELL, OrderKind.LIMIT, ask, ask_size)
    return b.decision(
        f"quoting {_fmt(bid)} / {_fmt(ask)} around {price:.2f} with half spread "
        f"{hs:.2%}; inventory {inventory} against target {target}{rebalance}",
        target=avg, target_reasoning="moving average of recent prices")


def _hold(b: _Builder, s: MarketSnapshot, p: StrategyParams, news: float) -> TradeDecision:
    return TradeDecision.hold("holding agent never trades")


def _always(side: Side) -> Callable:
    def rule(b: _Builder, s: MarketSnapshot, p: StrategyParams, news: float) -> TradeDecision:
        b.add(side, OrderKind.MARKET, s.last_price, p.order_size)
        d = b.decision(f"always {side.value.lower()}")
        return TradeDecision(d.valuation_reasoning, d.valuation, d.price_target_reasoning,
                             d.price_target, d.orders, ReplaceDecision.ADD, d.reasoning)
    return rule


_RULES: dict[str, Callable] = {
    "value": _value,
    "momentum": _momentum,
    "market_maker": _market_maker,
    "contrarian": _contrarian,
    "news": _news,
    "optimistic": _biased("optimism"),
    "pessimistic": _biased("pessimism"),
    "speculator": _speculator,
    "hold": _hold,
    "always_buy": _always(Side.BUY),
    "always_sell": _always(Side.SELL),
}


def strategy_decide(agent_type: str, params: StrategyParams, snapshot: MarketSnapshot,
                    account: AgentAccount, news: float = 0.0) -> TradeDecision:
    """Apply the threshold rule for ``agent_type`` to a snapshot."""
    try:
        rule = _RULES[agent_type]
    except KeyError:
        raise ValueError(f"unknown rule agent type {agent_type!r}") from None
    if not math.isfinite(news):
        raise ValueError("news signal must be finite")
    return rule(_Builder(snapshot, account, params), snapshot, params, news)
