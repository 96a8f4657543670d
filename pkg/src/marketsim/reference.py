"""Brute-force clearing used as a differential-testing oracle.

Every matching step re-scans a flat list of orders for the best eligible
counterparty. It is quadratic and meant for tiny instances only.
"""

from __future__ import annotations

from copy import deepcopy
from dataclasses import replace
from decimal import Decimal
from typing import Iterable, Optional

from .matching import Phase, RoundResult, Trade, UnmatchableOrder
from .money import money
from .orderbook import Order, OrderBook, OrderKind, Side

MAX_ORDERS = 16


def _priority(order: Order) -> tuple:
    # lower tuple = better resting priority
    price = order.price_limit if order.side is Side.SELL else -order.price_limit
    return (price, order.sequence)


def reference_match(
    book: OrderBook,
    cancels: Iterable[int],
    new_orders: Iterable[Order],
    prev_price: Optional[Decimal],
    *,
    round_no: int = 0,
    first_trade_id: int = 1,
) -> tuple[RoundResult, OrderBook]:
    """Clear a round without touching the inputs; returns the result and the final book."""
    resting = [deepcopy(o) for o in book.orders()]
    incoming = [deepcopy(o) for o in new_orders]
    if len(resting) + len(incoming) > MAX_ORDERS:
        raise ValueError(f"oracle handles at most {MAX_ORDERS} orders")
    counter = book.last_sequence
    trades: list[Trade] = []
    spent: dict[int, Decimal] = {}

    def cash_left(order: Order) -> Optional[Decimal]:
        if order.side is not Side.BUY or order.cash_cap is None:
            return None
        return order.cash_cap - spent.get(order.id, Decimal(0))

    def fillable(order: Order, price: Decimal) -> int:
        left = cash_left(order)
        if left is None:
            return order.remaining
        return min(order.remaining, max(0, int(left // price)) if left > 0 else 0)

    def record(buy: Order, sell: Order, qty: int, price: Decimal, phase: Phase) -> None:
        trades.append(Trade(first_trade_id + len(trades), round_no, price, qty,
                            buy.agent_id, sell.agent_id, buy.id, sell.id, phase))
        if buy.cash_cap is not None:
            spent[buy.id] = spent.get(buy.id, Decimal(0)) + price * qty
        buy.remaining -= qty
        sell.remaining -= qty

    cancelled, missed = [], []
    for oid in cancels:
        hit = [o for o in resting if o.id == oid]
        if hit:
            resting.remove(hit[0])
            cancelled.append(hit[0])
        else:
            missed.append(oid)

    incoming.sort(key=lambda o: o.sequence)
    markets = [o for o in incoming if o.kind is OrderKind.MARKET]
    limits = [o for o in incoming if o.kind is OrderKind.LIMIT]

    # market-to-market: lexicographically first eligible (buy, sell) pair each time
    if prev_price is not None:
        while True:
            pairs = [
                (b, s)
                for b in markets if b.side is Side.BUY and b.remaining > 0
                for s in markets if s.side is Side.SELL and s.remaining > 0
                if s.agent_id != b.agent_id and fillable(b, prev_price) > 0
            ]
            if not pairs:
                break
            b, s = min(pairs, key=lambda p: (p[0].sequence, p[1].sequence))
            record(b, s, min(fillable(b, prev_price), s.remaining), prev_price,
                   Phase.MARKET_TO_MARKET)

    def best_counterparty(taker: Order) -> Optional[Order]:
        eligible = [
            o for o in resting
            if o.side is not taker.side and o.agent_id != taker.agent_id
            and o.remaining > 0 and taker.crosses(o.price_limit)
        ]
        return min(eligible, key=_priority) if eligible else None

    def take(taker: Order, phase: Phase) -> None:
        while taker.remaining > 0:
            maker = best_counterparty(taker)
            if maker is None:
                return
            qty = min(maker.remaining, fillable(taker, maker.price_limit))
            if qty == 0:
                return
            buy, sell = (taker, maker) if taker.side is Side.BUY else (maker, taker)
            record(buy, sell, qty, maker.price_limit, phase)
            if maker.remaining == 0:
                resting.remove(maker)

    unexecuted: list[Order] = []

    def settle(order: Order) -> None:
        if order.remaining == 0:
            return
        own_crossed = [
            o for o in resting
            if o.side is not order.side and o.agent_id == order.agent_id
            and order.crosses(o.price_limit)
        ]
        if own_crossed:
            unexecuted.append(order)
        else:
            resting.append(order)

    for m in markets:
        take(m, Phase.MARKET_TO_BOOK)
    for lim in limits:
        take(lim, Phase.LIMIT_CROSS)
        settle(lim)

    converted: list[Order] = []
    for m in markets:
        if m.remaining == 0:
            continue
        opposite = [o for o in resting if o.side is not m.side]
        if opposite:
            price = min(opposite, key=_priority).price_limit
        elif prev_price is not None:
            price = prev_price
        else:
            raise UnmatchableOrder(f"market order {m.id} has nowhere to go")
        qty = fillable(m, price)
        if qty == 0:
            unexecuted.append(m)
            continue
        counter += 1
        limit = replace(m, kind=OrderKind.LIMIT, price_limit=price, quantity=m.filled + qty,
                        remaining=qty, sequence=counter, cash_cap=None)
        converted.append(limit)
        take(limit, Phase.LIMIT_CROSS)
        settle(limit)

    final = OrderBook()
    for o in sorted(resting, key=lambda o: o.sequence):
        final.insert(o)

    if trades:
        clearing = trades[-1].price
    else:
        bids = [o.price_limit for o in resting if o.side is Side.BUY]
        asks = [o.price_limit for o in resting if o.side is Side.SELL]
        if bids and asks:
            clearing = money((max(bids) + min(asks)) / 2)
        elif bids or asks:
            clearing = max(bids) if bids else min(asks)
        else:
            clearing = prev_price

    result = RoundResult(trades, clearing, converted, unexecuted, cancelled, missed)
    return result, final
