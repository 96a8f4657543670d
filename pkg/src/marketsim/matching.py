"""Per-round clearing.

A round runs five stages in order:

1. cancellations,
2. market-to-market netting at the reference (previous clearing) price,
3. remaining market orders against the resting book,
4. new limit orders in sequence order, each matching whatever it crosses
   at the resting price before its remainder rests,
5. unfilled market remainders re-posted as aggressive limits at the
   opposite best price (reference price if that side is empty).

No trade ever pairs an agent with itself: an agent's own resting orders are
skipped. A remainder that would rest through the same agent's opposite order
is dropped and reported in ``unexecuted`` so the book never stays crossed.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from decimal import Decimal
from enum import Enum
from typing import Callable, Iterable, Optional

from .money import affordable, money
from .orderbook import Order, OrderBook, OrderKind, Side


class Phase(str, Enum):
    MARKET_TO_MARKET = "MarketToMarket"
    MARKET_TO_BOOK = "MarketToBook"
    LIMIT_CROSS = "LimitCross"


class UnmatchableOrder(RuntimeError):
    """A market order met an empty opposite side and no reference price exists."""


@dataclass(frozen=True)
class Trade:
    trade_id: int
    round: int
    price: Decimal
    quantity: int
    buyer_agent: int
    seller_agent: int
    buy_order: int
    sell_order: int
    phase: Phase

    def key(self) -> tuple:
        """Identity of the fill, ignoring the trade id."""
        return (
            self.phase.value, self.price, self.quantity,
            self.buyer_agent, self.seller_agent, self.buy_order, self.sell_order,
        )


@dataclass
class RoundResult:
    trades: list[Trade]
    clearing_price: Optional[Decimal]
    converted_orders: list[Order] = field(default_factory=list)
    unexecuted: list[Order] = field(default_factory=list)
    cancelled: list[Order] = field(default_factory=list)
    missed_cancels: list[int] = field(default_factory=list)

    @property
    def volume(self) -> int:
        return sum(t.quantity for t in self.trades)


def price_formation(
    trades: list[Trade], book_after: OrderBook, prev_price: Optional[Decimal]
) -> Optional[Decimal]:
    """Last trade price, else bid/ask midpoint, else the one quoted side, else ``prev_price``."""
    if trades:
        return trades[-1].price
    bid, ask = book_after.best_bid(), book_after.best_ask()
    if bid is not None and ask is not None:
        return money((bid + ask) / 2)
    if bid is not None:
        return bid
    if ask is not None:
        return ask
    return prev_price


class _Clearing:
    """Mutable state for one call of :func:`run_round`."""

    def __init__(self, book: OrderBook, round_no: int, first_trade_id: int) -> None:
        self.book = book
        self.round_no = round_no
        self.next_trade_id = first_trade_id
        self.trades: list[Trade] = []
        self.budget: dict[int, Decimal] = {}

    def can_buy(self, order: Order, price: Decimal) -> int:
        if order.id not in self.budget:
            return order.remaining
        return min(order.remaining, affordable(self.budget[order.id], price))

    def execute(self, taker: Order, maker: Order, qty: int, price: Decimal, phase: Phase) -> None:
        buy, sell = (taker, maker) if taker.side is Side.BUY else (maker, taker)
        self.trades.append(
            Trade(
                trade_id=self.next_trade_id,
                round=self.round_no,
                price=price,
                quantity=qty,
                buyer_agent=buy.agent_id,
                seller_agent=sell.agent_id,
                buy_order=buy.id,
                sell_order=sell.id,
                phase=phase,
            )
        )
        self.next_trade_id += 1
        if buy.id in self.budget:
            self.budget[buy.id] -= price * qty

    def sweep(self, taker: Order, phase: Phase, price_ok: Callable[[Decimal], bool]) -> None:
        """Match ``taker`` against the resting opposite side, best price first."""
        opposite = taker.side.opposite
        for price in self.book.prices(opposite):
            if taker.remaining == 0 or not price_ok(price):
                return
            for maker in self.book.queue(opposite, price):
                if taker.remaining == 0:
                    return
                if maker.agent_id == taker.agent_id:
                    continue
                room = self.can_buy(taker, price) if taker.side is Side.BUY else taker.remaining
                qty = min(maker.remaining, room)
                if qty == 0:
                    # out of cash at this level, and every later level costs more
                    return
                taker.remaining -= qty
                self.book.reduce(maker, qty)
                self.execute(taker, maker, qty, price, phase)

    def rest_or_drop(self, order: Order, unexecuted: list[Order]) -> None:
        if order.remaining == 0:
            return
        opp_best = self.book.best(order.side.opposite)
        if opp_best is not None and order.crosses(opp_best):
            # only the agent's own orders are left on the crossed side
            unexecuted.append(order)
            return
        self.book.insert(order)


def run_round(
    book: OrderBook,
    cancels: Iterable[int],
    new_orders: Iterable[Order],
    prev_price: Optional[Decimal],
    *,
    round_no: int = 0,
    first_trade_id: int = 1,
) -> RoundResult:
    """Clear one round, mutating ``book`` and the new orders in place."""
    state = _Clearing(book, round_no, first_trade_id)
    cancelled, missed = [], []
    for oid in cancels:
        order = book.cancel(oid)
        (cancelled if order is not None else missed).append(order if order is not None else oid)

    incoming = sorted(new_orders, key=lambda o: o.sequence)
    markets = [o for o in incoming if o.kind is OrderKind.MARKET]
    limits = [o for o in incoming if o.kind is OrderKind.LIMIT]
    for o in markets:
        if o.side is Side.BUY and o.cash_cap is not None:
            state.budget[o.id] = o.cash_cap

    if prev_price is not None:
        buys = [o for o in markets if o.side is Side.BUY]
        sells = [o for o in markets if o.side is Side.SELL]
        for b in buys:
            for s in sells:
                if b.remaining == 0:
                    break
                if s.remaining == 0 or s.agent_id == b.agent_id:
                    continue
                qty = min(state.can_buy(b, prev_price), s.remaining)
                if qty == 0:
                    break
                b.remaining -= qty
                s.remaining -= qty
                state.execute(b, s, qty, prev_price, Phase.MARKET_TO_MARKET)

    for m in markets:
        if m.remaining:
            state.sweep(m, Phase.MARKET_TO_BOOK, lambda p: True)

    unexecuted: list[Order] = []
    for lim in limits:
        state.sweep(lim, Phase.LIMIT_CROSS, lim.crosses)
        state.rest_or_drop(lim, unexecuted)

    converted: list[Order] = []
    for m in markets:
        if m.remaining == 0:
            continue
        price = book.best(m.side.opposite)
        if price is None:
            price = prev_price
        if price is None:
            raise UnmatchableOrder(
                f"market order {m.id} meets an empty book with no reference price"
            )
        qty = m.remaining
        if m.side is Side.BUY and m.id in state.budget:
            qty = min(qty, affordable(state.budget[m.id], price))
        if qty == 0:
            unexecuted.append(m)
            continue
        limit = replace(
            m,
            kind=OrderKind.LIMIT,
            price_limit=price,
            quantity=m.filled + qty,
            remaining=qty,
            sequence=book.next_sequence(),
            cash_cap=None,
        )
        converted.append(limit)
        state.sweep(limit, Phase.LIMIT_CROSS, limit.crosses)
        state.rest_or_drop(limit, unexecuted)

    return RoundResult(
        trades=state.trades,
        clearing_price=price_formation(state.trades, book, prev_price),
        converted_orders=converted,
        unexecuted=unexecuted,
        cancelled=cancelled,
        missed_cancels=missed,
    )
