"""Persistent limit order book with strict price-time priority."""

from __future__ import annotations

import bisect
from collections import deque
from dataclasses import dataclass
from decimal import Decimal
from enum import Enum
from typing import Iterator, Optional


class Side(str, Enum):
    BUY = "Buy"
    SELL = "Sell"

    @property
    def opposite(self) -> "Side":
        return Side.SELL if self is Side.BUY else Side.BUY


class OrderKind(str, Enum):
    MARKET = "Market"
    LIMIT = "Limit"


class OrderRejected(ValueError):
    """Raised when an order cannot rest in the book."""


@dataclass
class Order:
    id: int
    agent_id: int
    side: Side
    kind: OrderKind
    quantity: int
    remaining: int
    price_limit: Optional[Decimal] = None
    round_submitted: int = 0
    sequence: int = 0
    # Cash reserved for a market buy; fills never spend more than this.
    cash_cap: Optional[Decimal] = None

    def __post_init__(self) -> None:
        if self.quantity <= 0:
            raise ValueError(f"order {self.id}: quantity must be positive")
        if not 0 <= self.remaining <= self.quantity:
            raise ValueError(f"order {self.id}: remaining outside [0, quantity]")
        if self.kind is OrderKind.LIMIT:
            if self.price_limit is None or self.price_limit <= 0:
                raise ValueError(f"order {self.id}: limit order needs a positive price_limit")
        elif self.price_limit is not None:
            raise ValueError(f"order {self.id}: market order cannot carry price_limit")

    @property
    def filled(self) -> int:
        return self.quantity - self.remaining

    def crosses(self, price: Decimal) -> bool:
        """True if this order's limit accepts execution at ``price``."""
        if self.kind is OrderKind.MARKET:
            return True
        if self.side is Side.BUY:
            return price <= self.price_limit
        return price >= self.price_limit


@dataclass(frozen=True)
class DepthSnapshot:
    bid_levels: tuple[tuple[Decimal, int], ...]
    ask_levels: tuple[tuple[Decimal, int], ...]

    @property
    def best_bid(self) -> Optional[Decimal]:
        return self.bid_levels[0][0] if self.bid_levels else None

    @property
    def best_ask(self) -> Optional[Decimal]:
        return self.ask_levels[0][0] if self.ask_levels else None

    @classmethod
    def empty(cls) -> "DepthSnapshot":
        return cls((), ())


class OrderBook:
    """Bids and asks as price-indexed FIFO queues.

    Price lists are kept ascending for both sides, so the best bid is the last
    bid price and the best ask the first ask price.
    """

    def __init__(self) -> None:
        self._queues: dict[Side, dict[Decimal, deque[Order]]] = {Side.BUY: {}, Side.SELL: {}}
        self._prices: dict[Side, list[Decimal]] = {Side.BUY: [], Side.SELL: []}
        self._index: dict[int, Order] = {}
        self._issued_sequence = 0
        self._last_inserted = 0

    # sequence numbers -------------------------------------------------

    def next_sequence(self) -> int:
        self._issued_sequence += 1
        return self._issued_sequence

    @property
    def last_sequence(self) -> int:
        return self._issued_sequence

    # mutation ---------------------------------------------------------

    def insert(self, order: Order) -> None:
        if order.kind is not OrderKind.LIMIT:
            raise OrderRejected(f"order {order.id}: market orders never rest")
        if order.remaining <= 0:
            raise OrderRejected(f"order {order.id}: nothing left to rest")
        if order.id in self._index:
            raise OrderRejected(f"order {order.id}: already resting")
        if order.sequence <= self._last_inserted:
            raise OrderRejected(
                f"order {order.id}: sequence {order.sequence} not after {self._last_inserted}"
            )
        side, price = order.side, order.price_limit
        queues = self._queues[side]
        if price not in queues:
            queues[price] = deque()
            bisect.insort(self._prices[side], price)
        queues[price].append(order)
        self._index[order.id] = order
        self._last_inserted = order.sequence
        self._issued_sequence = max(self._issued_sequence, order.sequence)

    def cancel(self, order_id: int) -> Optional[Order]:
        """Remove a resting order. Returns None when the id is not resting."""
        order = self._index.get(order_id)
        if order is None:
            return None
        self._remove(order)
        return order

    def reduce(self, order: Order, qty: int) -> None:
        """Fill ``qty`` shares of a resting order, dropping it when exhausted."""
        if qty <= 0 or qty > order.remaining:
            raise ValueError(f"bad fill of {qty} on order {order.id}")
        order.remaining -= qty
        if order.remaining == 0:
            self._remove(order)

    def _remove(self, order: Order) -> None:
        side, price = order.side, order.price_limit
        queue = self._queues[side][price]
        queue.remove(order)
        del self._index[order.id]
        if not queue:
            del self._queues[side][price]
            prices = self._prices[side]
            del prices[bisect.bisect_left(prices, price)]

    # queries ----------------------------------------------------------

    def __contains__(self, order_id: int) -> bool:
        return order_id in self._index

    def __len__(self) -> int:
        return len(self._index)

    def get(self, order_id: int) -> Optional[Order]:
        return self._index.get(order_id)

    def best_bid(self) -> Optional[Decimal]:
        prices = self._prices[Side.BUY]
        return prices[-1] if prices else None

    def best_ask(self) -> Optional[Decimal]:
        prices = self._prices[Side.SELL]
        return prices[0] if prices else None

    def best(self, side: Side) -> Optional[Decimal]:
        return self.best_bid() if side is Side.BUY else self.best_ask()

    def prices(self, side: Side) -> list[Decimal]:
        """Price levels of one side, best first (a copy)."""
        prices = self._prices[side]
        return list(reversed(prices)) if side is Side.BUY else list(prices)

    def queue(self, side: Side, price: Decimal) -> tuple[Order, ...]:
        return tuple(self._queues[side].get(price, ()))

    def orders(self, side: Optional[Side] = None) -> Iterator[Order]:
        """Resting orders in priority order (bids first when side is None)."""
        sides = (side,) if side is not None else (Side.BUY, Side.SELL)
        for s in sides:
            for price in self.prices(s):
                yield from self._queues[s][price]

    def orders_of(self, agent_id: int) -> list[Order]:
        return [o for o in self.orders() if o.agent_id == agent_id]

    def depth(self) -> DepthSnapshot:
        def levels(side: Side) -> tuple[tuple[Decimal, int], ...]:
            return tuple(
                (price, sum(o.remaining for o in self._queues[side][price]))
                for price in self.prices(side)
            )

        return DepthSnapshot(levels(Side.BUY), levels(Side.SELL))

    def state(self) -> tuple:
        """Hashable description of every resting order, in priority order."""
        return tuple(
            (o.side.value, o.price_limit, o.id, o.agent_id, o.remaining, o.quantity, o.sequence)
            for o in self.orders()
        )

    def copy(self) -> "OrderBook":
        from copy import deepcopy

        return deepcopy(self)
