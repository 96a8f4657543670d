"""Clip requested orders to what an account can fund and deliver."""

from __future__ import annotations

from dataclasses import dataclass, field
from decimal import Decimal
from typing import Optional

from ..accounts import AgentAccount
from ..money import ZERO, affordable, money
from ..orderbook import OrderKind, Side
from .types import MarketSnapshot, OrderRequest, TradeDecision


@dataclass(frozen=True)
class Rejection:
    index: int
    reason: str
    detail: str = ""


@dataclass(frozen=True)
class AcceptedOrder:
    request: OrderRequest
    reserved_cash: Decimal = ZERO
    reserved_shares: int = 0
    requested_quantity: int = 0

    @property
    def clipped(self) -> bool:
        return self.request.quantity < self.requested_quantity


@dataclass
class ValidationResult:
    accepted: list[AcceptedOrder] = field(default_factory=list)
    rejections: list[Rejection] = field(default_factory=list)


def _malformed(order: OrderRequest) -> Optional[str]:
    if not isinstance(order.quantity, int) or isinstance(order.quantity, bool):
        return "invalid_quantity"
    if order.quantity <= 0:
        return "invalid_quantity"
    if order.kind is OrderKind.LIMIT:
        if order.price_limit is None:
            return "missing_price_limit"
        if order.price_limit <= 0:
            return "invalid_price"
    elif order.price_limit is not None:
        return "unexpected_price_limit"
    return None


def market_buy_reference(snapshot: MarketSnapshot) -> Decimal:
    ask = snapshot.depth.best_ask
    return ask if ask is not None else snapshot.last_price


def validate_decision(
    decision: TradeDecision, account: AgentAccount, snapshot: MarketSnapshot
) -> ValidationResult:
    """Accept orders in the given sequence, reserving cash and shares as they pass.

    Accepted orders are committed on ``account`` immediately, so later orders in
    the same decision see the reduced availability.
    """
    result = ValidationResult()
    for i, order in enumerate(decision.orders):
        problem = _malformed(order)
        if problem:
            result.rejections.append(Rejection(i, problem, repr(order)))
            continue
        if order.kind is OrderKind.LIMIT and order.price_limit != money(order.price_limit):
            order = OrderRequest(order.side, order.quantity, order.kind, money(order.price_limit))
            if order.price_limit <= 0:
                result.rejections.append(Rejection(i, "invalid_price", repr(order)))
                continue

        if order.side is Side.SELL:
            qty = min(order.quantity, account.available_shares)
            if qty <= 0:
                result.rejections.append(Rejection(i, "insufficient_shares",
                                                   f"requested {order.quantity}, available 0"))
                continue
            account.committed_shares += qty
            accepted = AcceptedOrder(_with_qty(order, qty), ZERO, qty, order.quantity)
        else:
            unit = order.price_limit if order.kind is OrderKind.LIMIT else \
                market_buy_reference(snapshot)
            qty = min(order.quantity, affordable(account.available_cash, unit))
            if qty <= 0:
                result.rejections.append(Rejection(
                    i, "insufficient_cash",
                    f"requested {order.quantity} at {unit}, available {account.available_cash}"))
                continue
            cost = unit * qty
            account.committed_cash += cost
            accepted = AcceptedOrder(_with_qty(order, qty), cost, 0, order.quantity)
        result.accepted.append(accepted)
    account.check()
    return result


def _with_qty(order: OrderRequest, qty: int) -> OrderRequest:
    if qty == order.quantity:
        return order
    return OrderRequest(order.side, qty, order.kind, order.price_limit)
