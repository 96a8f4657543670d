"""Wire schema for model decisions and conversion to :class:`TradeDecision`."""

from __future__ import annotations

import json
import math
from decimal import Decimal
from typing import List, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from ..agents.types import OrderRequest, ReplaceDecision, TradeDecision
from ..money import money, to_decimal
from ..orderbook import OrderKind, Side


class ParseError(ValueError):
    """A completion did not match the decision schema. ``path`` names the offending field."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path
        self.message = message


class OrderSchema(BaseModel):
    """Schema for individual orders"""

    model_config = ConfigDict(extra="ignore")

    decision: Literal["Buy", "Sell"] = Field(..., description="Buy, Sell")
    quantity: int = Field(..., description="Number of shares")
    order_type: Literal["market", "limit"] = Field(..., description="market or limit")
    price_limit: Optional[float] = Field(None, description="Required for limit orders")

    @field_validator("order_type", mode="before")
    @classmethod
    def _lower(cls, v):
        return v.lower() if isinstance(v, str) else v


class TradeDecisionSchema(BaseModel):
    """Schema for trade decisions"""

    model_config = ConfigDict(extra="ignore")

    valuation_reasoning: str = Field(..., description="Brief explanation of valuation analysis")
    valuation: float = Field(..., description="Agent's estimated fundamental value")
    price_target_reasoning: str = Field("", description="Numerical analysis of the price target")
    price_target: float = Field(..., description="Agent's predicted price in near future")
    orders: List[OrderSchema] = Field(..., description="List of orders to execute")
    replace_decision: Literal["Add", "Cancel", "Replace"] = Field(
        ..., description="Add, Cancel, or Replace")
    reasoning: str = Field(..., description="Explanation for the trading decisions")


def decision_json_schema() -> dict:
    return TradeDecisionSchema.model_json_schema()


def _path(loc) -> str:
    out = ""
    for part in loc:
        out += f"[{part}]" if isinstance(part, int) else (f".{part}" if out else str(part))
    return out


def _finite(value: float, path: str) -> Decimal:
    if not math.isfinite(value):
        raise ParseError(path, "must be a finite number")
    return to_decimal(value)


def parse_decision(raw: Union[str, "object"]) -> TradeDecision:
    """Parse exactly one JSON object into a validated :class:`TradeDecision`.

    Accepts a string or anything with a ``text`` attribute. Raw newlines inside
    strings are tolerated; anything outside the object is not.
    """
    text = raw if isinstance(raw, str) else getattr(raw, "text")
    try:
        obj, end = json.JSONDecoder(strict=False).raw_decode(text.strip())
    except json.JSONDecodeError as exc:
        raise ParseError("", f"not a JSON object: {exc.msg} at position {exc.pos}") from None
    if end != len(text.strip()):
        raise ParseError("", "unexpected content after the JSON object")
    if not isinstance(obj, dict):
        raise ParseError("", "top level must be a JSON object")
    try:
        wire = TradeDecisionSchema.model_validate(obj)
    except ValidationError as exc:
        err = exc.errors()[0]
        raise ParseError(_path(err["loc"]), err["msg"]) from None

    orders = []
    for i, o in enumerate(wire.orders):
        if o.quantity <= 0:
            raise ParseError(f"orders[{i}].quantity", "must be a positive integer")
        if o.order_type == "limit":
            if o.price_limit is None:
                raise ParseError(f"orders[{i}].price_limit", "required for limit orders")
            price = money(_finite(o.price_limit, f"orders[{i}].price_limit"))
            if price <= 0:
                raise ParseError(f"orders[{i}].price_limit", "must be positive")
            orders.append(OrderRequest(Side(o.decision), o.quantity, OrderKind.LIMIT, price))
        else:
            orders.append(OrderRequest(Side(o.decision), o.quantity, OrderKind.MARKET))
    replace = ReplaceDecision(wire.replace_decision)
    if replace is ReplaceDecision.CANCEL and orders:
        raise ParseError("orders", "must be empty when replace_decision is Cancel")
    return TradeDecision(
        valuation_reasoning=wire.valuation_reasoning,
        valuation=_finite(wire.valuation, "valuation"),
        price_target_reasoning=wire.price_target_reasoning,
        price_target=_finite(wire.price_target, "price_target"),
        orders=tuple(orders),
        replace_decision=replace,
        reasoning=wire.reasoning,
    )


def _num(x: Optional[Decimal]):
    return None if x is None else float(x)


def decision_to_wire(decision: TradeDecision) -> dict:
    return {
        "valuation_reasoning": decision.valuation_reasoning,
        "valuation": _num(decision.valuation),
        "price_target_reasoning": decision.price_target_reasoning,
        "price_target": _num(decision.price_target),
        "orders": [
            {
                "decision": o.side.value,
                "quantity": o.quantity,
                "order_type": o.kind.value.lower(),
                **({"price_limit": float(o.price_limit)} if o.price_limit is not None else {}),
            }
            for o in decision.orders
        ],
        "replace_decision": decision.replace_decision.value,
        "reasoning": decision.reasoning,
    }


def serialize(decision: TradeDecision) -> str:
    return json.dumps(decision_to_wire(decision), separators=(",", ":"))


def decision_from_wire(wire: dict) -> TradeDecision:
    """Rebuild a logged decision. Unlike :func:`parse_decision`, null valuations are allowed."""

    def dec(x):
        return None if x is None else to_decimal(x)

    orders = tuple(
        OrderRequest(Side(o["decision"]), int(o["quantity"]), OrderKind(o["order_type"].title()),
                     None if o.get("price_limit") is None else money(to_decimal(o["price_limit"])))
        for o in wire["orders"])
    return TradeDecision(wire["valuation_reasoning"], dec(wire["valuation"]),
                         wire["price_target_reasoning"], dec(wire["price_target"]), orders,
                         ReplaceDecision(wire["replace_decision"]), wire["reasoning"])
