"""Fixed-point currency helpers.

Prices and cash balances are ``Decimal`` values with two fractional digits.
Share quantities are plain ints.
"""

from __future__ import annotations

from decimal import ROUND_DOWN, ROUND_HALF_UP, ROUND_UP, Decimal

CENT = Decimal("0.01")
ZERO = Decimal("0.00")


def to_decimal(value) -> Decimal:
    """Convert ints, floats, strings or Decimals without binary float noise."""
    if isinstance(value, Decimal):
        return value
    if isinstance(value, float):
        return Decimal(repr(value))
    return Decimal(value)


def money(value, rounding=ROUND_HALF_UP) -> Decimal:
    return to_decimal(value).quantize(CENT, rounding=rounding)


def money_down(value) -> Decimal:
    return money(value, ROUND_DOWN)


def money_up(value) -> Decimal:
    return money(value, ROUND_UP)


def fmt_money(value) -> str:
    return f"{money(value):.2f}"


def round_half_up(x: float) -> int:
    """Round to the nearest integer, ties away from zero."""
    return int(to_decimal(x).quantize(Decimal(1), rounding=ROUND_HALF_UP))


def affordable(cash: Decimal, price: Decimal) -> int:
    if price <= 0 or cash <= 0:
        return 0
    return int(cash // price)
