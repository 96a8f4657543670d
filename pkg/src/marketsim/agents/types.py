"""Data passed between the market, the agents and the decision validator."""

from __future__ import annotations

import statistics
from dataclasses import dataclass, field, fields, replace
from decimal import Decimal
from enum import Enum
from typing import Mapping, Optional, Sequence

from ..money import money, to_decimal
from ..orderbook import DepthSnapshot, OrderKind, Side


class ReplaceDecision(str, Enum):
    ADD = "Add"
    CANCEL = "Cancel"
    REPLACE = "Replace"


@dataclass(frozen=True)
class OrderRequest:
    side: Side
    quantity: int
    kind: OrderKind
    price_limit: Optional[Decimal] = None

    @classmethod
    def market(cls, side, quantity: int) -> "OrderRequest":
        return cls(Side(side), quantity, OrderKind.MARKET)

    @classmethod
    def limit(cls, side, quantity: int, price) -> "OrderRequest":
        return cls(Side(side), quantity, OrderKind.LIMIT, money(price))


@dataclass(frozen=True)
class TradeDecision:
    valuation_reasoning: str
    valuation: Optional[Decimal]
    price_target_reasoning: str
    price_target: Optional[Decimal]
    orders: tuple[OrderRequest, ...]
    replace_decision: ReplaceDecision
    reasoning: str

    def __post_init__(self) -> None:
        object.__setattr__(self, "orders", tuple(self.orders))
        if self.replace_decision is ReplaceDecision.CANCEL and self.orders:
            raise ValueError("a Cancel decision carries no orders")

    @classmethod
    def hold(cls, reason: str, valuation=None, price_target=None) -> "TradeDecision":
        return cls("", valuation, "", price_target, (), ReplaceDecision.ADD, reason)

    @property
    def action(self) -> str:
        """Buy, Sell or Hold by net requested quantity."""
        net = self.signed_quantity
        if net > 0:
            return "Buy"
        if net < 0:
            return "Sell"
        return "Hold"

    @property
    def signed_quantity(self) -> int:
        return sum(o.quantity if o.side is Side.BUY else -o.quantity for o in self.orders)

    @property
    def signed(self) -> int:
        net = self.signed_quantity
        return (net > 0) - (net < 0)


@dataclass(frozen=True)
class HistoryPoint:
    round: int
    price: Decimal
    volume: int


@dataclass(frozen=True)
class DividendInfo:
    last_paid: Optional[Decimal]
    expected: Decimal
    base: Decimal
    variation: Decimal
    probability_high: float
    next_payment_in: int

    @property
    def max_scenario(self) -> Decimal:
        return self.base + self.variation

    @property
    def min_scenario(self) -> Decimal:
        return self.base - self.variation


@dataclass(frozen=True)
class MarketSnapshot:
    """What an agent sees at the start of a round.

    ``price_history`` runs most-recent-first; its head is the previous round's
    clearing price, which is also ``last_price``.
    """

    last_price: Decimal
    round: int
    total_rounds: Optional[int]
    fundamental_estimate: Optional[Decimal]
    last_volume: int
    depth: DepthSnapshot
    price_history: tuple[HistoryPoint, ...]
    dividend_info: Optional[DividendInfo] = None
    interest_rate: Optional[Decimal] = None
    redemption_value: Optional[Decimal] = None

    @property
    def pf_ratio(self) -> Optional[Decimal]:
        if self.fundamental_estimate is None or self.fundamental_estimate == 0:
            return None
        return self.last_price / self.fundamental_estimate

    def hide_fundamental(self) -> "MarketSnapshot":
        return replace(self, fundamental_estimate=None)

    # derived state variables used by the strategy rules

    @property
    def price_change(self) -> float:
        h = self.price_history
        if len(h) < 2:
            return 0.0
        return float(h[0].price - h[1].price)

    @property
    def volume_change(self) -> int:
        h = self.price_history
        if len(h) < 2:
            return 0
        return h[0].volume - h[1].volume

    def moving_average(self, window: int) -> float:
        prior = [float(p.price) for p in self.price_history[1:1 + window]]
        return statistics.fmean(prior) if prior else float(self.last_price)

    def volatility(self, window: int, floor: float = 1e-6) -> float:
        prior = [float(p.price) for p in self.price_history[1:1 + window]]
        sd = statistics.pstdev(prior) if len(prior) >= 2 else 0.0
        return max(sd, floor)


@dataclass(frozen=True)
class StrategyParams:
    """Thresholds for the rule agents. Prices are in currency units, z-scores unitless."""

    alpha: float = 0.10
    beta: float = 0.25
    gamma: float = 0.0
    momentum_sigma: Optional[float] = None
    delta: Optional[float] = None
    lam: float = 2.0
    target_inventory: Optional[int] = None
    eta: float = 2.0
    mu: float = 2.0
    nu: float = 1.0
    xi: float = 1.0
    kappa: float = 0.0
    optimism: float = 10.0
    pessimism: float = 0.1
    psi: float = 0.5
    omega: float = 0.5
    window: int = 5
    vol_window: int = 5
    order_size: int = 1000
    max_fraction: float = 0.1
    min_half_spread: float = 0.01
    max_half_spread: float = 0.03

    def __post_init__(self) -> None:
        for name in ("alpha", "beta", "gamma", "lam", "eta", "mu", "nu", "xi", "kappa",
                     "psi", "omega", "optimism", "pessimism"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if self.window < 1 or self.vol_window < 1:
            raise ValueError("windows must be at least one round")
        if not 0 < self.max_fraction <= 1:
            raise ValueError("max_fraction must lie in (0, 1]")
        if self.order_size < 0:
            raise ValueError("order_size must be non-negative")

    @classmethod
    def from_mapping(cls, values: Mapping) -> "StrategyParams":
        unknown = set(values) - {f.name for f in fields(cls)}
        if unknown:
            raise ValueError(f"unknown strategy parameters: {', '.join(sorted(unknown))}")
        return cls(**dict(values))


@dataclass(frozen=True)
class NewsSignal:
    """Per-round signed news value; rounds outside ``series`` read ``default``."""

    series: Mapping[int, float] = field(default_factory=dict)
    default: float = 0.0

    def at(self, round_no: int) -> float:
        return float(self.series.get(round_no, self.default))

    @classmethod
    def from_list(cls, values: Sequence[float], start: int = 1) -> "NewsSignal":
        return cls({start + i: float(v) for i, v in enumerate(values)})


def decimal_or_none(value) -> Optional[Decimal]:
    return None if value is None else to_decimal(value)
