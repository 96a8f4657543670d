"""Decision sweep over the price-to-fundamental ratio with a fixed book template."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from decimal import Decimal, InvalidOperation
from typing import Optional, Sequence

from ..accounts import AgentAccount
from ..agents.base import Agent
from ..agents.types import DividendInfo, HistoryPoint, MarketSnapshot
from ..money import money, to_decimal
from ..orderbook import DepthSnapshot, OrderKind
from ..simulator import SWEEP_STREAM, stream

ACTIONS = ("Buy", "Sell", "Hold")


def parse_grid(text: str) -> list[Decimal]:
    """``start:stop:step`` with both ends inclusive, computed in decimal."""
    try:
        start, stop, step = (Decimal(x) for x in text.split(":"))
    except (ValueError, InvalidOperation):
        raise ValueError(f"grid must look like start:stop:step, got {text!r}") from None
    if step <= 0 or start <= 0 or stop < start:
        raise ValueError("grid needs 0 < start <= stop and a positive step")
    n = int((stop - start) / step)
    return [start + i * step for i in range(n + 1)]


@dataclass(frozen=True)
class BookTemplate:
    """Symmetric levels at fractional offsets from the price, equal size per level."""

    offsets: tuple[Decimal, ...] = (Decimal("0.01"), Decimal("0.02"), Decimal("0.03"))
    size: int = 1000

    def depth(self, price: Decimal) -> DepthSnapshot:
        bids = tuple((money(price * (1 - o)), self.size) for o in self.offsets)
        asks = tuple((money(price * (1 + o)), self.size) for o in self.offsets)
        return DepthSnapshot(bids, asks)


@dataclass(frozen=True)
class SweepSetup:
    fundamental: Decimal = Decimal("28.00")
    cash: Decimal = Decimal("1000000.00")
    shares: int = 10_000
    interest_rate: Decimal = Decimal("0.05")
    expected_dividend: Decimal = Decimal("1.40")
    dividend_variation: Decimal = Decimal("1.00")
    round_no: int = 5
    total_rounds: Optional[int] = None
    book: BookTemplate = BookTemplate()

    def snapshot(self, rho: Decimal) -> MarketSnapshot:
        price = money(to_decimal(rho) * self.fundamental)
        # flat history so trend signals read zero
        history = tuple(HistoryPoint(r, price, 0) for r in range(self.round_no - 1, -1, -1))[:5]
        return MarketSnapshot(
            last_price=price,
            round=self.round_no,
            total_rounds=self.total_rounds,
            fundamental_estimate=self.fundamental,
            last_volume=0,
            depth=self.book.depth(price),
            price_history=history,
            dividend_info=DividendInfo(None, self.expected_dividend, self.expected_dividend,
                                       self.dividend_variation, 0.5, 1),
            interest_rate=self.interest_rate,
        )


@dataclass(frozen=True)
class SweepCell:
    agent_type: str
    rho: Decimal
    trials: int
    distribution: dict[str, float]
    mean_qty_pct: float
    market_share: Optional[float]
    mean_valuation: Optional[float]
    mean_price_target: Optional[float]


@dataclass(frozen=True)
class SweepResult:
    cells: tuple[SweepCell, ...]

    def rows(self) -> list[dict]:
        """Tidy long format, one row per (agent type, rho, decision)."""
        return [
            {"agent_type": c.agent_type, "rho": c.rho, "decision": action,
             "probability": c.distribution[action], "mean_qty_pct": c.mean_qty_pct,
             "market_share": c.market_share}
            for c in self.cells for action in ACTIONS
        ]

    def modal(self, agent_type: str) -> list[tuple[Decimal, str]]:
        return [(c.rho, max(ACTIONS, key=lambda a: c.distribution[a]))
                for c in self.cells if c.agent_type == agent_type]


def _mean(xs) -> Optional[float]:
    xs = [float(x) for x in xs if x is not None]
    return sum(xs) / len(xs) if xs else None


def decision_sweep(agents: Sequence[Agent], grid: Sequence, trials: int = 1,
                   setup: SweepSetup = SweepSetup(), seed: int = 0) -> SweepResult:
    """Query each agent ``trials`` times per grid point on a fresh account.

    Trial ``k`` at grid index ``i`` uses the generator keyed by
    ``(seed, i, k)``, so deterministic agents give identical cells for any
    trial count.
    """
    if trials < 1:
        raise ValueError("trials must be positive")
    cells = []
    for agent in agents:
        bind = getattr(agent, "bind_endowment", None)
        if bind is not None:
            bind(setup.shares)
        for i, rho in enumerate(grid):
            rho = to_decimal(rho)
            if rho <= 0:
                raise ValueError("grid values must be positive")
            snapshot = agent.view(setup.snapshot(rho))
            counts: Counter = Counter()
            qty_pct, kinds, valuations, targets = [], [], [], []
            for k in range(trials):
                account = AgentAccount(agent.agent_id, setup.cash, setup.shares)
                d = agent.decide(snapshot, account, (), 0.0,
                                 stream(seed, SWEEP_STREAM, i, k)).decision
                counts[d.action] += 1
                qty_pct.append(100.0 * abs(d.signed_quantity) / setup.shares)
                kinds += [o.kind is OrderKind.MARKET for o in d.orders]
                valuations.append(d.valuation)
                targets.append(d.price_target)
            cells.append(SweepCell(
                agent_type=agent.agent_type,
                rho=rho,
                trials=trials,
                distribution={a: counts[a] / trials for a in ACTIONS},
                mean_qty_pct=sum(qty_pct) / trials,
                market_share=sum(kinds) / len(kinds) if kinds else None,
                mean_valuation=_mean(valuations),
                mean_price_target=_mean(targets),
            ))
    return SweepResult(tuple(cells))
