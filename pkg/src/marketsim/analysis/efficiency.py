"""Price efficiency and volume statistics over a run's round series."""

from __future__ import annotations

from dataclasses import dataclass, field
from decimal import Decimal
from typing import Optional, Sequence

import numpy as np


@dataclass(frozen=True)
class RoundSummary:
    """The per-round fields efficiency metrics need; one row of rounds.csv."""

    round: int
    clearing_price: Decimal
    fundamental_value: Optional[Decimal]
    volume: int
    num_trades: int


@dataclass(frozen=True)
class EfficiencyReport:
    rounds: int
    ratios: Optional[tuple[float, ...]]
    ratio_start: Optional[float]
    ratio_end: Optional[float]
    ratio_change: Optional[float]
    mean_deviation: Optional[float]
    ratio_min: Optional[float]
    ratio_max: Optional[float]
    ratio_std: Optional[float]
    volatility: float
    mean_volume: float
    trades_per_round: float
    avg_trade_size: Optional[float]
    total_volume: int
    total_trades: int
    flags: tuple[str, ...] = field(default=())


def summarize(records) -> list[RoundSummary]:
    return [RoundSummary(r.round, r.clearing_price, r.fundamental_value, r.volume, r.num_trades)
            for r in records]


def efficiency(records: Sequence) -> EfficiencyReport:
    """Metrics over every record, round 0 included for prices.

    Volume statistics cover trading rounds only. Standard deviations are
    population values. Ratio fields are omitted and flagged when any round
    lacks a fundamental value.
    """
    if len(records) < 2:
        raise ValueError("efficiency needs at least two rounds")
    prices = np.array([float(r.clearing_price) for r in records])
    returns = prices[1:] / prices[:-1] - 1.0
    trading = records[1:] if records[0].round == 0 else records
    volumes = np.array([r.volume for r in trading], dtype=float)
    total_volume = int(sum(r.volume for r in trading))
    total_trades = int(sum(r.num_trades for r in trading))

    flags: list[str] = []
    ratio_fields: dict = dict.fromkeys(
        ("ratios", "ratio_start", "ratio_end", "ratio_change", "mean_deviation", "ratio_min",
         "ratio_max", "ratio_std"))
    if any(r.fundamental_value is None or r.fundamental_value <= 0 for r in records):
        flags.append("fundamental_missing")
    else:
        ratios = prices / np.array([float(r.fundamental_value) for r in records])
        ratio_fields.update(
            ratios=tuple(float(x) for x in ratios),
            ratio_start=float(ratios[0]),
            ratio_end=float(ratios[-1]),
            ratio_change=float(ratios[-1] - ratios[0]),
            mean_deviation=float(np.mean(np.abs(ratios - 1.0))),
            ratio_min=float(ratios.min()),
            ratio_max=float(ratios.max()),
            ratio_std=float(ratios.std()),
        )
    return EfficiencyReport(
        rounds=len(records),
        volatility=float(returns.std()),
        mean_volume=float(volumes.mean()) if len(volumes) else 0.0,
        trades_per_round=total_trades / len(trading) if trading else 0.0,
        avg_trade_size=total_volume / total_trades if total_trades else None,
        total_volume=total_volume,
        total_trades=total_trades,
        flags=tuple(flags),
        **ratio_fields,
    )
