"""Dividend processes, interest accrual and fundamental value.

Dividends and interest are new money: they are credited to each agent's
non-tradeable dividend account and never move main cash.
"""

from __future__ import annotations

from dataclasses import dataclass
from decimal import Decimal
from typing import Iterable, Optional, Union

import numpy as np

from .accounts import AgentAccount
from .money import ZERO, money, to_decimal


@dataclass(frozen=True)
class BernoulliDividend:
    """Two-point dividend: ``base + variation`` with ``probability_high``, else ``base - variation``."""

    base: Decimal
    variation: Decimal
    probability_high: float = 0.5
    payment_interval: int = 1

    def __post_init__(self) -> None:
        object.__setattr__(self, "base", money(self.base))
        object.__setattr__(self, "variation", money(self.variation))
        if not 0.0 <= self.probability_high <= 1.0:
            raise ValueError("probability_high must lie in [0, 1]")
        if self.payment_interval < 1:
            raise ValueError("payment_interval must be a positive number of rounds")
        if self.variation < 0 or self.base - self.variation < 0:
            raise ValueError("dividend outcomes must be non-negative")

    @property
    def high(self) -> Decimal:
        return self.base + self.variation

    @property
    def low(self) -> Decimal:
        return self.base - self.variation

    @property
    def expected(self) -> Decimal:
        p = to_decimal(self.probability_high)
        return p * self.high + (1 - p) * self.low

    def draw(self, rng: np.random.Generator) -> Decimal:
        return self.high if rng.random() < self.probability_high else self.low


@dataclass
class GbmDividend:
    """Dividend level following ``D[t+1] = D[t] + mu + sigma * z`` with one-round steps.

    This is the arithmetic diffusion as written, not a log-normal process. The
    paid amount is floored at zero so payments never debit an account.
    """

    level: Decimal
    drift: Decimal
    volatility: Decimal
    payment_interval: int = 1

    def __post_init__(self) -> None:
        self.level = to_decimal(self.level)
        self.drift = to_decimal(self.drift)
        self.volatility = to_decimal(self.volatility)
        if self.volatility < 0:
            raise ValueError("volatility must be non-negative")
        if self.payment_interval < 1:
            raise ValueError("payment_interval must be a positive number of rounds")

    @property
    def expected(self) -> Decimal:
        return self.level + self.drift

    def step(self, rng: np.random.Generator, drift: Optional[Decimal] = None) -> Decimal:
        mu = self.drift if drift is None else to_decimal(drift)
        z = to_decimal(float(rng.standard_normal())) if self.volatility else Decimal(0)
        self.level = self.level + mu + self.volatility * z
        return self.level

    def draw(self, rng: np.random.Generator) -> Decimal:
        return max(money(self.step(rng)), ZERO)


DividendProcess = Union[BernoulliDividend, GbmDividend]


@dataclass(frozen=True)
class MarketParams:
    """``horizon`` is the number of rounds T, or None for an infinite horizon."""

    interest_rate: Decimal
    expected_dividend: Decimal
    horizon: Optional[int] = None
    redemption: Decimal = ZERO

    def __post_init__(self) -> None:
        object.__setattr__(self, "interest_rate", to_decimal(self.interest_rate))
        object.__setattr__(self, "expected_dividend", to_decimal(self.expected_dividend))
        object.__setattr__(self, "redemption", to_decimal(self.redemption))
        if self.interest_rate <= 0:
            raise ValueError("interest_rate must be positive")
        if self.expected_dividend < 0:
            raise ValueError("expected_dividend must be non-negative")
        if self.horizon is not None:
            if self.horizon < 1:
                raise ValueError("finite horizon needs at least one round")
            if self.redemption < 0:
                raise ValueError("redemption value must be non-negative")

    @property
    def finite(self) -> bool:
        return self.horizon is not None


def fundamental_value(params: MarketParams, t: int) -> Decimal:
    """Discounted expected dividends plus, for a finite horizon, the discounted redemption."""
    r = params.interest_rate
    ed = params.expected_dividend
    if not params.finite:
        return ed / r
    if t > params.horizon:
        raise ValueError(f"round {t} is past the horizon {params.horizon}")
    periods = params.horizon - t + 1
    growth = 1 + r
    value = Decimal(0)
    discount = Decimal(1)
    for _ in range(periods):
        discount /= growth
        value += ed * discount
    return value + params.redemption * discount


def calibrated_gbm_drift(
    params: MarketParams, t: int, target_value: Optional[Decimal] = None
) -> Decimal:
    """Drift that holds the fundamental at ``target_value`` (default ``E[D]/r``)."""
    if not params.finite:
        raise ValueError("drift calibration needs a finite horizon")
    r = params.interest_rate
    v_star = params.expected_dividend / r if target_value is None else to_decimal(target_value)
    remaining = Decimal(params.horizon - t)
    return r * v_star - r * params.redemption * (-r * remaining).exp()


def is_payment_round(process: DividendProcess, round_no: int) -> bool:
    return round_no % process.payment_interval == 0


def rounds_until_payment(process: DividendProcess, round_no: int) -> int:
    """Rounds until the next payment as seen while deciding in ``round_no``.

    Payments happen at the end of a round, so a payment due this round is 1 away.
    """
    return (-round_no) % process.payment_interval + 1


def pay_dividend(
    process: DividendProcess, rng: np.random.Generator, accounts: Iterable[AgentAccount]
) -> tuple[Decimal, list[AgentAccount]]:
    """Draw one per-share dividend and credit every holder's dividend account."""
    accounts = list(accounts)
    per_share = money(process.draw(rng))
    for acct in accounts:
        if acct.shares:
            acct.dividend_cash += per_share * acct.shares
    return per_share, accounts


def accrue_interest(rate: Decimal, accounts: Iterable[AgentAccount]) -> list[AgentAccount]:
    """Simple per-round interest on main cash, credited to the dividend account."""
    rate = to_decimal(rate)
    accounts = list(accounts)
    for acct in accounts:
        if acct.main_cash > 0:
            acct.dividend_cash += money(rate * acct.main_cash)
    return accounts


def redeem(accounts: Iterable[AgentAccount], value: Decimal) -> list[AgentAccount]:
    """Terminal redemption: every share converts to ``value`` of main cash."""
    accounts = list(accounts)
    for acct in accounts:
        acct.main_cash += money(value) * acct.shares
        acct.shares = 0
        acct.committed_shares = 0
    return accounts
