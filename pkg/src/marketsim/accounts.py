"""Agent balances under the no-borrowing and no-short-selling rules."""

from __future__ import annotations

from dataclasses import dataclass
from decimal import Decimal

from .money import ZERO, money


class ConstraintViolation(RuntimeError):
    """An account went below zero available cash or shares."""


@dataclass
class AgentAccount:
    agent_id: int
    main_cash: Decimal
    shares: int
    dividend_cash: Decimal = ZERO
    committed_cash: Decimal = ZERO
    committed_shares: int = 0

    def __post_init__(self) -> None:
        self.main_cash = money(self.main_cash)
        self.dividend_cash = money(self.dividend_cash)
        self.committed_cash = money(self.committed_cash)
        self.check()

    @property
    def available_cash(self) -> Decimal:
        return self.main_cash - self.committed_cash

    @property
    def available_shares(self) -> int:
        return self.shares - self.committed_shares

    def check(self) -> None:
        if self.main_cash < 0 or self.dividend_cash < 0 or self.shares < 0:
            raise ConstraintViolation(f"agent {self.agent_id}: negative balance {self}")
        if self.committed_cash < 0 or self.committed_shares < 0:
            raise ConstraintViolation(f"agent {self.agent_id}: negative commitment {self}")
        if self.available_cash < 0:
            raise ConstraintViolation(
                f"agent {self.agent_id}: available cash {self.available_cash} < 0")
        if self.available_shares < 0:
            raise ConstraintViolation(
                f"agent {self.agent_id}: available shares {self.available_shares} < 0")

    def buy(self, quantity: int, price: Decimal) -> None:
        self.main_cash -= price * quantity
        self.shares += quantity

    def sell(self, quantity: int, price: Decimal) -> None:
        self.main_cash += price * quantity
        self.shares -= quantity

    def copy(self) -> "AgentAccount":
        return AgentAccount(self.agent_id, self.main_cash, self.shares, self.dividend_cash,
                            self.committed_cash, self.committed_shares)


def wealth(account: AgentAccount, price: Decimal) -> Decimal:
    """Main cash plus dividend cash plus shares marked at ``price``."""
    return money(account.main_cash + account.dividend_cash + account.shares * price)


def trading_wealth(account: AgentAccount, price: Decimal) -> Decimal:
    """Wealth excluding the non-tradeable dividend account."""
    return money(account.main_cash + account.shares * price)
