"""Common agent interface used by the simulator."""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from ..accounts import AgentAccount
from ..orderbook import Order
from .linear import LinearCoefficients, linear_decide
from .rules import strategy_decide
from .types import MarketSnapshot, StrategyParams, TradeDecision


@dataclass
class DecisionOutcome:
    decision: TradeDecision
    prompt_hash: Optional[str] = None
    raw_payload: Optional[str] = None
    attempts: int = 0
    anomalies: list[str] = field(default_factory=list)


class Agent(ABC):
    kind: str = "abstract"

    def __init__(self, agent_id: int, agent_type: str, hide_fundamental: bool = False):
        self.agent_id = agent_id
        self.agent_type = agent_type
        self.hide_fundamental = hide_fundamental

    def view(self, snapshot: MarketSnapshot) -> MarketSnapshot:
        return snapshot.hide_fundamental() if self.hide_fundamental else snapshot

    @abstractmethod
    def decide(self, snapshot: MarketSnapshot, account: AgentAccount,
               outstanding: Sequence[Order], news: float,
               rng: np.random.Generator) -> DecisionOutcome:
        """Return this round's decision. ``snapshot`` is already filtered by :meth:`view`."""

    def __repr__(self) -> str:
        return f"{type(self).__name__}(id={self.agent_id}, type={self.agent_type!r})"


class RuleAgent(Agent):
    kind = "rule"

    def __init__(self, agent_id: int, agent_type: str, params: Optional[StrategyParams] = None,
                 hide_fundamental: bool = False):
        super().__init__(agent_id, agent_type, hide_fundamental)
        self.params = params or StrategyParams()

    def bind_endowment(self, shares: int) -> None:
        """Default the target inventory to the initial share endowment."""
        if self.params.target_inventory is None:
            self.params = replace(self.params, target_inventory=shares)

    def decide(self, snapshot, account, outstanding, news, rng) -> DecisionOutcome:
        return DecisionOutcome(strategy_decide(self.agent_type, self.params, snapshot,
                                               account, news))


class LinearAgent(RuleAgent):
    kind = "linear"

    def __init__(self, agent_id: int, agent_type: str, coefficients: LinearCoefficients,
                 params: Optional[StrategyParams] = None, hide_fundamental: bool = False):
        super().__init__(agent_id, agent_type, params, hide_fundamental)
        self.coefficients = coefficients

    def decide(self, snapshot, account, outstanding, news, rng) -> DecisionOutcome:
        return DecisionOutcome(linear_decide(self.agent_type, self.coefficients, snapshot,
                                             account, news, rng, self.params))
