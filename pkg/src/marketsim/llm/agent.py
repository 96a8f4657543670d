"""Agents whose decisions come from a chat-completion client."""

from __future__ import annotations

from collections import deque
from dataclasses import replace
from typing import Optional

from ..accounts import AgentAccount
from ..agents.base import Agent, DecisionOutcome
from ..agents.rules import strategy_decide
from ..money import money
from ..agents.types import MarketSnapshot, StrategyParams, TradeDecision
from .client import LlmClient, RequestContext, TransportError
from .parsing import ParseError, parse_decision, serialize
from .prompts import SYSTEM_PROMPTS, PromptBundle, assemble_prompt

# rule used to stand in for each prompt type when no live model is available
SURROGATE_RULES = {
    "value": "value",
    "momentum": "momentum",
    "market_maker": "market_maker",
    "contrarian": "contrarian",
    "optimistic": "optimistic",
    "pessimistic": "pessimistic",
    "speculator": "speculator",
    "news": "news",
    "default": "value",
    "retail": "momentum",
    "hold": "hold",
}


class LlmAgent(Agent):
    """Prompts a client each round and parses its reply.

    Unparseable replies are re-requested up to ``parse_retries`` times. When
    that budget or the transport gives out, the agent holds and the failure is
    recorded as an anomaly. Configuration errors propagate.
    """

    kind = "llm"

    def __init__(self, agent_id: int, agent_type: str, client: LlmClient,
                 hide_fundamental: bool = False, parse_retries: int = 2,
                 own_history: int = 0):
        if agent_type not in SYSTEM_PROMPTS:
            raise ValueError(f"no system prompt for agent type {agent_type!r}")
        super().__init__(agent_id, agent_type, hide_fundamental)
        self.client = client
        self.parse_retries = parse_retries
        self.past: deque[tuple[int, TradeDecision]] = deque(maxlen=own_history or None)
        self.own_history = own_history
        self.endowment: Optional[int] = None

    def bind_endowment(self, shares: int) -> None:
        self.endowment = shares

    def decide(self, snapshot, account, outstanding, news, rng) -> DecisionOutcome:
        history = list(self.past) if self.own_history else None
        bundle = assemble_prompt(self.agent_type, snapshot, account, outstanding, history)
        ctx = RequestContext(self.agent_id, snapshot.round, self.agent_type, snapshot, account,
                             news, self.endowment)
        anomalies: list[str] = []
        attempts = 0
        raw_text = None
        for _ in range(self.parse_retries + 1):
            try:
                raw = self.client.complete(bundle, ctx)
            except TransportError as exc:
                attempts += exc.attempts
                anomalies.append(f"transport: {exc}")
                break
            attempts += raw.attempts
            raw_text = raw.text
            try:
                decision = parse_decision(raw.text)
            except ParseError as exc:
                anomalies.append(f"parse: {exc}")
                continue
            if self.own_history:
                self.past.append((snapshot.round, decision))
            return DecisionOutcome(decision, bundle.digest, raw.text, attempts, anomalies)
        hold = TradeDecision.hold("no valid model decision; holding")
        return DecisionOutcome(hold, bundle.digest, raw_text, attempts, anomalies)


def own_estimate(snapshot: MarketSnapshot) -> MarketSnapshot:
    """Fill a hidden fundamental with the perpetuity value of the prompt's dividend data."""
    if snapshot.fundamental_estimate is not None:
        return snapshot
    info, rate = snapshot.dividend_info, snapshot.interest_rate
    if info is None or not rate:
        return snapshot
    return replace(snapshot, fundamental_estimate=money(info.expected / rate))


class SurrogateResponder:
    """Answers prompts with the matching rule strategy, serialized as a model reply."""

    def __init__(self, params: Optional[StrategyParams] = None):
        self.params = params or StrategyParams()

    def __call__(self, bundle: PromptBundle, ctx: RequestContext) -> str:
        snapshot: MarketSnapshot = ctx.snapshot
        account: AgentAccount = ctx.account
        rule = SURROGATE_RULES.get(ctx.agent_type, "hold")
        snapshot = own_estimate(snapshot)
        params = self.params
        if params.target_inventory is None and ctx.endowment is not None:
            params = replace(params, target_inventory=ctx.endowment)
        d = strategy_decide(rule, params, snapshot, account, ctx.news)
        fallback = snapshot.fundamental_estimate or snapshot.last_price
        d = replace(d, valuation=d.valuation if d.valuation is not None else fallback,
                    price_target=d.price_target if d.price_target is not None else
                    snapshot.last_price)
        return serialize(d)
