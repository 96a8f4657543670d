from ..accounts import AgentAccount, wealth
from .base import Agent, DecisionOutcome, LinearAgent, RuleAgent
from .linear import LinearCoefficients, linear_decide, linear_signal, market_probability, regressors
from .rules import RULE_TYPES, size_rule, strategy_decide
from .types import (
    DividendInfo,
    HistoryPoint,
    MarketSnapshot,
    NewsSignal,
    OrderRequest,
    ReplaceDecision,
    StrategyParams,
    TradeDecision,
)
from .validation import AcceptedOrder, Rejection, ValidationResult, validate_decision

__all__ = [
    "AcceptedOrder", "Agent", "AgentAccount", "DecisionOutcome", "DividendInfo", "HistoryPoint",
    "LinearAgent", "LinearCoefficients", "MarketSnapshot", "NewsSignal", "OrderRequest",
    "RULE_TYPES", "Rejection", "ReplaceDecision", "RuleAgent", "StrategyParams", "TradeDecision",
    "ValidationResult", "linear_decide", "linear_signal", "market_probability", "regressors",
    "size_rule", "strategy_decide", "validate_decision", "wealth",
]
