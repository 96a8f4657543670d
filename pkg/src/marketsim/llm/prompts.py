"""System prompts per agent type and the per-round user prompt."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from decimal import Decimal
from typing import Optional, Sequence

from ..accounts import AgentAccount
from ..money import fmt_money
from ..orderbook import Order, Side
from ..agents.types import MarketSnapshot, TradeDecision

SYSTEM_PROMPTS: dict[str, str] = {
    "value": """You are a value investor who focuses on fundamental analysis.
        You believe in mean reversion and try to buy undervalued assets and sell overvalued ones.""",
    "momentum": """You are a momentum trader who focuses on price trends and volume.
        You believe that 'the trend is your friend' and try to identify and follow market momentum.""",
    "market_maker": """You are a professional market maker who provides liquidity to the market.

        Your profit comes from capturing the spread between bid and ask prices, not from directional price movement.

        IMPORTANT: There is NO SHORT SELLING allowed. You can only sell shares you already own.

        Trading Guidelines:
        - Place LIMIT buy orders slightly below the current market price (1-3% lower)
        - Place LIMIT sell orders slightly above the current market price (1-3% higher)
        - Your spread should be proportional to volatility but typically 2-6%
        - NEVER place sell orders more than 10% above the current market price
        - Adjust your spread width based on recent price volatility

        Inventory Management (No Short Selling):
        - Monitor your current inventory in the market data
        - Only place sell orders for quantities you actually own
        - If you have no inventory, focus on buy orders first
        - As you acquire inventory, gradually place sell orders
        - If inventory grows too large, reduce or pause buy orders
        - Adjust your buy/sell ratio based on current inventory level

        Example: If price = $100, you might place buy orders at $97-99 and sell orders at $101-103,
        but limit your sell quantity to what you currently own.

        Remember that extreme spreads (e.g., buying at $3 and selling at $30) will not execute and will lead to losses.""",
    "contrarian": """You are a contrarian trader who looks for excessive market moves to trade against.
        You believe markets often overreact and try to profit from reversals.""",
    "optimistic": """You are an optimistic trader who firmly believes assets are significantly undervalued.

        Your Core Beliefs:
        - The probability of maximum dividends is much higher than stated (80-90%)""",
    "pessimistic": """You are a pessimistic trader who firmly believes assets are significantly overvalued.

        Your Core Beliefs:
        - The probability of minimum dividends is much higher than stated (80-90%)""",
    "speculator": "You are a speculator who tries to profit from market inefficiencies.",
    "retail": "You are a retail trader.",
    "hold": "You are a holding agent that never trades.",
    "default": "You are a trading agent in an experimental asset market. "
               "Decide whether to buy, sell or hold using the market information provided.",
    "news": "You are a news trader. You buy on positive news and sell on negative news, "
            "taking into account how far the price has already moved.",
}

LLM_TYPES = tuple(SYSTEM_PROMPTS)

ANALYSIS_BLOCK = """Your analysis should include:
valuation_reasoning: Your numerical analysis of the asset's fundamental value
valuation: Your estimate of the asset's current fundamental value
price_target_reasoning: Your numerical analysis of the asset's price target
price_target: Your predicted price for the next round
reasoning: Your explanation for the trading decision"""

TRADING_OPTIONS_BLOCK = """Trading Options:
New Orders (replace_decision='Add'):
Single or multiple orders allowed
For each order:
Market order: Set order_type='market'
Limit order: Set order_type='limit' and specify price_limit
IMPORTANT: Sell orders require sufficient available shares
Short selling is NOT allowed
Cancel Orders (replace_decision='Cancel'):
Return an empty orders list: orders=[]
Replace Orders (replace_decision='Replace'):
Cancel all outstanding orders, then place the listed orders

Your decision must include:
orders: list of orders (empty list for Hold/Cancel)
For Buy/Sell orders, each must contain:
decision: "Buy" or "Sell"
quantity: number of shares
order_type: "market" or "limit"
price_limit: required for limit orders
reasoning: brief explanation
replace_decision: "Add", "Cancel", or "Replace"
Respond with a single JSON object containing exactly these fields and nothing else."""


@dataclass(frozen=True)
class PromptBundle:
    system_prompt: str
    user_prompt: str

    @property
    def digest(self) -> str:
        h = hashlib.sha256()
        h.update(self.system_prompt.encode())
        h.update(b"\0")
        h.update(self.user_prompt.encode())
        return h.hexdigest()


def _usd(x) -> str:
    return f"${fmt_money(x)}"


def _levels(levels: Sequence[tuple[Decimal, int]]) -> list[str]:
    return [f"{qty} shares @ {_usd(price)}" for price, qty in levels] or ["None"]


def market_state_block(s: MarketSnapshot) -> str:
    horizon = "Infinite" if s.total_rounds is None else str(s.total_rounds)
    fundamental = "Unavailable" if s.fundamental_estimate is None else _usd(s.fundamental_estimate)
    ratio = "Unavailable" if s.pf_ratio is None else f"{s.pf_ratio:.2f}"
    return "\n".join([
        "Market State:",
        f"Last Price: {_usd(s.last_price)}",
        f"Round Number: {s.round}/{horizon}",
        f"Best Public Estimate of Risk-Neutral Fundamental Value: {fundamental}",
        f"Last Trading Volume: {s.last_volume:.2f}",
        f"Price/Fundamental Ratio: {ratio}",
    ])


def depth_block(s: MarketSnapshot) -> str:
    d = s.depth
    best_bid = "None" if d.best_bid is None else _usd(d.best_bid)
    best_ask = "None" if d.best_ask is None else _usd(d.best_ask)
    # asks are listed from the highest price down to the best ask
    return "\n".join([
        "Market Depth:",
        f"Best Bid: {best_bid}",
        f"Best Ask: {best_ask}",
        "Sell Orders:",
        *_levels(list(reversed(d.ask_levels))),
        "Buy Orders:",
        *_levels(d.bid_levels),
    ])


def outstanding_block(orders: Sequence[Order]) -> str:
    lines = ["Your Outstanding Orders:"]
    for side, title in ((Side.BUY, "Buy Orders:"), (Side.SELL, "Sell Orders:")):
        mine = sorted((o for o in orders if o.side is side),
                      key=lambda o: (-o.price_limit if side is Side.BUY else o.price_limit,
                                     o.sequence))
        if mine:
            lines.append(title)
            lines.extend(f"{o.remaining} shares @ {_usd(o.price_limit)}" for o in mine)
    if len(lines) == 1:
        lines.append("None")
    return "\n".join(lines)


def position_block(a: AgentAccount) -> str:
    return "\n".join([
        "Your Position:",
        f"Available Shares: {a.available_shares} shares (Short selling is not allowed)",
        f"Main Cash Account: {_usd(a.available_cash)}",
        f"Dividend Cash Account (not available for trading): {_usd(a.dividend_cash)}",
        f"Total Available Cash: {_usd(a.available_cash)} (Borrowing is not allowed)",
        f"Shares in Orders: {a.committed_shares} shares",
        f"Cash in Orders: {_usd(a.committed_cash)}",
    ])


def history_block(s: MarketSnapshot) -> str:
    lines = ["Price History (last 5 rounds):"]
    lines += [f"Round {p.round}: {_usd(p.price)} (Volume: {p.volume})" for p in s.price_history[:5]]
    return "\n".join(lines)


def _pct(p: float) -> str:
    return f"{p * 100:g}%"


def fundamentals_block(s: MarketSnapshot) -> str:
    lines = []
    info = s.dividend_info
    if info is not None:
        last = "None" if info.last_paid is None else _usd(info.last_paid)
        lines += [
            "Dividend Information:",
            f"Last Paid Dividend: {last}",
            f"Expected Dividend: {_usd(info.expected)}",
            f"Base Dividend: {_usd(info.base)}",
            f"Variation Amount: {_usd(info.variation)}",
            f"Maximum Scenario: {_usd(info.max_scenario)} with "
            f"{_pct(info.probability_high)} probability",
            f"Minimum Scenario: {_usd(info.min_scenario)} with "
            f"{_pct(1 - info.probability_high)} probability",
            "Payment Schedule:",
            f"Next Payment in: {info.next_payment_in} rounds",
            "Payment Destination: dividend account (non-tradeable)",
        ]
    lines.append("Redemption Information:")
    if s.total_rounds is None:
        lines.append("This market has an infinite time horizon. Shares will not be redeemed.")
    else:
        value = "None" if s.redemption_value is None else _usd(s.redemption_value)
        lines.append(f"This market has a finite horizon of {s.total_rounds} rounds. "
                     f"Shares will be redeemed at {value} per share after round {s.total_rounds}.")
    if s.interest_rate is not None:
        lines += [
            "Interest Rate Information:",
            f"Base Rate: {float(s.interest_rate) * 100:.1f}%",
            "Compound Frequency: 1 times per round",
            "Payment Destination: dividend account (separate from trading)",
        ]
    return "\n".join(lines)


def own_history_block(past: Sequence[tuple[int, TradeDecision]]) -> str:
    lines = ["Your Recent Decisions:"]
    for round_no, d in past:
        orders = ", ".join(
            f"{o.side.value} {o.quantity} {o.kind.value.lower()}"
            + (f" @ {_usd(o.price_limit)}" if o.price_limit is not None else "")
            for o in d.orders) or "no orders"
        lines.append(f"Round {round_no}: {d.replace_decision.value}; {orders}; {d.reasoning}")
    return "\n".join(lines)


def assemble_prompt(agent_type: str, snapshot: MarketSnapshot, account: AgentAccount,
                    outstanding_orders: Sequence[Order],
                    own_history: Optional[Sequence[tuple[int, TradeDecision]]] = None
                    ) -> PromptBundle:
    """System prompt for ``agent_type`` and the user prompt for this round."""
    try:
        system = SYSTEM_PROMPTS[agent_type]
    except KeyError:
        raise ValueError(f"no system prompt for agent type {agent_type!r}") from None
    blocks = [
        market_state_block(snapshot),
        depth_block(snapshot),
        outstanding_block(outstanding_orders),
        position_block(account),
        history_block(snapshot),
        fundamentals_block(snapshot),
    ]
    if own_history:
        blocks.append(own_history_block(own_history))
    blocks += [ANALYSIS_BLOCK, TRADING_OPTIONS_BLOCK]
    return PromptBundle(system, "\n\n".join(blocks) + "\n")
