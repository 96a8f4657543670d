"""Round orchestration.

Each round: snapshot the market, collect every agent's decision against the
same snapshot, sequence agents in a seeded random order, apply cancels and
validated orders, clear, settle, pay dividends and interest, check
conservation, record.

Randomness comes from independent ``SeedSequence`` streams keyed by purpose,
round and agent, so adding or removing one consumer never shifts another.
"""

from __future__ import annotations

from copy import copy
from dataclasses import dataclass, field
from decimal import Decimal
from typing import Optional, Sequence

import numpy as np

from .accounts import AgentAccount, wealth
from .agents.base import Agent
from .agents.types import (
    DividendInfo,
    HistoryPoint,
    MarketSnapshot,
    NewsSignal,
    ReplaceDecision,
    TradeDecision,
)
from .agents.validation import Rejection, validate_decision
from .asset import (
    BernoulliDividend,
    DividendProcess,
    MarketParams,
    accrue_interest,
    fundamental_value,
    is_payment_round,
    pay_dividend,
    redeem,
    rounds_until_payment,
)
from .matching import Trade, run_round
from .money import ZERO, money
from .orderbook import Order, OrderBook, OrderKind, Side

SHUFFLE_STREAM = 1
AGENT_STREAM = 2
DIVIDEND_STREAM = 3
SWEEP_STREAM = 4

HISTORY_LENGTH = 5


class ConservationError(RuntimeError):
    """Cash or shares were created or destroyed by trading. Always an engine bug."""


def stream(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=tuple(key)))


def seeded_shuffle(agent_ids: Sequence[int], seed: int, round_no: int) -> list[int]:
    """Deterministic permutation of ``agent_ids`` keyed by ``(seed, round_no)``."""
    ids = list(agent_ids)
    perm = stream(seed, SHUFFLE_STREAM, round_no).permutation(len(ids))
    return [ids[i] for i in perm]


@dataclass
class AgentSetup:
    agent: Agent
    cash: Decimal
    shares: int


@dataclass
class Scenario:
    agents: list[AgentSetup]
    initial_price: Decimal
    rounds: int
    market: MarketParams
    dividend: DividendProcess
    seed: int = 0
    news: NewsSignal = field(default_factory=NewsSignal)
    name: str = "scenario"

    def __post_init__(self) -> None:
        self.initial_price = money(self.initial_price)
        if not self.agents:
            raise ValueError("a scenario needs at least one agent")
        if self.initial_price <= 0:
            raise ValueError("initial_price must be positive")
        if self.rounds < 1:
            raise ValueError("rounds must be at least 1")
        if self.market.finite and self.rounds > self.market.horizon:
            raise ValueError("rounds exceed the finite horizon")
        ids = [a.agent.agent_id for a in self.agents]
        if len(set(ids)) != len(ids):
            raise ValueError("agent ids must be unique")


@dataclass(frozen=True)
class AccountState:
    agent_id: int
    agent_type: str
    main_cash: Decimal
    dividend_cash: Decimal
    shares: int
    committed_cash: Decimal
    committed_shares: int
    wealth: Decimal


@dataclass(frozen=True)
class OrderEvent:
    round: int
    order_id: int
    agent_id: int
    side: str
    kind: str
    requested: int
    quantity: int
    price_limit: Optional[Decimal]
    sequence: int
    filled: int
    status: str


ORDER_EVENTS = ("placed", "filled", "partial", "cancelled", "converted")


@dataclass(frozen=True)
class OrderLogEntry:
    """One line of the order log. ``quantity`` is the shares the event concerns."""

    round: int
    order_id: int
    agent_id: int
    side: str
    kind: str
    quantity: int
    price_limit: Optional[Decimal]
    event: str


def _log(round_no: int, o: Order, quantity: int, event: str) -> OrderLogEntry:
    return OrderLogEntry(round_no, o.id, o.agent_id, o.side.value, o.kind.value, quantity,
                         o.price_limit, event)


@dataclass
class DecisionEntry:
    round: int
    agent_id: int
    agent_type: str
    decision: TradeDecision
    accepted: int
    rejections: list[Rejection]
    prompt_hash: Optional[str] = None
    raw_payload: Optional[str] = None
    attempts: int = 0
    anomalies: list[str] = field(default_factory=list)


@dataclass
class RoundRecord:
    round: int
    clearing_price: Decimal
    fundamental_value: Optional[Decimal]
    volume: int
    trades: list[Trade]
    accounts: tuple[AccountState, ...]
    decisions: list[DecisionEntry]
    orders: list[OrderEvent]
    dividend_paid: Optional[Decimal] = None
    best_bid: Optional[Decimal] = None
    best_ask: Optional[Decimal] = None
    anomalies: list[str] = field(default_factory=list)
    order_log: list[OrderLogEntry] = field(default_factory=list)

    @property
    def num_trades(self) -> int:
        return len(self.trades)


@dataclass
class RunResult:
    scenario: Scenario
    records: list[RoundRecord]
    final_accounts: tuple[AccountState, ...]
    redeemed: bool = False
    closing_log: list[OrderLogEntry] = field(default_factory=list)

    @property
    def prices(self) -> list[Decimal]:
        return [r.clearing_price for r in self.records]

    @property
    def trades(self) -> list[Trade]:
        return [t for r in self.records for t in r.trades]

    @property
    def decisions(self) -> list[DecisionEntry]:
        return [d for r in self.records for d in r.decisions]


class Simulation:
    def __init__(self, scenario: Scenario):
        self.scenario = scenario
        self.book = OrderBook()
        self.agents = {s.agent.agent_id: s.agent for s in scenario.agents}
        self.accounts = {
            s.agent.agent_id: AgentAccount(s.agent.agent_id, s.cash, s.shares)
            for s in scenario.agents
        }
        for s in scenario.agents:
            bind = getattr(s.agent, "bind_endowment", None)
            if bind is not None:
                bind(s.shares)
        self.records: list[RoundRecord] = []
        self.next_order_id = 1
        self.next_trade_id = 1
        self.last_dividend: Optional[Decimal] = None

    # -- snapshots ---------------------------------------------------------

    def fundamental(self, round_no: int) -> Decimal:
        return money(fundamental_value(self.scenario.market, round_no))

    def account_states(self, price: Decimal) -> tuple[AccountState, ...]:
        return tuple(
            AccountState(a.agent_id, self.agents[a.agent_id].agent_type, a.main_cash,
                         a.dividend_cash, a.shares, a.committed_cash, a.committed_shares,
                         wealth(a, price))
            for a in sorted(self.accounts.values(), key=lambda a: a.agent_id)
        )

    def snapshot(self, round_no: int) -> MarketSnapshot:
        sc = self.scenario
        last = self.records[-1]
        history = tuple(HistoryPoint(r.round, r.clearing_price, r.volume)
                        for r in reversed(self.records[-HISTORY_LENGTH:]))
        proc = sc.dividend
        base = proc.base if isinstance(proc, BernoulliDividend) else money(proc.level)
        variation = proc.variation if isinstance(proc, BernoulliDividend) else ZERO
        prob = proc.probability_high if isinstance(proc, BernoulliDividend) else 0.5
        info = DividendInfo(
            last_paid=self.last_dividend,
            expected=money(sc.market.expected_dividend),
            base=base,
            variation=variation,
            probability_high=prob,
            next_payment_in=rounds_until_payment(proc, round_no),
        )
        return MarketSnapshot(
            last_price=last.clearing_price,
            round=round_no,
            total_rounds=sc.market.horizon,
            fundamental_estimate=self.fundamental(round_no),
            last_volume=last.volume,
            depth=self.book.depth(),
            price_history=history,
            dividend_info=info,
            interest_rate=sc.market.interest_rate,
            redemption_value=sc.market.redemption if sc.market.finite else None,
        )

    # -- round -------------------------------------------------------------

    def recompute_commitments(self) -> None:
        cash = {aid: ZERO for aid in self.accounts}
        shares = {aid: 0 for aid in self.accounts}
        for o in self.book.orders():
            if o.side is Side.BUY:
                cash[o.agent_id] += o.remaining * o.price_limit
            else:
                shares[o.agent_id] += o.remaining
        for aid, acct in self.accounts.items():
            acct.committed_cash = cash[aid]
            acct.committed_shares = shares[aid]

    def release(self, agent_id: int) -> list[int]:
        """Free the commitments of an agent's resting orders; returns their ids."""
        acct = self.accounts[agent_id]
        ids = []
        for o in self.book.orders_of(agent_id):
            ids.append(o.id)
            if o.side is Side.BUY:
                acct.committed_cash -= o.remaining * o.price_limit
            else:
                acct.committed_shares -= o.remaining
        return ids

    def totals(self) -> tuple[Decimal, int]:
        return (sum((a.main_cash for a in self.accounts.values()), ZERO),
                sum(a.shares for a in self.accounts.values()))

    def initial_record(self) -> RoundRecord:
        price = self.scenario.initial_price
        return RoundRecord(0, price, self.fundamental(0), 0, [], self.account_states(price),
                           [], [])

    def step(self, round_no: int) -> RoundRecord:
        sc = self.scenario
        base = self.snapshot(round_no)
        news = sc.news.at(round_no)
        prev_price = base.last_price

        outcomes = {}
        for aid in sorted(self.agents):
            agent = self.agents[aid]
            acct = self.accounts[aid]
            outcomes[aid] = agent.decide(
                agent.view(base), acct.copy(), tuple(copy(o) for o in self.book.orders_of(aid)), news,
                stream(sc.seed, AGENT_STREAM, round_no, aid))

        cancels: list[int] = []
        new_orders: list[Order] = []
        entries: list[DecisionEntry] = []
        requested: dict[int, int] = {}
        for aid in seeded_shuffle(sorted(self.agents), sc.seed, round_no):
            out = outcomes[aid]
            decision = out.decision
            if decision.replace_decision in (ReplaceDecision.CANCEL, ReplaceDecision.REPLACE):
                cancels.extend(self.release(aid))
            result = validate_decision(decision, self.accounts[aid], base)
            for acc in result.accepted:
                req = acc.request
                order = Order(
                    id=self.next_order_id,
                    agent_id=aid,
                    side=req.side,
                    kind=req.kind,
                    quantity=req.quantity,
                    remaining=req.quantity,
                    price_limit=req.price_limit,
                    round_submitted=round_no,
                    sequence=self.book.next_sequence(),
                    cash_cap=acc.reserved_cash if req.kind is OrderKind.MARKET and
                    req.side is Side.BUY else None,
                )
                self.next_order_id += 1
                requested[order.id] = acc.requested_quantity
                new_orders.append(order)
            entries.append(DecisionEntry(
                round_no, aid, self.agents[aid].agent_type, decision, len(result.accepted),
                result.rejections, out.prompt_hash, out.raw_payload, out.attempts,
                list(out.anomalies)))

        known = {o.id: o for o in self.book.orders()}
        known.update((o.id, o) for o in new_orders)
        cash_before, shares_before = self.totals()
        result = run_round(self.book, cancels, new_orders, prev_price,
                           round_no=round_no, first_trade_id=self.next_trade_id)
        self.next_trade_id += len(result.trades)
        for t in result.trades:
            self.accounts[t.buyer_agent].buy(t.quantity, t.price)
            self.accounts[t.seller_agent].sell(t.quantity, t.price)
        self.recompute_commitments()
        cash_after, shares_after = self.totals()
        if cash_after != cash_before or shares_after != shares_before:
            raise ConservationError(
                f"round {round_no}: cash {cash_before} -> {cash_after}, "
                f"shares {shares_before} -> {shares_after}")
        for acct in self.accounts.values():
            acct.check()

        dividend = None
        if is_payment_round(sc.dividend, round_no):
            dividend, _ = pay_dividend(sc.dividend, stream(sc.seed, DIVIDEND_STREAM, round_no),
                                       self.accounts.values())
            self.last_dividend = dividend
        accrue_interest(sc.market.interest_rate, self.accounts.values())
        if self.totals()[0] != cash_after:
            raise ConservationError(f"round {round_no}: income moved main cash")

        orders = self.order_events(round_no, new_orders, result, requested)
        order_log = self.order_log(round_no, new_orders, known, result)
        price = result.clearing_price
        anomalies = [f"agent {e.agent_id}: {a}" for e in entries for a in e.anomalies]
        return RoundRecord(
            round=round_no,
            clearing_price=price,
            fundamental_value=self.fundamental(round_no),
            volume=result.volume,
            trades=result.trades,
            accounts=self.account_states(price),
            decisions=entries,
            orders=orders,
            dividend_paid=dividend,
            best_bid=self.book.best_bid(),
            best_ask=self.book.best_ask(),
            anomalies=anomalies,
            order_log=order_log,
        )

    def order_log(self, round_no, new_orders, known, result) -> list[OrderLogEntry]:
        log = [_log(round_no, o, o.remaining, "cancelled") for o in result.cancelled]
        log += [_log(round_no, o, o.quantity, "placed") for o in new_orders]
        log += [_log(round_no, c, c.quantity - known[c.id].filled, "converted")
                for c in result.converted_orders]
        fills: dict[int, int] = {}
        for t in result.trades:
            fills[t.buy_order] = fills.get(t.buy_order, 0) + t.quantity
            fills[t.sell_order] = fills.get(t.sell_order, 0) + t.quantity
        converted = {c.id: c for c in result.converted_orders}
        for oid in sorted(fills):
            o = converted.get(oid, known[oid])
            done = o.remaining == 0 and self.book.get(oid) is None
            log.append(_log(round_no, o, fills[oid], "filled" if done else "partial"))
        log += [_log(round_no, o, o.remaining, "cancelled") for o in result.unexecuted
                if o.remaining]
        return log

    def order_events(self, round_no, new_orders, result, requested) -> list[OrderEvent]:
        converted = {o.id: o for o in result.converted_orders}
        events = []
        for o in new_orders:
            final = converted.get(o.id, o)
            filled = final.quantity - final.remaining
            if filled == o.quantity:
                status = "filled"
            elif self.book.get(o.id) is final:
                status = "resting"
            else:
                status = "unexecuted"
            if status != "filled" and filled:
                status = "partial_" + status
            events.append(OrderEvent(
                round_no, o.id, o.agent_id, o.side.value, o.kind.value, requested[o.id],
                o.quantity, o.price_limit, o.sequence, filled, status))
        return events

    def run(self) -> RunResult:
        sc = self.scenario
        self.records = [self.initial_record()]
        for t in range(1, sc.rounds + 1):
            self.records.append(self.step(t))
        redeemed = False
        price = self.records[-1].clearing_price
        closing: list[OrderLogEntry] = []
        if sc.market.finite and sc.rounds == sc.market.horizon:
            for o in list(self.book.orders()):
                closing.append(_log(sc.rounds, o, o.remaining, "cancelled"))
                self.book.cancel(o.id)
            self.recompute_commitments()
            redeem(self.accounts.values(), sc.market.redemption)
            redeemed = True
            price = money(sc.market.redemption)
        return RunResult(sc, self.records, self.account_states(price), redeemed, closing)


def run(scenario: Scenario) -> RunResult:
    """Run ``scenario`` to completion. Same scenario and seed give identical records."""
    return Simulation(scenario).run()
