import random
from decimal import Decimal

D = Decimal

from marketsim.orderbook import Order, OrderBook, OrderKind, Side


class OrderFactory:
    """Builds orders with unique ids and sequences issued by a book."""

    def __init__(self, book: OrderBook):
        self.book = book
        self.next_id = 1

    def __call__(self, agent, side, qty, price=None, cash_cap=None, round_no=0):
        side = Side(side) if isinstance(side, str) else side
        kind = OrderKind.MARKET if price is None else OrderKind.LIMIT
        order = Order(
            id=self.next_id,
            agent_id=agent,
            side=side,
            kind=kind,
            quantity=qty,
            remaining=qty,
            price_limit=None if price is None else Decimal(str(price)),
            round_submitted=round_no,
            sequence=self.book.next_sequence(),
            cash_cap=None if cash_cap is None else Decimal(str(cash_cap)),
        )
        self.next_id += 1
        return order


def random_instance(rng: random.Random, max_orders: int = 16):
    """A resting book plus one round of cancels and new orders, <= max_orders in total."""
    from marketsim.matching import run_round

    book = OrderBook()
    factory = OrderFactory(book)
    lo = rng.randint(1, 90)
    hi = min(100, lo + rng.choice([2, 5, 10, 100]))

    def price():
        return Decimal(rng.randint(lo * 2, hi * 2)) / 2

    n_rest = rng.randint(0, max_orders // 2)
    seed_orders = [
        factory(rng.randint(0, 3), rng.choice("BS") == "B" and "Buy" or "Sell",
                rng.randint(1, 500), price())
        for _ in range(n_rest)
    ]
    run_round(book, [], seed_orders, Decimal(rng.randint(lo, hi)))
    budget = max_orders - len(book)
    n_new = rng.randint(0, budget)
    new = []
    for _ in range(n_new):
        side = "Buy" if rng.random() < 0.5 else "Sell"
        agent = rng.randint(0, 3)
        qty = rng.randint(1, 500)
        if rng.random() < 0.5:
            cap = None
            if side == "Buy" and rng.random() < 0.5:
                cap = Decimal(rng.randint(0, qty * hi))
            new.append(factory(agent, side, qty, None, cash_cap=cap))
        else:
            new.append(factory(agent, side, qty, price()))
    resting_ids = [o.id for o in book.orders()]
    cancels = rng.sample(resting_ids, rng.randint(0, len(resting_ids))) if resting_ids else []
    if rng.random() < 0.2:
        cancels.append(9999)
    prev = None if rng.random() < 0.05 else Decimal(rng.randint(lo * 2, hi * 2)) / 2
    return book, cancels, new, prev


def make_snapshot(price, fundamental="28.00", history=(), depth=None, round_no=1,
                  total_rounds=None, last_volume=0):
    """Snapshot with ``history`` given oldest-first as (price, volume) pairs.

    The current price is appended as the newest history point.
    """
    from marketsim.agents.types import HistoryPoint, MarketSnapshot
    from marketsim.orderbook import DepthSnapshot

    points = [(Decimal(str(p)), v) for p, v in history] + [(Decimal(str(price)), last_volume)]
    start = round_no - len(points)
    hist = tuple(HistoryPoint(start + i, p, v) for i, (p, v) in enumerate(points))[::-1]
    return MarketSnapshot(
        last_price=Decimal(str(price)),
        round=round_no,
        total_rounds=total_rounds,
        fundamental_estimate=None if fundamental is None else Decimal(str(fundamental)),
        last_volume=last_volume,
        depth=depth or DepthSnapshot((), ()),
        price_history=hist[:5],
    )


def _setup(agent, cash="1000000", shares=10_000):
    from marketsim.simulator import AgentSetup

    return AgentSetup(agent, D(cash), shares)


def random_population(seed, rounds=50):
    """Every rule type, several linear agents and a cash-starved buyer, infinite horizon."""
    from marketsim.agents import LinearAgent, LinearCoefficients, RuleAgent, StrategyParams
    from marketsim.asset import BernoulliDividend, MarketParams
    from marketsim.simulator import Scenario

    agents = []
    kinds = ["value", "momentum", "market_maker", "contrarian", "speculator", "optimistic",
             "pessimistic", "news"]
    for i, kind in enumerate(kinds):
        agents.append(_setup(RuleAgent(i, kind, StrategyParams(max_fraction=0.5)),
                             cash=str(50_000 * (i + 1)), shares=1_000 * (8 - i)))
    linear = [("value", {"value_gap": 5000.0}), ("momentum", {"price_change": 800.0}),
              ("speculator", {"expected_change": 1500.0}), ("contrarian", {"neg_zscore": 300.0})]
    for j, (kind, betas) in enumerate(linear, start=len(agents)):
        coeffs = LinearCoefficients(betas, noise_sd=400.0, gamma=(0.0, 0.001, 0.2))
        agents.append(_setup(LinearAgent(j, kind, coeffs), cash="80000", shares=3000))
    agents.append(_setup(RuleAgent(99, "always_buy", StrategyParams(order_size=50)),
                         cash="5000", shares=0))
    return Scenario(agents, D("41.00"), rounds, MarketParams(D("0.05"), D("1.40")),
                    BernoulliDividend(D("1.40"), D("1.00")), seed=seed)


def discovery_scenario(initial_price, seed=1, rounds=30):
    """Four value agents, two market makers at 20x endowment and two speculators."""
    from marketsim.agents import RuleAgent
    from marketsim.asset import BernoulliDividend, MarketParams
    from marketsim.simulator import AgentSetup, Scenario

    agents = []
    for kind, count, scale in (("value", 4, 1), ("market_maker", 2, 20), ("speculator", 2, 1)):
        for _ in range(count):
            agents.append(AgentSetup(RuleAgent(len(agents), kind), D("1000000") * scale,
                                     10_000 * scale))
    return Scenario(agents, D(initial_price), rounds, MarketParams(D("0.05"), D("1.40")),
                    BernoulliDividend(D("1.40"), D("1.00")), seed=seed)


ACCEPTANCE: dict[int, tuple[str, bool, str]] = {}


def record_criterion(number: int, title: str, passed: bool, detail: str) -> None:
    ACCEPTANCE[number] = (title, passed, detail)
    print(f"criterion {number:>2} {'PASS' if passed else 'FAIL'}: {title} ({detail})")


def golden_inputs():
    """Speculator prompt inputs: the worked example book with the fundamental hidden."""
    from marketsim.accounts import AgentAccount
    from marketsim.agents.types import DividendInfo, HistoryPoint, MarketSnapshot
    from marketsim.orderbook import DepthSnapshot, Order, OrderKind, Side

    depth = DepthSnapshot(
        bid_levels=((D("28.00"), 1900), (D("27.50"), 1500), (D("27.00"), 2500)),
        ask_levels=((D("29.00"), 4400), (D("29.50"), 1000), (D("30.00"), 2000),
                    (D("50.40"), 3800), (D("57.00"), 2000)),
    )
    history = (HistoryPoint(3, D("29.00"), 100), HistoryPoint(2, D("29.00"), 100),
               HistoryPoint(1, D("28.00"), 100), HistoryPoint(0, D("56.00"), 0))
    snapshot = MarketSnapshot(
        last_price=D("29.00"), round=4, total_rounds=None, fundamental_estimate=D("28.00"),
        last_volume=500, depth=depth, price_history=history,
        dividend_info=DividendInfo(D("2.40"), D("1.40"), D("1.40"), D("1.00"), 0.5, 1),
        interest_rate=D("0.05"),
    ).hide_fundamental()
    account = AgentAccount(7, D("1000000.00"), 10_000, dividend_cash=D("296920.65"),
                           committed_cash=D("11500.00"))
    outstanding = [Order(3, 7, Side.BUY, OrderKind.LIMIT, 400, 400, D("28.00"), 3, 12)]
    return snapshot, account, outstanding
