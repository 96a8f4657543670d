"""Linear-approximation agents: signed quantity ``q = b0 + sum(b_i * x_i) + noise``.

Regressors are defined so that every type's form is a plain dot product; the
contrarian regressor is the negated z-score, for example. The same regressors
feed the coefficient estimator in :mod:`marketsim.analysis.ols`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Mapping, Optional

import numpy as np
from scipy.special import ndtr

from ..accounts import AgentAccount
from ..money import round_half_up
from ..orderbook import Side
from .types import MarketSnapshot, OrderRequest, ReplaceDecision, StrategyParams, TradeDecision


@dataclass(frozen=True)
class LinearCoefficients:
    betas: Mapping[str, float]
    intercept: float = 0.0
    noise_sd: float = 0.0
    gamma: tuple[float, float, float] = (0.0, 0.0, 0.0)

    def __post_init__(self) -> None:
        values = [*self.betas.values(), self.intercept, self.noise_sd, *self.gamma]
        if not all(math.isfinite(v) for v in values):
            raise ValueError("coefficients must be finite")
        if self.noise_sd < 0:
            raise ValueError("noise_sd must be non-negative")
        if len(self.gamma) != 3:
            raise ValueError("gamma needs exactly three entries")


class MissingInput(ValueError):
    """A regressor needs data the snapshot does not carry."""


def _fundamental(s: MarketSnapshot) -> float:
    if s.fundamental_estimate is None:
        raise MissingInput("fundamental unavailable")
    return float(s.fundamental_estimate)


def _value_gap(s, acct, news, p):
    v = _fundamental(s)
    return (v - float(s.last_price)) / v


def _zscore(s, p):
    return (float(s.last_price) - s.moving_average(p.window)) / s.volatility(p.vol_window)


def _inventory_gap(s, acct, news, p):
    target = p.target_inventory if p.target_inventory is not None else acct.shares
    return float(target - acct.shares)


def _price_deviation(s, acct, news, p):
    return float(s.last_price) - s.moving_average(p.window)


Regressor = Callable[[MarketSnapshot, AgentAccount, float, StrategyParams], float]

REGRESSORS: dict[str, dict[str, Regressor]] = {
    "value": {"value_gap": _value_gap},
    "momentum": {
        "price_change": lambda s, a, n, p: s.price_change,
        "volume_change": lambda s, a, n, p: float(s.volume_change),
    },
    "market_maker": {"inventory_gap": _inventory_gap, "price_deviation": _price_deviation},
    "contrarian": {"neg_zscore": lambda s, a, n, p: -_zscore(s, p)},
    "news": {"news": lambda s, a, n, p: float(n), "price_deviation": _price_deviation},
    "optimistic": {
        "optimistic_gap": lambda s, a, n, p: p.optimism * _fundamental(s) - float(s.last_price)},
    "speculator": {"expected_change": lambda s, a, n, p: s.price_change},
}


def regressors(agent_type: str, snapshot: MarketSnapshot, account: AgentAccount,
               news: float = 0.0, params: Optional[StrategyParams] = None) -> dict[str, float]:
    """State variables for ``agent_type``'s linear form, by coefficient name."""
    try:
        table = REGRESSORS[agent_type]
    except KeyError:
        raise ValueError(f"no linear form for agent type {agent_type!r}") from None
    params = params or StrategyParams()
    return {name: f(snapshot, account, news, params) for name, f in table.items()}


def linear_signal(agent_type: str, coefficients: LinearCoefficients, snapshot: MarketSnapshot,
                  account: AgentAccount, news: float = 0.0,
                  params: Optional[StrategyParams] = None) -> float:
    """Noise-free signed quantity."""
    x = regressors(agent_type, snapshot, account, news, params)
    unknown = set(coefficients.betas) - set(x)
    if unknown:
        raise ValueError(f"coefficients {sorted(unknown)} do not apply to {agent_type}")
    return coefficients.intercept + sum(coefficients.betas.get(k, 0.0) * v for k, v in x.items())


def market_probability(gamma, quantity: float, price_change: float) -> float:
    g0, g1, g2 = gamma
    return float(ndtr(g0 + g1 * abs(quantity) + g2 * abs(price_change)))


def linear_decide(agent_type: str, coefficients: LinearCoefficients, snapshot: MarketSnapshot,
                  account: AgentAccount, news: float, rng: np.random.Generator,
                  params: Optional[StrategyParams] = None) -> TradeDecision:
    """Signed linear quantity, then a probit draw for the order kind.

    The generator is advanced the same number of times on every call so that
    streams stay aligned across agents and rounds.
    """
    try:
        q = linear_signal(agent_type, coefficients, snapshot, account, news, params)
    except MissingInput as exc:
        rng.standard_normal()
        rng.random()
        return TradeDecision.hold(str(exc))
    q += coefficients.noise_sd * rng.standard_normal()
    u = rng.random()
    qty = round_half_up(abs(q))
    if qty == 0:
        return TradeDecision.hold(f"linear signal {q:+.2f} rounds to zero")
    side = Side.BUY if q > 0 else Side.SELL
    p_market = market_probability(coefficients.gamma, q, snapshot.price_change)
    if u < p_market:
        order = OrderRequest.market(side, qty)
    else:
        order = OrderRequest.limit(side, qty, snapshot.last_price)
    return TradeDecision(
        "", None, "", None, (order,), ReplaceDecision.REPLACE,
        f"linear signal {q:+.2f} with market-order probability {p_market:.3f}")
