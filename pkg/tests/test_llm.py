import json
from decimal import Decimal
from pathlib import Path

import httpx
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import golden_inputs, make_snapshot
from marketsim.accounts import AgentAccount
from marketsim.agents.types import (
    MarketSnapshot,
    OrderRequest,
    ReplaceDecision,
    TradeDecision,
)
from marketsim.asset import BernoulliDividend, MarketParams
from marketsim.llm import (
    ConfigurationError,
    HttpClient,
    LlmAgent,
    LlmClientConfig,
    ParseError,
    RequestContext,
    ScriptedClient,
    SurrogateResponder,
    TransportError,
    assemble_prompt,
    parse_decision,
    serialize,
)
from marketsim.orderbook import OrderKind, Side
from marketsim.simulator import AgentSetup, Scenario, run

D = Decimal
GOLDEN = Path(__file__).parent / "golden"


def test_golden_prompt_bytes():
    snapshot, account, outstanding = golden_inputs()
    bundle = assemble_prompt("speculator", snapshot, account, outstanding)
    assert bundle.user_prompt == (GOLDEN / "speculator_prompt.txt").read_text()
    assert bundle.system_prompt.startswith("You are a speculator")


def test_prompt_digest_is_stable_and_input_sensitive():
    snapshot, account, outstanding = golden_inputs()
    a = assemble_prompt("speculator", snapshot, account, outstanding)
    b = assemble_prompt("speculator", snapshot, account, outstanding)
    c = assemble_prompt("value", snapshot, account, outstanding)
    assert a.digest == b.digest != c.digest


def test_finite_horizon_rendering():
    snap = make_snapshot("30.00", fundamental="28.00", round_no=3, total_rounds=20)
    snap = MarketSnapshot(**{**snap.__dict__, "redemption_value": D("28.00")})
    text = assemble_prompt("value", snap, AgentAccount(1, D("100"), 0), []).user_prompt
    assert "Round Number: 3/20" in text
    assert "Price/Fundamental Ratio: 1.07" in text
    assert "Shares will be redeemed at $28.00 per share after round 20." in text


def test_infinite_horizon_and_empty_sides():
    snap = make_snapshot("30.00")
    text = assemble_prompt("value", snap, AgentAccount(1, D("100"), 0), []).user_prompt
    assert "Shares will not be redeemed." in text
    assert "Best Bid: None" in text
    assert "Your Outstanding Orders:\nNone" in text


def test_unknown_type_rejected():
    with pytest.raises(ValueError):
        assemble_prompt("oracle", make_snapshot("30"), AgentAccount(1, D("1"), 0), [])


def test_example_payload_parses():
    d = parse_decision((GOLDEN / "example_payload.json").read_text())
    assert d.valuation == D("28.0") and d.price_target == D("29.0")
    assert d.replace_decision is ReplaceDecision.ADD
    (order,) = d.orders
    assert (order.side, order.quantity, order.kind, order.price_limit) == \
        (Side.SELL, 1000, OrderKind.LIMIT, D("29.50"))


def payload(**over):
    base = {"valuation_reasoning": "v", "valuation": 28, "price_target_reasoning": "p",
            "price_target": 29, "orders": [], "replace_decision": "Add", "reasoning": "r"}
    base.update(over)
    return json.dumps(base)


def test_cancel_with_empty_orders():
    d = parse_decision(payload(replace_decision="Cancel"))
    assert d.replace_decision is ReplaceDecision.CANCEL and d.orders == ()


@pytest.mark.parametrize("over, path", [
    ({"orders": [{"decision": "Buy", "quantity": 5, "order_type": "limit"}]},
     "orders[0].price_limit"),
    ({"orders": [{"decision": "Hold", "quantity": 5, "order_type": "market"}]},
     "orders[0].decision"),
    ({"orders": [{"decision": "Buy", "quantity": 0, "order_type": "market"}]},
     "orders[0].quantity"),
    ({"orders": [{"decision": "Sell", "quantity": 5, "order_type": "limit",
                  "price_limit": -1}]}, "orders[0].price_limit"),
    ({"replace_decision": "Cancel",
      "orders": [{"decision": "Buy", "quantity": 5, "order_type": "market"}]}, "orders"),
    ({"valuation": "lots"}, "valuation"),
])
def test_schema_errors_name_the_field(over, path):
    with pytest.raises(ParseError) as exc:
        parse_decision(payload(**over))
    assert exc.value.path == path


@pytest.mark.parametrize("text", ["", "Sure! {}", payload() + " trailing", "[1, 2]",
                                  "```json\n" + payload() + "\n```"])
def test_non_object_text_rejected(text):
    with pytest.raises(ParseError):
        parse_decision(text)


def test_missing_required_field():
    body = json.loads(payload())
    del body["reasoning"]
    with pytest.raises(ParseError) as exc:
        parse_decision(json.dumps(body))
    assert exc.value.path == "reasoning"


prices = st.decimals(min_value=D("0.01"), max_value=D("9999.99"), places=2)
orders = st.one_of(
    st.builds(OrderRequest.market, st.sampled_from(["Buy", "Sell"]), st.integers(1, 10**6)),
    st.builds(OrderRequest.limit, st.sampled_from(["Buy", "Sell"]), st.integers(1, 10**6),
              prices),
)


@st.composite
def decisions(draw):
    how = draw(st.sampled_from(list(ReplaceDecision)))
    chosen = () if how is ReplaceDecision.CANCEL else tuple(draw(st.lists(orders, max_size=4)))
    return TradeDecision(draw(st.text()), draw(prices), draw(st.text()), draw(prices),
                         chosen, how, draw(st.text()))


@settings(max_examples=200)
@given(decisions())
def test_serialize_round_trip(decision):
    assert parse_decision(serialize(decision)) == decision


def ctx(agent=1, rnd=1):
    return RequestContext(agent, rnd)


def bundle():
    snapshot, account, outstanding = golden_inputs()
    return assemble_prompt("speculator", snapshot, account, outstanding)


def test_scripted_replays_in_order_then_underflows():
    client = ScriptedClient({(1, 1): ["a", "b"]})
    assert client.complete(bundle(), ctx()).text == "a"
    assert client.complete(bundle(), ctx()).text == "b"
    with pytest.raises(ConfigurationError, match="agent 1 in round 1"):
        client.complete(bundle(), ctx())


def completion(text):
    return {"model": "m", "choices": [{"message": {"content": text}}],
            "usage": {"prompt_tokens": 10, "completion_tokens": 5}}


def http_client(handler, max_retries=3, sleeps=None):
    config = LlmClientConfig(mode="http", endpoint="https://llm.test/v1/chat/completions",
                             max_retries=max_retries)
    return HttpClient(config, "key", transport=httpx.MockTransport(handler),
                      sleep=(sleeps.append if sleeps is not None else lambda s: None))


def test_http_retries_rate_limit_then_succeeds():
    calls = []

    def handler(request):
        calls.append(json.loads(request.content))
        assert request.headers["Authorization"] == "Bearer key"
        if len(calls) == 1:
            return httpx.Response(429, text="slow down")
        return httpx.Response(200, json=completion(payload()))

    sleeps = []
    raw = http_client(handler, sleeps=sleeps).complete(bundle(), ctx())
    assert raw.attempts == 2 and sleeps == [1.0]
    assert parse_decision(raw.text).reasoning == "r"
    body = calls[0]
    assert [m["role"] for m in body["messages"]] == ["system", "user"]
    assert body["temperature"] == 0.0
    assert body["response_format"]["type"] == "json_schema"


def test_http_gives_up_after_retries():
    sleeps = []
    client = http_client(lambda r: httpx.Response(503), max_retries=2, sleeps=sleeps)
    with pytest.raises(TransportError) as exc:
        client.complete(bundle(), ctx())
    assert exc.value.attempts == 3 and sleeps == [1.0, 2.0]


def test_http_client_error_is_not_retried():
    seen = []

    def handler(request):
        seen.append(1)
        return httpx.Response(401, text="bad key")

    with pytest.raises(TransportError):
        http_client(handler).complete(bundle(), ctx())
    assert len(seen) == 1


def test_http_timeout_is_retried():
    seen = []

    def handler(request):
        seen.append(1)
        if len(seen) < 3:
            raise httpx.ReadTimeout("slow", request=request)
        return httpx.Response(200, json=completion(payload()))

    assert http_client(handler).complete(bundle(), ctx()).attempts == 3


def test_missing_api_key():
    config = LlmClientConfig(mode="http", endpoint="https://llm.test", api_key_env="NOPE_KEY")
    with pytest.raises(ConfigurationError, match="NOPE_KEY"):
        config.api_key({})
    assert config.api_key({"NOPE_KEY": "k"}) == "k"


def test_agent_retries_bad_reply_then_accepts():
    client = ScriptedClient({(1, 4): ["not json", payload(replace_decision="Cancel")]})
    snapshot, account, outstanding = golden_inputs()
    out = LlmAgent(1, "speculator", client).decide(snapshot, account, outstanding, 0.0,
                                                   np.random.default_rng(0))
    assert out.decision.replace_decision is ReplaceDecision.CANCEL
    assert out.attempts == 2 and len(out.anomalies) == 1
    assert out.prompt_hash == bundle().digest


def test_agent_holds_when_replies_stay_invalid():
    client = ScriptedClient({(1, 4): ["x", "y", "z"]})
    snapshot, account, outstanding = golden_inputs()
    out = LlmAgent(1, "speculator", client, parse_retries=2).decide(
        snapshot, account, outstanding, 0.0, np.random.default_rng(0))
    assert out.decision.orders == () and len(out.anomalies) == 3


def test_agent_holds_on_transport_failure():
    client = http_client(lambda r: httpx.Response(500), max_retries=1)
    snapshot, account, outstanding = golden_inputs()
    out = LlmAgent(1, "speculator", client).decide(snapshot, account, outstanding, 0.0,
                                                   np.random.default_rng(0))
    assert out.decision.orders == () and out.attempts == 2
    assert out.anomalies[0].startswith("transport")


def test_configuration_error_propagates():
    snapshot, account, outstanding = golden_inputs()
    with pytest.raises(ConfigurationError):
        LlmAgent(1, "speculator", ScriptedClient()).decide(
            snapshot, account, outstanding, 0.0, np.random.default_rng(0))


def test_surrogate_value_reply_is_valid_json():
    snap = make_snapshot("35.00", fundamental="28.00", history=[("35.00", 0)])
    text = SurrogateResponder()(None, RequestContext(1, 1, "value", snap,
                                                     AgentAccount(1, D("100000"), 1000)))
    d = parse_decision(text)
    assert d.valuation == D("28.00")
    assert all(o.side is Side.SELL for o in d.orders) and d.orders


def test_simulation_with_llm_agents_records_prompts():
    client = ScriptedClient(responder=SurrogateResponder())
    agents = [AgentSetup(LlmAgent(i, kind, client), D("100000"), 2000)
              for i, kind in enumerate(["value", "value", "market_maker", "speculator"])]
    market = MarketParams(D("0.05"), D("1.40"), horizon=5, redemption=D("28.00"))
    res = run(Scenario(agents, D("35.00"), 5, market, BernoulliDividend(D("1.40"), D("1.00")),
                       seed=2))
    entries = [e for r in res.records for e in r.decisions]
    assert len(entries) == 20
    assert all(e.prompt_hash and e.raw_payload for e in entries)
    assert sum(r.volume for r in res.records) > 0
    assert len(client.calls) == 20


def test_own_history_block_is_opt_in():
    client = ScriptedClient({(1, 4): [payload(reasoning="first call")],
                             (1, 5): [payload(reasoning="second call")]})
    agent = LlmAgent(1, "speculator", client, own_history=3)
    snapshot, account, outstanding = golden_inputs()
    agent.decide(snapshot, account, outstanding, 0.0, np.random.default_rng(0))
    later = MarketSnapshot(**{**snapshot.__dict__, "round": 5})
    seen = []
    client.responder = None
    original = client.complete

    def spy(bundle, context):
        seen.append(bundle.user_prompt)
        return original(bundle, context)

    client.complete = spy
    agent.decide(later, account, outstanding, 0.0, np.random.default_rng(0))
    assert "Your Recent Decisions:\nRound 4: Add; no orders; first call" in seen[0]
    assert "Your Recent Decisions" not in bundle().user_prompt
