import csv
import json
import time
from decimal import Decimal
from pathlib import Path

import pytest

from marketsim.analysis import efficiency
from marketsim.io import (
    BUNDLED,
    ConfigError,
    load_scenario,
    parse_config,
    read_decisions,
    read_rounds,
)
from marketsim.io.cli import main
from marketsim.io.output import sha256_file, write_run
from marketsim.simulator import ORDER_EVENTS, run

D = Decimal

MINIMAL = """
name = "tiny"
rounds = 3
initial_price = "30.00"

[market]
interest_rate = "{rate}"
expected_dividend = "1.40"

[[agents]]
type = "value"
kind = "rule"
count = 2

[[agents]]
type = "market_maker"
kind = "rule"
"""


def write(tmp_path, text, name="s.toml"):
    path = tmp_path / name
    path.write_text(text)
    return path


@pytest.mark.parametrize("name", BUNDLED)
def test_bundled_scenario_smoke(name):
    started = time.perf_counter()
    res = run(load_scenario(name, rounds=3))
    assert len(res.records) == 4
    assert time.perf_counter() - started < 5


def test_bundled_parameters():
    below = load_scenario("infinite_below")
    assert below.initial_price == D("14.00") and below.rounds == 15
    assert not below.market.finite
    above = load_scenario("price_discovery_above")
    assert above.initial_price == D("35.00") and above.market.horizon == 20
    makers = [s for s in above.agents if s.agent.agent_type == "market_maker"]
    assert {(s.cash, s.shares) for s in makers} == {(D("20000000"), 200_000)}
    stress = load_scenario("market_stress")
    by_type = {s.agent.agent_type: (s.cash, s.shares) for s in stress.agents}
    assert by_type["optimistic"] == (D("1500000"), 5_000)
    assert by_type["pessimistic"] == (D("500000"), 15_000)
    assert stress.rounds == 100
    divergent = load_scenario("divergent_beliefs")
    assert all(s.agent.hide_fundamental for s in divergent.agents)


def test_empty_agents_rejected():
    with pytest.raises(ConfigError) as exc:
        parse_config({"rounds": 3, "initial_price": "28", "agents": []})
    assert exc.value.errors[0][0] == "agents"


def test_field_paths_in_errors():
    data = {"rounds": 3, "initial_price": "28",
            "agents": [{"type": "value", "kind": "rule", "params": {"alpha": -1}}],
            "dividend": {"kind": "bernoulli", "base": "1", "variation": "2"}}
    with pytest.raises(ConfigError) as exc:
        parse_config(data)
    paths = {p for p, _ in exc.value.errors}
    assert paths == {"agents[0]", "dividend"}


def test_rounds_beyond_horizon_rejected():
    with pytest.raises(ConfigError, match="horizon"):
        parse_config({"rounds": 5, "initial_price": "28", "market": {"horizon": 3},
                      "agents": [{"type": "value"}]})


def test_validate_negative_interest_exit_2(tmp_path, capsys):
    path = write(tmp_path, MINIMAL.format(rate="-0.05"))
    assert main(["validate", str(path)]) == 2
    assert "market.interest_rate" in capsys.readouterr().err


def test_validate_ok(tmp_path, capsys):
    assert main(["validate", str(write(tmp_path, MINIMAL.format(rate="0.05")))]) == 0
    assert "ok" in capsys.readouterr().out


def test_validate_missing_file():
    assert main(["validate", "no/such/file.toml"]) == 2


def test_digest_tracks_config():
    a = parse_config({"rounds": 3, "initial_price": "28", "agents": [{"type": "value"}]})
    b = parse_config({"rounds": 3, "initial_price": "28", "agents": [{"type": "value"}],
                      "params": {"alpha": 0.2}})
    assert a.digest() != b.digest()
    assert a.digest() == parse_config(a.model_dump(mode="json")).digest()


def data_digests(out: Path):
    return {name: sha256_file(out / name)
            for name in ("rounds.csv", "trades.csv", "orders.csv", "agents.csv",
                         "decisions.jsonl")}


def test_run_twice_identical_outputs(tmp_path):
    for d in ("a", "b"):
        assert main(["run", "price_discovery_above", "--seed", "42", "--out",
                     str(tmp_path / d), "--quiet"]) == 0
    assert data_digests(tmp_path / "a") == data_digests(tmp_path / "b")
    manifest = json.loads((tmp_path / "a" / "manifest.json").read_text())
    assert manifest["seed"] == 42 and manifest["llm_mode"] == "scripted"
    assert manifest["files"]["rounds.csv"]["rows"] == 21
    assert manifest["files"]["trades.csv"]["sha256"] == data_digests(tmp_path / "a")["trades.csv"]


def test_seed_changes_outputs(tmp_path):
    main(["run", "market_stress", "--rounds", "10", "--seed", "1", "--out",
          str(tmp_path / "a"), "--quiet"])
    main(["run", "market_stress", "--rounds", "10", "--seed", "2", "--out",
          str(tmp_path / "b"), "--quiet"])
    assert data_digests(tmp_path / "a")["rounds.csv"] != data_digests(tmp_path / "b")["rounds.csv"]


def test_report_round_trip(tmp_path, capsys):
    scenario = load_scenario("infinite_below")
    result = run(scenario)
    write_run(result, tmp_path, config_digest="x", started="t")
    assert efficiency(read_rounds(tmp_path / "rounds.csv")) == efficiency(result.records)
    logged = read_decisions(tmp_path / "decisions.jsonl")
    assert [d.decision for d in logged] == [d.decision for d in result.decisions]
    assert main(["report", str(tmp_path)]) == 0
    assert "P/F start 0.5000" in capsys.readouterr().out


def test_order_log_events_are_known(tmp_path):
    main(["run", "price_discovery_below", "--out", str(tmp_path), "--quiet"])
    with open(tmp_path / "orders.csv", newline="") as fh:
        events = {r["event"] for r in csv.DictReader(fh)}
    assert events <= set(ORDER_EVENTS) and {"placed", "filled"} <= events


def test_http_mode_without_key_refuses_before_running(tmp_path, monkeypatch, capsys):
    monkeypatch.delenv("OPENAI_API_KEY", raising=False)
    text = MINIMAL.format(rate="0.05").replace('kind = "rule"\ncount = 2', "count = 2") + """
[llm]
endpoint = "https://llm.invalid/v1/chat/completions"
"""
    path = write(tmp_path, text)
    out = tmp_path / "out"
    assert main(["run", str(path), "--llm", "http", "--out", str(out)]) == 2
    assert "OPENAI_API_KEY" in capsys.readouterr().err
    assert not out.exists()


def test_script_file_is_replayed(tmp_path):
    payload = {"valuation_reasoning": "v", "valuation": 28, "price_target_reasoning": "",
               "price_target": 28, "orders": [{"decision": "Buy", "quantity": 7,
                                               "order_type": "limit", "price_limit": 29.0}],
               "replace_decision": "Add", "reasoning": "scripted"}
    (tmp_path / "script.jsonl").write_text(
        json.dumps({"agent_id": 0, "round": 1, "payload": payload}) + "\n")
    text = """
rounds = 1
initial_price = "30.00"

[llm]
script = "script.jsonl"
surrogate = false

[[agents]]
type = "value"
"""
    res = run(load_scenario(write(tmp_path, text)))
    (entry,) = res.records[1].decisions
    assert entry.decision.reasoning == "scripted" and entry.accepted == 1


def test_sweep_cli(tmp_path, capsys):
    config = write(tmp_path, """
[[agents]]
type = "value"
kind = "rule"

[[agents]]
type = "optimistic"
kind = "rule"
""", "agents.toml")
    out = tmp_path / "sweep.csv"
    assert main(["sweep", str(config), "--grid", "0.1:3.5:0.1", "--trials", "5",
                 "--out", str(out)]) == 0
    with open(out, newline="") as fh:
        rows = list(csv.DictReader(fh))
    value = [r for r in rows if r["agent_type"] == "value"]
    assert len(value) == 35 * 3
    assert all(sum(float(r["probability"]) for r in value if r["rho"] == rho) == 1.0
               for rho in {r["rho"] for r in value})
    assert "value:" in capsys.readouterr().out


def test_sweep_bad_grid_exit_2(tmp_path):
    config = write(tmp_path, '[[agents]]\ntype = "value"\nkind = "rule"\n', "a.toml")
    assert main(["sweep", str(config), "--grid", "3:1:0.1", "--out",
                 str(tmp_path / "s.csv")]) == 2


def test_bundled_sweep_config(tmp_path):
    out = tmp_path / "s.csv"
    assert main(["sweep", "llm_types", "--grid", "0.5:1.5:0.5", "--out", str(out),
                 "--quiet"]) == 0
    with open(out, newline="") as fh:
        assert len(list(csv.DictReader(fh))) == 8 * 3 * 3
