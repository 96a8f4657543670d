"""Run outputs: CSV tables, the decision log and the manifest, plus readers for reports."""

from __future__ import annotations

import csv
import hashlib
import json
import platform
from dataclasses import dataclass
from datetime import datetime, timezone
from decimal import Decimal
from pathlib import Path
from typing import Iterable, Optional, Sequence

from .. import __version__
from ..analysis.efficiency import RoundSummary
from ..llm.parsing import decision_from_wire, decision_to_wire
from ..money import fmt_money
from ..simulator import RunResult

ROUND_COLUMNS = ("round", "clearing_price", "fundamental_value", "volume", "num_trades",
                 "best_bid", "best_ask", "dividend_paid")
TRADE_COLUMNS = ("trade_id", "round", "price", "quantity", "buyer_agent", "seller_agent",
                 "buy_order", "sell_order", "phase")
ORDER_COLUMNS = ("round", "order_id", "agent_id", "side", "kind", "quantity", "price_limit",
                 "event")
AGENT_COLUMNS = ("stage", "round", "agent_id", "agent_type", "main_cash", "dividend_cash",
                 "shares", "committed_cash", "committed_shares", "wealth")
SWEEP_COLUMNS = ("agent_type", "rho", "decision", "probability", "mean_qty_pct", "market_share")


def _m(x: Optional[Decimal]) -> str:
    return "" if x is None else fmt_money(x)


def _f(x: Optional[float]) -> str:
    return "" if x is None else repr(float(x))


def write_csv(path: Path, columns: Sequence[str], rows: Iterable[Sequence]) -> int:
    n = 0
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow(row)
            n += 1
    return n


def round_rows(result: RunResult):
    for r in result.records:
        yield (r.round, _m(r.clearing_price), _m(r.fundamental_value), r.volume, r.num_trades,
               _m(r.best_bid), _m(r.best_ask), _m(r.dividend_paid))


def trade_rows(result: RunResult):
    for t in result.trades:
        yield (t.trade_id, t.round, _m(t.price), t.quantity, t.buyer_agent, t.seller_agent,
               t.buy_order, t.sell_order, t.phase.value)


def order_rows(result: RunResult):
    log = [e for r in result.records for e in r.order_log] + list(result.closing_log)
    for e in log:
        yield (e.round, e.order_id, e.agent_id, e.side, e.kind, e.quantity, _m(e.price_limit),
               e.event)


def agent_rows(result: RunResult):
    def rows(stage, round_no, accounts):
        for a in accounts:
            yield (stage, round_no, a.agent_id, a.agent_type, _m(a.main_cash),
                   _m(a.dividend_cash), a.shares, _m(a.committed_cash), a.committed_shares,
                   _m(a.wealth))

    for r in result.records:
        yield from rows("round", r.round, r.accounts)
    yield from rows("final", result.records[-1].round, result.final_accounts)


def decision_records(result: RunResult):
    for d in result.decisions:
        yield {
            "round": d.round,
            "agent_id": d.agent_id,
            "agent_type": d.agent_type,
            "prompt_hash": d.prompt_hash,
            "raw_payload": d.raw_payload,
            "decision": decision_to_wire(d.decision),
            "accepted": d.accepted,
            "rejections": [{"index": r.index, "reason": r.reason, "detail": r.detail}
                           for r in d.rejections],
            "attempts": d.attempts,
            "anomalies": d.anomalies,
        }


def sha256_file(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


@dataclass
class RunManifest:
    seed: int
    config_digest: str
    version: str
    started: str
    finished: str
    llm_mode: Optional[str]
    model_id: Optional[str]
    files: dict[str, dict]
    scenario: str = ""
    python: str = platform.python_version()

    def to_json(self) -> str:
        return json.dumps(self.__dict__, indent=2, sort_keys=True) + "\n"


def now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def write_run(result: RunResult, out: Path, *, config_digest: str, started: str,
              llm_mode: Optional[str] = None, model_id: Optional[str] = None) -> RunManifest:
    out.mkdir(parents=True, exist_ok=True)
    counts = {
        "rounds.csv": write_csv(out / "rounds.csv", ROUND_COLUMNS, round_rows(result)),
        "trades.csv": write_csv(out / "trades.csv", TRADE_COLUMNS, trade_rows(result)),
        "orders.csv": write_csv(out / "orders.csv", ORDER_COLUMNS, order_rows(result)),
        "agents.csv": write_csv(out / "agents.csv", AGENT_COLUMNS, agent_rows(result)),
    }
    n = 0
    with open(out / "decisions.jsonl", "w") as fh:
        for rec in decision_records(result):
            fh.write(json.dumps(rec, sort_keys=True) + "\n")
            n += 1
    counts["decisions.jsonl"] = n
    manifest = RunManifest(
        seed=result.scenario.seed,
        config_digest=config_digest,
        version=__version__,
        started=started,
        finished=now(),
        llm_mode=llm_mode,
        model_id=model_id,
        files={name: {"rows": rows, "sha256": sha256_file(out / name)}
               for name, rows in counts.items()},
        scenario=result.scenario.name,
    )
    (out / "manifest.json").write_text(manifest.to_json())
    return manifest


def _dec(text: str) -> Optional[Decimal]:
    return Decimal(text) if text else None


def read_rounds(path: Path) -> list[RoundSummary]:
    with open(path, newline="") as fh:
        return [RoundSummary(int(r["round"]), Decimal(r["clearing_price"]),
                             _dec(r["fundamental_value"]), int(r["volume"]),
                             int(r["num_trades"]))
                for r in csv.DictReader(fh)]


@dataclass(frozen=True)
class AccountRow:
    agent_id: int
    agent_type: str
    main_cash: Decimal
    dividend_cash: Decimal
    shares: int
    wealth: Decimal


@dataclass(frozen=True)
class AccountsRound:
    round: int
    clearing_price: Optional[Decimal]
    accounts: tuple[AccountRow, ...]


def read_agents(path: Path) -> tuple[list[AccountsRound], tuple[AccountRow, ...]]:
    """Per-round account snapshots and the final accounts from agents.csv."""
    rounds: dict[int, list[AccountRow]] = {}
    final: list[AccountRow] = []
    with open(path, newline="") as fh:
        for r in csv.DictReader(fh):
            row = AccountRow(int(r["agent_id"]), r["agent_type"], Decimal(r["main_cash"]),
                             Decimal(r["dividend_cash"]), int(r["shares"]), Decimal(r["wealth"]))
            if r["stage"] == "final":
                final.append(row)
            else:
                rounds.setdefault(int(r["round"]), []).append(row)
    return [AccountsRound(k, None, tuple(v)) for k, v in sorted(rounds.items())], tuple(final)


@dataclass(frozen=True)
class LoggedDecision:
    """Decision-log line in the shape consistency metrics expect."""

    round: int
    agent_id: int
    agent_type: str
    decision: object


def read_decisions(path: Path) -> list[LoggedDecision]:
    out = []
    with open(path) as fh:
        for line in fh:
            rec = json.loads(line)
            out.append(LoggedDecision(rec["round"], rec["agent_id"], rec["agent_type"],
                                      decision_from_wire(rec["decision"])))
    return out


def write_sweep(path: Path, rows: Iterable[dict]) -> int:
    return write_csv(path, SWEEP_COLUMNS, (
        (r["agent_type"], str(r["rho"]), r["decision"], _f(r["probability"]),
         _f(r["mean_qty_pct"]), _f(r["market_share"])) for r in rows))
