"""Command-line interface: run, sweep, report and validate."""

from __future__ import annotations

import argparse
import sys
from importlib import resources
from pathlib import Path
from typing import Optional, Sequence

from pydantic import BaseModel, ConfigDict, Field

from ..analysis import (
    SweepSetup,
    consistency_metrics,
    decision_sweep,
    efficiency,
    parse_grid,
    wealth_report,
)
from ..llm import ConfigurationError
from ..simulator import ConservationError, run
from .config import (
    AgentConfig,
    ConfigError,
    LlmConfig,
    _validate,
    build_agents,
    build_scenario,
    load_config,
    make_client,
    read_toml,
    resolve,
)
from .output import now, read_agents, read_decisions, read_rounds, write_run, write_sweep
from .report import consistency_lines, efficiency_lines, run_summary, wealth_lines
from ..agents import StrategyParams

EXIT_OK, EXIT_RUNTIME, EXIT_CONFIG = 0, 1, 2


class SweepFile(BaseModel):
    model_config = ConfigDict(extra="forbid")

    agents: list[AgentConfig] = Field(..., min_length=1)
    params: dict = Field(default_factory=dict)
    llm: LlmConfig = Field(default_factory=LlmConfig)
    setup: dict = Field(default_factory=dict)


def cmd_run(args) -> int:
    path = resolve(args.scenario)
    cfg = load_config(path)
    started = now()
    scenario = build_scenario(cfg, path.parent, seed=args.seed, rounds=args.rounds,
                              llm_mode=args.llm)
    result = run(scenario)
    out = Path(args.out) if args.out else Path("runs") / f"{cfg.name}-seed{scenario.seed}"
    mode = args.llm or cfg.llm.mode
    uses_llm = any(a.kind == "llm" for a in cfg.agents)
    manifest = write_run(result, out, config_digest=cfg.digest(), started=started,
                         llm_mode=mode if uses_llm else None,
                         model_id=(cfg.llm.model if mode == "http" else "scripted")
                         if uses_llm else None)
    summary = run_summary(result, efficiency(result.records))
    (out / "summary.txt").write_text(summary)
    if not args.quiet:
        print(summary, end="")
        print(f"outputs written to {out} (config digest {manifest.config_digest[:12]})")
    return EXIT_OK


def resolve_sweep(name: str) -> Path:
    """An agent config path, or the name of a bundled sweep config."""
    path = Path(name)
    if path.exists():
        return path
    bundled = resources.files("marketsim") / "sweeps" / f"{path.stem}.toml"
    if bundled.is_file():
        return Path(str(bundled))
    raise FileNotFoundError(f"no agent config {name!r}")


def cmd_sweep(args) -> int:
    path = resolve_sweep(args.config)
    cfg = _validate(SweepFile, read_toml(path), str(path))
    grid = parse_grid(args.grid)
    client = None
    if any(a.kind == "llm" for a in cfg.agents):
        mode = args.llm or cfg.llm.mode
        llm = cfg.llm.model_copy(update={"mode": mode})
        client = make_client(llm, path.parent, StrategyParams.from_mapping(cfg.params))
    agents = [agent for agent, _ in build_agents(cfg.agents, cfg.params, False, client, cfg.llm)]
    setup = _validate(_SetupModel, cfg.setup, f"{path}:setup").to_setup()
    result = decision_sweep(agents, grid, args.trials, setup, seed=args.seed)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    n = write_sweep(out, result.rows())
    if not args.quiet:
        for agent in agents:
            steps = result.modal(agent.agent_type)
            print(f"{agent.agent_type}: " + " ".join(f"{rho}:{a[0]}" for rho, a in steps))
        print(f"{n} rows written to {out}")
    return EXIT_OK


class _SetupModel(BaseModel):
    model_config = ConfigDict(extra="forbid")

    fundamental: float = Field(28.0, gt=0)
    cash: float = Field(1_000_000, ge=0)
    shares: int = Field(10_000, gt=0)
    interest_rate: float = Field(0.05, gt=0)
    expected_dividend: float = Field(1.40, ge=0)

    def to_setup(self) -> SweepSetup:
        from ..money import money, to_decimal

        return SweepSetup(fundamental=money(to_decimal(self.fundamental)),
                          cash=money(to_decimal(self.cash)), shares=self.shares,
                          interest_rate=to_decimal(self.interest_rate),
                          expected_dividend=money(to_decimal(self.expected_dividend)))


def report_text(run_dir: Path) -> str:
    rounds = read_rounds(run_dir / "rounds.csv")
    lines = [f"Report for {run_dir}", ""]
    lines += efficiency_lines(efficiency(rounds)) + [""]
    per_round, final = read_agents(run_dir / "agents.csv")
    lines += wealth_lines(wealth_report(per_round, final or None)) + [""]
    decisions = run_dir / "decisions.jsonl"
    if decisions.exists():
        lines += consistency_lines(consistency_metrics(read_decisions(decisions)))
    return "\n".join(lines) + "\n"


def cmd_report(args) -> int:
    run_dir = Path(args.run_dir)
    if not (run_dir / "rounds.csv").exists():
        raise FileNotFoundError(f"{run_dir} has no rounds.csv")
    text = report_text(run_dir)
    (run_dir / "report.txt").write_text(text)
    print(text, end="")
    return EXIT_OK


def cmd_validate(args) -> int:
    path = resolve(args.scenario)
    cfg = load_config(path)
    scenario = build_scenario(cfg, path.parent, llm_mode="scripted")
    horizon = "infinite" if cfg.market.horizon is None else f"finite ({cfg.market.horizon})"
    print(f"{path}: ok; {cfg.name}, {len(scenario.agents)} agents, {cfg.rounds} rounds, "
          f"{horizon} horizon, digest {cfg.digest()[:12]}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="marketsim",
                                     description="Agent-based double auction market simulator.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run a scenario and write its outputs")
    p.add_argument("scenario", help="scenario TOML file or bundled scenario name")
    p.add_argument("--seed", type=int, help="override the scenario seed")
    p.add_argument("--out", help="output directory (default runs/<name>-seed<seed>)")
    p.add_argument("--llm", choices=("scripted", "http"), help="override the LLM mode")
    p.add_argument("--rounds", type=int, help="override the number of rounds")
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="decision sweep over the price/fundamental ratio")
    p.add_argument("config", help="agent config TOML")
    p.add_argument("--grid", default="0.1:3.5:0.1", help="start:stop:step, inclusive")
    p.add_argument("--trials", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--llm", choices=("scripted", "http"))
    p.add_argument("--out", default="sweep.csv")
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("report", help="recompute reports from a run directory")
    p.add_argument("run_dir")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("validate", help="check a scenario file")
    p.add_argument("scenario")
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ConfigurationError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ConservationError as exc:
        print(f"engine error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except Exception as exc:  # noqa: BLE001
        print(f"runtime failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
