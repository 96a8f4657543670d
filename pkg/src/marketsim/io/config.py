"""Scenario files: schema, validation and construction of runnable scenarios."""

from __future__ import annotations

import hashlib
import json
import sys
from decimal import Decimal
from importlib import resources
from pathlib import Path
from typing import Any, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from ..agents import LinearAgent, LinearCoefficients, NewsSignal, RuleAgent, StrategyParams
from ..agents.rules import RULE_TYPES
from ..agents.linear import REGRESSORS
from ..asset import BernoulliDividend, GbmDividend, MarketParams
from ..llm import (
    SYSTEM_PROMPTS,
    HttpClient,
    LlmAgent,
    LlmClientConfig,
    ScriptedClient,
    SurrogateResponder,
)
from ..simulator import AgentSetup, Scenario

BUNDLED = ("price_discovery_above", "price_discovery_below", "infinite_above", "infinite_below",
           "divergent_beliefs", "market_stress")


class ConfigError(ValueError):
    """A scenario or agent file failed validation. ``errors`` holds (path, message) pairs."""

    def __init__(self, source: str, errors: list[tuple[str, str]]):
        self.source = source
        self.errors = errors
        lines = "\n".join(f"  {path}: {msg}" for path, msg in errors)
        super().__init__(f"invalid configuration in {source}:\n{lines}")


class _Model(BaseModel):
    model_config = ConfigDict(extra="forbid")


class MarketConfig(_Model):
    interest_rate: Decimal = Field(Decimal("0.05"), gt=0)
    expected_dividend: Decimal = Field(Decimal("1.40"), ge=0)
    horizon: Optional[int] = Field(None, ge=1)
    redemption: Decimal = Field(Decimal("0"), ge=0)


class BernoulliConfig(_Model):
    kind: Literal["bernoulli"] = "bernoulli"
    base: Decimal = Field(Decimal("1.40"), ge=0)
    variation: Decimal = Field(Decimal("1.00"), ge=0)
    probability_high: float = Field(0.5, ge=0, le=1)
    payment_interval: int = Field(1, ge=1)

    @model_validator(mode="after")
    def _non_negative_low(self):
        if self.variation > self.base:
            raise ValueError("variation must not exceed base (dividends cannot be negative)")
        return self


class GbmConfig(_Model):
    kind: Literal["gbm"]
    level: Decimal = Field(..., ge=0)
    drift: float = 0.0
    volatility: float = Field(0.0, ge=0)
    payment_interval: int = Field(1, ge=1)


class CoefficientConfig(_Model):
    betas: dict[str, float]
    intercept: float = 0.0
    noise_sd: float = Field(0.0, ge=0)
    gamma: tuple[float, float, float] = (0.0, 0.0, 0.0)


class AgentConfig(_Model):
    type: str
    kind: Literal["llm", "rule", "linear"] = "llm"
    count: int = Field(1, ge=1)
    cash: Decimal = Field(Decimal("1000000"), ge=0)
    shares: int = Field(10_000, ge=0)
    hide_fundamental: Optional[bool] = None
    params: dict[str, Any] = Field(default_factory=dict)
    coefficients: Optional[CoefficientConfig] = None

    @model_validator(mode="after")
    def _known_type(self):
        if self.kind == "llm" and self.type not in SYSTEM_PROMPTS:
            raise ValueError(f"no system prompt for type {self.type!r}; "
                             f"known: {', '.join(sorted(SYSTEM_PROMPTS))}")
        if self.kind == "rule" and self.type not in RULE_TYPES:
            raise ValueError(f"unknown rule type {self.type!r}")
        if self.kind == "linear":
            if self.type not in REGRESSORS:
                raise ValueError(f"no linear form for type {self.type!r}")
            if self.coefficients is None:
                raise ValueError("linear agents need coefficients")
            unknown = set(self.coefficients.betas) - set(REGRESSORS[self.type])
            if unknown:
                raise ValueError(f"unknown coefficient names {sorted(unknown)} for {self.type}")
        StrategyParams.from_mapping(self.params)
        return self


class InformationConfig(_Model):
    hide_fundamental: bool = False


class LlmConfig(_Model):
    mode: Literal["scripted", "http"] = "scripted"
    endpoint: Optional[str] = None
    model: str = "gpt-4o"
    temperature: float = Field(0.0, ge=0)
    max_retries: int = Field(3, ge=0)
    timeout: float = Field(60.0, gt=0)
    api_key_env: str = "OPENAI_API_KEY"
    parse_retries: int = Field(2, ge=0)
    own_history: int = Field(0, ge=0)
    script: Optional[str] = None
    surrogate: bool = True


class NewsConfig(_Model):
    default: float = 0.0
    series: dict[int, float] = Field(default_factory=dict)


class ScenarioConfig(_Model):
    name: str = "scenario"
    description: str = ""
    seed: int = Field(0, ge=0, lt=2**64)
    rounds: int = Field(..., ge=1)
    initial_price: Decimal = Field(..., gt=0)
    market: MarketConfig = Field(default_factory=MarketConfig)
    dividend: Union[BernoulliConfig, GbmConfig] = Field(default_factory=BernoulliConfig,
                                                        discriminator="kind")
    information: InformationConfig = Field(default_factory=InformationConfig)
    llm: LlmConfig = Field(default_factory=LlmConfig)
    news: NewsConfig = Field(default_factory=NewsConfig)
    params: dict[str, Any] = Field(default_factory=dict)
    agents: list[AgentConfig] = Field(..., min_length=1)

    @model_validator(mode="after")
    def _horizon(self):
        h = self.market.horizon
        if h is not None and self.rounds > h:
            raise ValueError(f"rounds ({self.rounds}) exceed market.horizon ({h})")
        StrategyParams.from_mapping(self.params)
        return self

    def digest(self) -> str:
        """Hash over every field, so any behavior-affecting change alters it."""
        text = json.dumps(self.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()


def _path(loc) -> str:
    out = ""
    for part in loc:
        if isinstance(part, int):
            out += f"[{part}]"
        elif part in ("bernoulli", "gbm"):
            continue
        else:
            out += f".{part}" if out else str(part)
    return out


def _validate(model, data: dict, source: str):
    try:
        return model.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(source, [(_path(e["loc"]) or "<root>", e["msg"])
                                   for e in exc.errors()]) from None


def resolve(path_or_name: Union[str, Path]) -> Path:
    """A file path, or the name of a bundled scenario."""
    path = Path(path_or_name)
    if path.exists():
        return path
    name = path.stem if path.suffix == ".toml" else str(path_or_name)
    if name in BUNDLED:
        return Path(str(resources.files("marketsim") / "scenarios" / f"{name}.toml"))
    raise FileNotFoundError(f"no scenario file {path_or_name!r} and no bundled scenario by "
                            f"that name (bundled: {', '.join(BUNDLED)})")


def read_toml(path: Path) -> dict:
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(str(path), [("<file>", str(exc))]) from None


def load_config(path_or_name: Union[str, Path]) -> ScenarioConfig:
    path = resolve(path_or_name)
    return _validate(ScenarioConfig, read_toml(path), str(path))


def parse_config(data: dict, source: str = "<dict>") -> ScenarioConfig:
    return _validate(ScenarioConfig, data, source)


def dividend_process(cfg: Union[BernoulliConfig, GbmConfig]):
    if isinstance(cfg, GbmConfig):
        return GbmDividend(cfg.level, cfg.drift, cfg.volatility, cfg.payment_interval)
    return BernoulliDividend(cfg.base, cfg.variation, cfg.probability_high, cfg.payment_interval)


def _read_script(path: Path) -> dict[tuple[int, int], list[str]]:
    script: dict[tuple[int, int], list[str]] = {}
    for n, line in enumerate(path.read_text().splitlines(), start=1):
        if not line.strip():
            continue
        try:
            item = json.loads(line)
            key = (int(item["agent_id"]), int(item["round"]))
            payload = item["payload"]
        except (ValueError, KeyError, TypeError) as exc:
            raise ConfigError(str(path), [(f"line {n}", f"bad script entry: {exc}")]) from None
        script.setdefault(key, []).append(payload if isinstance(payload, str)
                                          else json.dumps(payload))
    return script


def make_client(cfg: LlmConfig, base_dir: Path, params: StrategyParams, environ=None,
                transport=None):
    """Client for LLM agents. http mode reads the API key now, before any round runs."""
    if cfg.mode == "http":
        config = LlmClientConfig("http", cfg.endpoint, cfg.model, cfg.temperature,
                                 cfg.max_retries, cfg.timeout, cfg.api_key_env)
        key = config.api_key(environ) if environ is not None else config.api_key()
        return HttpClient(config, key, transport=transport)
    script = _read_script(base_dir / cfg.script) if cfg.script else None
    responder = SurrogateResponder(params) if cfg.surrogate else None
    return ScriptedClient(script, responder, model_id="scripted")


def build_agents(agent_cfgs: list[AgentConfig], base_params: dict, hide_default: bool,
                 client=None, llm: Optional[LlmConfig] = None, first_id: int = 0):
    agents = []
    next_id = first_id
    for a in agent_cfgs:
        params = StrategyParams.from_mapping({**base_params, **a.params})
        hide = hide_default if a.hide_fundamental is None else a.hide_fundamental
        for _ in range(a.count):
            if a.kind == "llm":
                agent = LlmAgent(next_id, a.type, client, hide, llm.parse_retries,
                                 llm.own_history)
            elif a.kind == "linear":
                c = a.coefficients
                agent = LinearAgent(next_id, a.type,
                                    LinearCoefficients(c.betas, c.intercept, c.noise_sd, c.gamma),
                                    params, hide)
            else:
                agent = RuleAgent(next_id, a.type, params, hide)
            agents.append((agent, a))
            next_id += 1
    return agents


def build_scenario(cfg: ScenarioConfig, base_dir: Path = Path("."), *, seed: Optional[int] = None,
                   rounds: Optional[int] = None, llm_mode: Optional[str] = None, environ=None,
                   transport=None) -> Scenario:
    llm = cfg.llm if llm_mode is None else cfg.llm.model_copy(update={"mode": llm_mode})
    if llm.mode == "http" and not llm.endpoint:
        raise ConfigError(cfg.name, [("llm.endpoint", "required in http mode")])
    needs_client = any(a.kind == "llm" for a in cfg.agents)
    client = None
    if needs_client:
        client = make_client(llm, base_dir, StrategyParams.from_mapping(cfg.params), environ,
                             transport)
    agents = build_agents(cfg.agents, cfg.params, cfg.information.hide_fundamental, client, llm)
    m = cfg.market
    market = MarketParams(m.interest_rate, m.expected_dividend, m.horizon, m.redemption)
    news = NewsSignal(dict(cfg.news.series), cfg.news.default)
    return Scenario(
        agents=[AgentSetup(agent, a.cash, a.shares) for agent, a in agents],
        initial_price=cfg.initial_price,
        rounds=cfg.rounds if rounds is None else rounds,
        market=market,
        dividend=dividend_process(cfg.dividend),
        seed=cfg.seed if seed is None else seed,
        news=news,
        name=cfg.name,
    )


def load_scenario(path_or_name: Union[str, Path], **overrides) -> Scenario:
    path = resolve(path_or_name)
    return build_scenario(load_config(path), path.parent, **overrides)
