"""Scenario loading, run outputs and the command-line interface."""

from .config import (
    BUNDLED,
    ConfigError,
    ScenarioConfig,
    build_scenario,
    load_config,
    load_scenario,
    parse_config,
)
from .output import RunManifest, read_agents, read_decisions, read_rounds, write_run

__all__ = [
    "BUNDLED", "ConfigError", "ScenarioConfig", "build_scenario", "load_config",
    "load_scenario", "parse_config", "RunManifest", "read_agents", "read_decisions",
    "read_rounds", "write_run",
]
