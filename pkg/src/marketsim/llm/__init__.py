"""Prompt construction, model clients and LLM-driven agents."""

from .agent import SURROGATE_RULES, LlmAgent, SurrogateResponder
from .client import (
    ConfigurationError,
    HttpClient,
    LlmClient,
    LlmClientConfig,
    RawCompletion,
    RequestContext,
    ScriptedClient,
    TransportError,
    complete,
)
from .parsing import ParseError, decision_json_schema, decision_to_wire, parse_decision, serialize
from .prompts import LLM_TYPES, SYSTEM_PROMPTS, PromptBundle, assemble_prompt

__all__ = [
    "SURROGATE_RULES", "LlmAgent", "SurrogateResponder", "ConfigurationError", "HttpClient",
    "LlmClient", "LlmClientConfig", "RawCompletion", "RequestContext", "ScriptedClient",
    "TransportError", "complete", "ParseError", "decision_json_schema", "decision_to_wire",
    "parse_decision", "serialize", "LLM_TYPES", "SYSTEM_PROMPTS", "PromptBundle",
    "assemble_prompt",
]
