"""Discrete-round double-auction market simulator with rule-based and LLM trading agents."""

__version__ = "0.1.0"
