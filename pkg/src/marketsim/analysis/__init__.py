"""Post-run analytics."""

from .consistency import (
    ConsistencyRow,
    bag_of_words,
    consistency_metrics,
    cosine,
    decision_coherence,
    strategy_consistency,
)
from .efficiency import EfficiencyReport, RoundSummary, efficiency, summarize
from .ols import OlsFit, RankError, estimate_coefficients, state_matrix
from .reports import (
    DEFAULT_KEYWORDS,
    BehaviorRow,
    ImpactRow,
    VarianceCheck,
    WealthPoint,
    behavior_report,
    price_impact,
    variance_check,
    wealth_report,
)
from .sweep import BookTemplate, SweepCell, SweepResult, SweepSetup, decision_sweep, parse_grid

__all__ = [
    "ConsistencyRow", "bag_of_words", "consistency_metrics", "cosine", "decision_coherence",
    "strategy_consistency", "EfficiencyReport", "RoundSummary", "efficiency", "summarize",
    "OlsFit", "RankError", "estimate_coefficients", "state_matrix", "DEFAULT_KEYWORDS",
    "BehaviorRow", "ImpactRow", "VarianceCheck", "WealthPoint", "behavior_report",
    "price_impact", "variance_check", "wealth_report", "BookTemplate", "SweepCell",
    "SweepResult", "SweepSetup", "decision_sweep", "parse_grid",
]
