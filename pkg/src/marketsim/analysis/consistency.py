"""Strategy consistency (reasoning similarity) and decision coherence metrics."""

from __future__ import annotations

import itertools
import math
import re
from collections import Counter, defaultdict
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

DEFAULT_STOPWORDS = frozenset(
    "a an the and or of to in on at for is are be will with by as it its this that i my".split())
TOKEN = re.compile(r"[a-z0-9]+(?:'[a-z]+)?")


def bag_of_words(text: str, stopwords: Iterable[str] = DEFAULT_STOPWORDS) -> Counter:
    stop = set(stopwords)
    return Counter(t for t in TOKEN.findall(text.lower()) if t not in stop)


def cosine(a: Counter, b: Counter) -> float:
    """Cosine of two count vectors. Two empty bags count as identical."""
    if not a and not b:
        return 1.0
    if not a or not b:
        return 0.0
    dot = sum(v * b[k] for k, v in a.items() if k in b)
    return dot / math.sqrt(sum(v * v for v in a.values()) * sum(v * v for v in b.values()))


def strategy_consistency(texts: Sequence[str],
                         stopwords: Iterable[str] = DEFAULT_STOPWORDS) -> Optional[float]:
    """Mean pairwise cosine similarity; None with fewer than two texts."""
    bags = [bag_of_words(t, stopwords) for t in texts]
    if len(bags) < 2:
        return None
    sims = [cosine(a, b) for a, b in itertools.combinations(bags, 2)]
    return min(1.0, max(0.0, sum(sims) / len(sims)))


def decision_coherence(sequences: Sequence[Sequence[int]]) -> Optional[float]:
    """Lag-1 Pearson correlation of signed decisions, pairs pooled within each sequence.

    None when fewer than two pairs exist or either side has zero variance.
    """
    pairs = [(s[i], s[i + 1]) for s in sequences for i in range(len(s) - 1)]
    if len(pairs) < 2:
        return None
    x, y = np.array(pairs, dtype=float).T
    if x.std() == 0 or y.std() == 0:
        return None
    return float(max(-1.0, min(1.0, np.corrcoef(x, y)[0, 1])))


@dataclass(frozen=True)
class ConsistencyRow:
    agent_type: str
    decisions: int
    sc: Optional[float]
    dc: Optional[float]


def decision_text(decision) -> str:
    return " ".join(filter(None, (decision.valuation_reasoning, decision.price_target_reasoning,
                                  decision.reasoning)))


def consistency_metrics(entries, stopwords: Iterable[str] = DEFAULT_STOPWORDS
                        ) -> dict[str, ConsistencyRow]:
    """SC and DC per agent type from decision entries in round order."""
    texts: dict[str, list[str]] = defaultdict(list)
    seqs: dict[str, dict[int, list[int]]] = defaultdict(lambda: defaultdict(list))
    for e in entries:
        texts[e.agent_type].append(decision_text(e.decision))
        seqs[e.agent_type][e.agent_id].append(e.decision.signed)
    return {
        t: ConsistencyRow(t, len(texts[t]), strategy_consistency(texts[t], stopwords),
                          decision_coherence(list(seqs[t].values())))
        for t in sorted(texts)
    }
