"""Scores over candidate selections: functional (oracle agreement on the
expanded set), semantic (average tree closeness between members), and their
weighted combination."""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .corpus import CorpusTree, SampleSet, Selection
from .expansion import ExpansionConfig, expand
from .oracle import Oracle


@dataclass(frozen=True)
class ObjectiveConfig:
    alpha: float = 0.5  # weight of the functional term; 1.0 disables the semantic term

    def __post_init__(self):
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError(f"alpha must be in (0, 1], got {self.alpha}")


@dataclass(frozen=True)
class ScoreCard:
    class_index: int
    functional: float
    semantic: float
    combined: float


def functional_score(oracle: Oracle, class_index: int, samples: SampleSet,
                     cfg: ExpansionConfig) -> float:
    """Fraction of the expanded set the oracle assigns to class_index."""
    if len(samples) == 0:
        raise ValueError("functional score needs a nonempty sample set")
    if not 0 <= class_index < oracle.info():
        raise ValueError(f"class index {class_index} out of range")
    labels = oracle.classify_batch(expand(samples, cfg))
    return float(np.mean(labels == class_index))


def score_from_labels(labels: np.ndarray, class_index: int) -> float:
    """Functional score given precomputed labels of an expanded set."""
    return float(np.mean(labels == class_index))


def semantic_score(tree: CorpusTree, selection: Selection) -> float:
    """Mean closeness over distinct member pairs; a singleton scores 1.0.

    A member's class is its leaf node-id, so same-leaf pairs sit at distance 0
    and contribute closeness 1. Grouping members by leaf makes this O(L^2) in
    the number of distinct leaves rather than O(k^2) in members.
    """
    k = len(selection)
    if k == 0:
        raise ValueError("semantic score needs a nonempty selection")
    if k == 1:
        return 1.0
    counts: dict[int, int] = {}
    for leaf, _ in selection.members:
        counts[leaf] = counts.get(leaf, 0) + 1
    total = sum(c * (c - 1) / 2 for c in counts.values())  # same-leaf pairs, closeness 1
    for (la, ca), (lb, cb) in combinations(sorted(counts.items()), 2):
        total += ca * cb * tree.closeness(la, lb)
    return float(total / (k * (k - 1) / 2))


def combined_score(functional: float, semantic: float, cfg: ObjectiveConfig) -> float:
    return cfg.alpha * functional + (1.0 - cfg.alpha) * semantic


def overall_scores(cards: list[ScoreCard]) -> tuple[float, float]:
    """Component-wise totals across per-class cards."""
    seen = set()
    for card in cards:
        if card.class_index in seen:
            raise ValueError(f"duplicate class index {card.class_index}")
        seen.add(card.class_index)
    return (
        float(sum(card.functional for card in cards)),
        float(sum(card.semantic for card in cards)),
    )
