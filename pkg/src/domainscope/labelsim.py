"""Label verification via word-embedding cosine similarity.

Node labels and a hypothesized class name are compared through their most
similar token pair, which makes multiword labels ("tabby cat" vs "cat") score
through the shared token.
"""

from __future__ import annotations

import re
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import OutOfVocabulary

_TOKEN_RE = re.compile(r"[a-z0-9]+")


@dataclass(frozen=True)
class EmbeddingTable:
    vectors: dict[str, np.ndarray]  # token -> unit-norm float64 vector
    dim: int

    def __len__(self) -> int:
        return len(self.vectors)

    def __contains__(self, token: str) -> bool:
        return token in self.vectors


def load_embeddings(path: str | Path) -> EmbeddingTable:
    """Load a `token v1 ... vD` text table; vectors are normalized on load."""
    vectors: dict[str, np.ndarray] = {}
    dim = None
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        if not line.strip():
            continue
        parts = line.split()
        token = parts[0]
        try:
            vec = np.asarray([float(p) for p in parts[1:]], dtype=np.float64)
        except ValueError as e:
            raise ValueError(f"line {lineno}: non-numeric embedding value") from e
        if vec.size == 0:
            raise ValueError(f"line {lineno}: token without vector")
        if dim is None:
            dim = vec.size
        elif vec.size != dim:
            raise ValueError(f"line {lineno}: dimension {vec.size}, expected {dim}")
        norm = np.linalg.norm(vec)
        if norm == 0:
            raise ValueError(f"line {lineno}: zero vector for {token!r}")
        if token in vectors:
            warnings.warn(f"duplicate embedding token {token!r}; keeping the last")
        vectors[token] = vec / norm
    if not vectors:
        raise ValueError(f"empty embedding file {path}")
    return EmbeddingTable(vectors, dim)


def tokenize(phrase: str) -> list[str]:
    return _TOKEN_RE.findall(phrase.lower())


def phrase_similarity(table: EmbeddingTable, a: str, b: str) -> float:
    """Max cosine similarity over the token cross-product of two phrases."""
    vecs_a = [table.vectors[t] for t in tokenize(a) if t in table]
    vecs_b = [table.vectors[t] for t in tokenize(b) if t in table]
    if not vecs_a:
        raise OutOfVocabulary(f"no known tokens in {a!r}")
    if not vecs_b:
        raise OutOfVocabulary(f"no known tokens in {b!r}")
    sims = np.stack(vecs_a) @ np.stack(vecs_b).T
    return float(np.clip(sims.max(), -1.0, 1.0))


@dataclass(frozen=True)
class SimilaritySummary:
    class_index: int
    hypothesis: str
    per_node: tuple[tuple[int, str, float | None], ...]  # (node id, label, sim or None if oov)
    mean: float | None


def verify_report(table: EmbeddingTable, report, hypothesis: str) -> SimilaritySummary:
    """Similarity of each chosen node label against the hypothesized class name.

    Out-of-vocabulary labels carry None; the mean covers in-vocabulary nodes
    and is None when every label was out of vocabulary. The hypothesis itself
    must be in vocabulary.
    """
    if not getattr(report, "found", False):
        raise ValueError("label verification needs a found class report")
    if not any(t in table for t in tokenize(hypothesis)):
        raise OutOfVocabulary(f"no known tokens in {hypothesis!r}")
    rows = []
    values = []
    for node_id, label in zip(report.chosen_nodes, report.chosen_labels):
        try:
            sim = phrase_similarity(table, label, hypothesis)
            values.append(sim)
        except OutOfVocabulary:
            sim = None
        rows.append((node_id, label, sim))
    mean = float(np.mean(values)) if values else None
    return SimilaritySummary(report.class_index, hypothesis, tuple(rows), mean)
