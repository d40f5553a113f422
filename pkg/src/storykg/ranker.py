"""Rank one concept's candidate triples for annotator display.

Each triple is rendered as a small text document; a triple's mean TF-IDF
cosine similarity to the other candidates measures how redundant it is
within the list, and the final score ``1 - mean_similarity + weight``
rewards distinct, well-supported knowledge. Only the top few are shown.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass

from .kgstore import Triple

DEFAULT_TOP_K = 6
TIE_BREAK_WEIGHT_THEN_LEX = "weight_then_lexicographic"


class EmptyCandidatesError(ValueError):
    """Raised when similarities are requested for an empty document list."""


@dataclass(frozen=True)
class TripleDocument:
    """A triple flattened to text, e.g. ``bag is used for carrying things``."""

    triple_index: int
    text: str


@dataclass(frozen=True)
class RankedTriple:
    triple: Triple
    mean_similarity: float
    score: float

    def to_dict(self) -> dict:
        return {
            "triple": self.triple.to_dict(),
            "relation_phrase": self.triple.relation.phrase,
            "mean_similarity": self.mean_similarity,
            "score": self.score,
        }


@dataclass(frozen=True)
class RankingConfig:
    """Knobs for the ranking pass.

    ``normalize_weights`` rescales candidate weights into [0, 1] by the
    maximum weight in the set before scoring; it is off by default so the
    score formula sees raw dump weights.
    """

    top_k: int = DEFAULT_TOP_K
    tie_break: str = TIE_BREAK_WEIGHT_THEN_LEX
    normalize_weights: bool = False

    def __post_init__(self):
        if self.top_k < 1:
            raise ValueError(f"top_k must be >= 1, got {self.top_k}")
        if self.tie_break != TIE_BREAK_WEIGHT_THEN_LEX:
            raise ValueError(f"unknown tie-break rule: {self.tie_break!r}")


def triple_to_document(triple: Triple, triple_index: int = 0) -> TripleDocument:
    """Concatenate displays and relation phrase into a single-space text."""
    return TripleDocument(triple_index=triple_index, text=triple.as_text())


def _tfidf_vectors(texts: list[str]) -> list[dict[str, float]]:
    """L2-normalized raw-tf x smoothed-idf vectors.

    Tokens come from lowercased whitespace splitting; the IDF statistics
    are fit on exactly the given documents:
    idf(t) = ln((1 + N) / (1 + df(t))) + 1.
    """
    token_lists = [text.lower().split() for text in texts]
    n = len(token_lists)
    df: Counter[str] = Counter()
    for tokens in token_lists:
        df.update(set(tokens))
    vectors = []
    for tokens in token_lists:
        tf = Counter(tokens)
        vec = {
            term: count * (math.log((1 + n) / (1 + df[term])) + 1.0)
            for term, count in tf.items()
        }
        norm = math.sqrt(sum(v * v for v in vec.values()))
        if norm > 0:
            vec = {term: v / norm for term, v in vec.items()}
        vectors.append(vec)
    return vectors


def _dot(a: dict[str, float], b: dict[str, float]) -> float:
    if len(b) < len(a):
        a, b = b, a
    return sum(v * b.get(term, 0.0) for term, v in a.items())


def mean_similarities(docs: list[TripleDocument]) -> list[float]:
    """For each document, the mean cosine similarity to every other one.

    A single document has no "others" and gets 0.0. Values are clamped to
    [0, 1] against floating-point drift.
    """
    if not docs:
        raise EmptyCandidatesError("no candidate documents to compare")
    if len(docs) == 1:
        return [0.0]
    vectors = _tfidf_vectors([doc.text for doc in docs])
    n = len(vectors)
    means = []
    for i in range(n):
        # fsum keeps the mean invariant under input permutation
        total = math.fsum(_dot(vectors[i], vectors[j]) for j in range(n) if j != i)
        means.append(min(1.0, max(0.0, total / (n - 1))))
    return means


def rank(triples: list[Triple], config: RankingConfig | None = None) -> list[RankedTriple]:
    """Score and sort a concept's candidate triples, truncated to top_k.

    Sorted by score descending; ties broken by higher weight, then by
    lexicographic (source, relation phrase, target). An empty candidate
    list simply yields an empty result.
    """
    config = config or RankingConfig()
    if not triples:
        return []
    docs = [triple_to_document(t, i) for i, t in enumerate(triples)]
    sims = mean_similarities(docs)
    weights = [t.weight for t in triples]
    if config.normalize_weights:
        w_max = max(weights)
        if w_max > 0:
            weights = [w / w_max for w in weights]
    ranked = [
        RankedTriple(triple=t, mean_similarity=s, score=1.0 - s + w)
        for t, s, w in zip(triples, sims, weights)
    ]
    ranked.sort(
        key=lambda r: (
            -r.score,
            -r.triple.weight,
            r.triple.source,
            r.triple.relation.phrase,
            r.triple.target,
        )
    )
    return ranked[: config.top_k]
