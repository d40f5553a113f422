"""Text-overlap metrics and distribution statistics.

Rouge-L here always runs on a fixed normalizer (lowercase, punctuation
stripped, whitespace tokens) so scores are comparable across the
annotation-agreement and generation-benchmark callers.
"""

from __future__ import annotations

import string
from collections import Counter
from dataclasses import dataclass
from typing import Iterable

from .relations import RelationKind, relation_from_phrase

INTERROGATIVES = ("what", "why", "who", "where", "when", "how")
QUESTION_TYPE_OTHER = "other"

_PUNCT_TABLE = str.maketrans("", "", string.punctuation)


def normalize_tokens(text: str) -> list[str]:
    """Lowercase, strip punctuation characters, split on whitespace."""
    stripped = text.lower().translate(_PUNCT_TABLE)
    return stripped.split()


@dataclass(frozen=True)
class RougeScore:
    precision: float
    recall: float
    f1: float

    def to_dict(self) -> dict:
        return {"precision": self.precision, "recall": self.recall, "f1": self.f1}


def _lcs_length(a: list[str], b: list[str]) -> int:
    if not a or not b:
        return 0
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0] * (len(b) + 1)
        for j, y in enumerate(b, start=1):
            if x == y:
                cur[j] = prev[j - 1] + 1
            else:
                cur[j] = max(prev[j], cur[j - 1])
        prev = cur
    return prev[len(b)]


def rouge_l(candidate: str, reference: str) -> RougeScore:
    """Rouge-L over normalized token sequences.

    P = LCS/|candidate|, R = LCS/|reference|, F1 = 2PR/(P+R); an empty
    side yields an all-zero score.
    """
    cand = normalize_tokens(candidate)
    ref = normalize_tokens(reference)
    if not cand or not ref:
        return RougeScore(0.0, 0.0, 0.0)
    lcs = _lcs_length(cand, ref)
    precision = lcs / len(cand)
    recall = lcs / len(ref)
    if precision + recall == 0:
        return RougeScore(0.0, 0.0, 0.0)
    f1 = 2 * precision * recall / (precision + recall)
    return RougeScore(precision, recall, f1)


def rouge_l_multi_ref(
    candidate: str, references: list[str], reduction: str = "max"
) -> RougeScore:
    """Reduce per-reference Rouge-L scores to one.

    ``max`` keeps the best-F1 reference's full score (first wins on ties);
    ``mean`` averages precision, recall, and F1 component-wise.
    """
    if not references:
        raise ValueError("at least one reference is required")
    scores = [rouge_l(candidate, ref) for ref in references]
    if reduction == "max":
        return max(scores, key=lambda s: s.f1)
    if reduction == "mean":
        n = len(scores)
        return RougeScore(
            precision=sum(s.precision for s in scores) / n,
            recall=sum(s.recall for s in scores) / n,
            f1=sum(s.f1 for s in scores) / n,
        )
    raise ValueError(f"unknown reduction: {reduction!r}")


def question_type(question: str) -> str:
    """Classify a question by its first interrogative token.

    Scans normalized tokens left to right for one of what/why/who/where/
    when/how ("whats" folds to what); anything else is ``other``.
    """
    if not question.strip():
        raise ValueError("question is empty")
    for token in normalize_tokens(question):
        if token == "whats":
            token = "what"
        if token in INTERROGATIVES:
            return token
    return QUESTION_TYPE_OTHER


def question_type_counts(questions: Iterable[str]) -> Counter[str]:
    return Counter(question_type(q) for q in questions)


def _relation_of(record) -> RelationKind:
    if isinstance(record, RelationKind):
        return record
    triple = getattr(record, "triple", None)
    if triple is not None:
        return triple.relation
    if isinstance(record, dict):
        phrase = record.get("triple", {}).get("relation_phrase")
        kind = relation_from_phrase(phrase or "")
        if kind is not None:
            return kind
    raise TypeError(f"cannot extract a relation from {record!r}")


def relation_distribution(records: Iterable) -> dict[RelationKind, float]:
    """Fraction of records per relation kind, sorted descending.

    Accepts annotation records, export dicts, or bare RelationKind values;
    an empty input yields an empty report.
    """
    counts = Counter(_relation_of(r) for r in records)
    total = sum(counts.values())
    if total == 0:
        return {}
    items = sorted(
        counts.items(), key=lambda kv: (-kv[1], kv[0].phrase)
    )
    return {kind: count / total for kind, count in items}
