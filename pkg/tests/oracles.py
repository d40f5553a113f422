"""Independent reference implementations used only by the tests.

These deliberately share no code with the package: the TF-IDF oracle
works on dense numpy matrices, the LCS oracle is a memoized recursion
(plus exhaustive subsequence enumeration for tiny inputs), and the dump
oracle is a from-scratch line scanner with its own relation table.
"""

from __future__ import annotations

import json
import math
from functools import lru_cache
from itertools import combinations

import numpy as np

# --- TF-IDF + cosine + full-sort ranking oracle ---------------------------

def tfidf_matrix(texts: list[str]) -> np.ndarray:
    """Dense L2-normalized raw-tf x smoothed-idf matrix."""
    docs = [t.lower().split() for t in texts]
    vocab = sorted({term for doc in docs for term in doc})
    col = {term: j for j, term in enumerate(vocab)}
    n = len(docs)
    tf = np.zeros((n, len(vocab)))
    for i, doc in enumerate(docs):
        for term in doc:
            tf[i, col[term]] += 1.0
    df = (tf > 0).sum(axis=0)
    idf = np.log((1.0 + n) / (1.0 + df)) + 1.0
    mat = tf * idf
    norms = np.linalg.norm(mat, axis=1, keepdims=True)
    norms[norms == 0] = 1.0
    return mat / norms


def mean_cosine_to_others(texts: list[str]) -> list[float]:
    if len(texts) == 1:
        return [0.0]
    mat = tfidf_matrix(texts)
    sims = mat @ mat.T
    n = len(texts)
    out = []
    for i in range(n):
        total = sims[i].sum() - sims[i, i]
        out.append(min(1.0, max(0.0, float(total / (n - 1)))))
    return out


def rank_oracle(triples, top_k: int = 6):
    """Full-sort ranking oracle over exhaustively computed scores.

    ``triples`` are package Triple values; only their public fields are
    read. Returns (triple, s_mean, score) tuples in final order.
    """
    texts = [
        f"{t.source_display} {t.relation.phrase} {t.target_display}" for t in triples
    ]
    sims = mean_cosine_to_others(texts)
    scored = [
        (t, s, 1.0 - s + t.weight) for t, s in zip(triples, sims)
    ]
    scored.sort(
        key=lambda row: (
            -row[2],
            -row[0].weight,
            row[0].source,
            row[0].relation.phrase,
            row[0].target,
        )
    )
    return scored[:top_k]


# --- LCS / Rouge-L oracle ---------------------------------------------------

def lcs_recursive(a: tuple[str, ...], b: tuple[str, ...]) -> int:
    @lru_cache(maxsize=None)
    def go(i: int, j: int) -> int:
        if i == len(a) or j == len(b):
            return 0
        if a[i] == b[j]:
            return 1 + go(i + 1, j + 1)
        return max(go(i + 1, j), go(i, j + 1))

    return go(0, 0)


def lcs_enumerate(a: tuple[str, ...], b: tuple[str, ...]) -> int:
    """All-subsequences enumeration; only usable for very short inputs."""
    short, long_ = (a, b) if len(a) <= len(b) else (b, a)
    subsequences = {
        tuple(short[i] for i in idx)
        for r in range(len(short), -1, -1)
        for idx in combinations(range(len(short)), r)
    }

    def is_subsequence(needle, haystack):
        it = iter(haystack)
        return all(x in it for x in needle)

    best = 0
    for sub in subsequences:
        if len(sub) > best and is_subsequence(sub, long_):
            best = len(sub)
    return best


def rouge_l_oracle(candidate_tokens: list[str], reference_tokens: list[str]) -> dict:
    if not candidate_tokens or not reference_tokens:
        return {"precision": 0.0, "recall": 0.0, "f1": 0.0}
    lcs = lcs_recursive(tuple(candidate_tokens), tuple(reference_tokens))
    p = lcs / len(candidate_tokens)
    r = lcs / len(reference_tokens)
    f1 = 0.0 if p + r == 0 else 2 * p * r / (p + r)
    return {"precision": p, "recall": r, "f1": f1}


# --- dump-line linear-scan oracle --------------------------------------------

_ORACLE_RELATIONS = {
    "/r/Causes",
    "/r/Desires",
    "/r/HasContext",
    "/r/HasProperty",
    "/r/HasSubevent",
    "/r/IsA",
    "/r/AtLocation",
    "/r/CapableOf",
    "/r/CreatedBy",
    "/r/MadeOf",
    "/r/PartOf",
    "/r/Antonym",
    "/r/UsedFor",
}


def scan_dump_lines(lines: list[str]) -> list[tuple[str, str, str, float]]:
    """Accepted triples as (source, relation_uri, target, weight) rows,
    deduplicated keeping the maximum weight, first-seen order."""
    best: dict[tuple[str, str, str], float] = {}
    order: list[tuple[str, str, str]] = []
    for line in lines:
        parts = line.rstrip("\n").split("\t")
        if len(parts) != 5:
            continue
        rel = parts[1].strip()
        if rel not in _ORACLE_RELATIONS:
            continue
        concepts = []
        ok = True
        for uri in (parts[2], parts[3]):
            pieces = uri.strip().split("/")
            if len(pieces) < 4 or pieces[1] != "c" or pieces[2] != "en" or not pieces[3]:
                ok = False
                break
            concepts.append(pieces[3].lower())
        if not ok:
            continue
        try:
            meta = json.loads(parts[4])
            weight = float(meta.get("weight", 1.0))
        except (ValueError, TypeError):
            continue
        if weight < 0 or math.isnan(weight):
            continue
        key = (concepts[0], rel, concepts[1])
        if key not in best:
            order.append(key)
            best[key] = weight
        elif weight > best[key]:
            best[key] = weight
    return [(s, r, t, best[(s, r, t)]) for s, r, t in order]


def lookup_oracle(rows, concept: str):
    return [row for row in rows if row[0] == concept or row[2] == concept]
