"""Offline knowledge-dump ingestion and per-concept triple lookup.

The store is built once from an assertions CSV dump (tab-separated, five
fields, JSON metadata in the last field) and is immutable afterwards, so
any number of readers can share it. A compact line-delimited snapshot
format lets a service start without re-parsing the dump.
"""

from __future__ import annotations

import gzip
import io
import json
import re
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Iterable, Iterator

from .relations import RelationKind, relation_from_uri

SNAPSHOT_MAGIC = "storykg-index"
SNAPSHOT_VERSION = 1

_GZIP_MAGIC = b"\x1f\x8b"


class InvalidLabelError(ValueError):
    """Raised for empty or whitespace-only concept labels."""


class AssertionLineError(ValueError):
    """Raised for a malformed dump record (wrong arity, bad metadata...)."""

    def __init__(self, message: str, line_number: int | None = None):
        super().__init__(message)
        self.line_number = line_number


class SnapshotError(ValueError):
    """Raised when a snapshot file has a bad magic header or version."""


class IngestError(RuntimeError):
    """Raised when the dump stream itself fails mid-ingestion."""

    def __init__(self, message: str, stats: "IngestStats"):
        super().__init__(message)
        self.stats = stats


_CONCEPT_URI_RE = re.compile(r"^/c/([a-z]{2,3})/([^/]+)(?:/.*)?$")
_WS_RUN = re.compile(r"\s+")


def normalize_concept(label: str) -> str:
    """Fold a surface word or a concept URI to its canonical key.

    Lowercases, collapses whitespace runs to single underscores, and for
    URIs of the form ``/c/<lang>/<term>[/<pos>...]`` keeps only the term
    (part-of-speech and sense suffixes are dropped). Idempotent.
    """
    if label is None or not label.strip():
        raise InvalidLabelError("concept label is empty")
    text = label.strip().lower()
    m = _CONCEPT_URI_RE.match(text)
    if m:
        text = m.group(2)
    return _WS_RUN.sub("_", text)


def display_label(key: str) -> str:
    """Render a canonical key for humans: underscores become spaces."""
    return key.replace("_", " ")


@dataclass(frozen=True, order=True)
class Triple:
    """One knowledge assertion: (source, relation, target) plus a
    non-negative credibility weight from the dump."""

    source: str
    relation: RelationKind
    target: str
    weight: float = 1.0

    def __post_init__(self):
        if self.weight < 0:
            raise ValueError(f"negative triple weight: {self.weight}")

    @property
    def source_display(self) -> str:
        return display_label(self.source)

    @property
    def target_display(self) -> str:
        return display_label(self.target)

    def key(self) -> tuple[str, str, str]:
        """Identity used for deduplication: weight excluded."""
        return (self.source, self.relation.uri_token, self.target)

    def as_text(self) -> str:
        """Flat rendering, e.g. ``bag is used for carrying things``."""
        return f"{self.source_display} {self.relation.phrase} {self.target_display}"

    def to_dict(self) -> dict:
        return {
            "source": self.source,
            "relation": self.relation.uri_token,
            "target": self.target,
            "weight": self.weight,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Triple":
        kind = relation_from_uri("/r/" + data["relation"])
        if kind is None:
            raise ValueError(f"unknown relation token: {data['relation']!r}")
        return cls(
            source=data["source"],
            relation=kind,
            target=data["target"],
            weight=float(data.get("weight", 1.0)),
        )


def parse_assertion_line(
    line: str, *, relations: frozenset[RelationKind] | None = None
) -> Triple | None:
    """Parse one tab-separated dump record into a Triple.

    Returns None (skip) when either endpoint is not an English concept or
    the relation falls outside the whitelist; raises AssertionLineError
    for records that are malformed rather than merely out of scope.
    ``relations`` restricts the whitelist further (never extends it).
    """
    fields = line.rstrip("\n").split("\t")
    if len(fields) != 5:
        raise AssertionLineError(
            f"expected 5 tab-separated fields, got {len(fields)}"
        )
    _, rel_uri, start_uri, end_uri, meta_raw = fields

    kind = relation_from_uri(rel_uri)
    if kind is None or (relations is not None and kind not in relations):
        return None

    endpoints = []
    for uri in (start_uri, end_uri):
        m = _CONCEPT_URI_RE.match(uri.strip())
        if not m:
            raise AssertionLineError(f"bad concept URI: {uri!r}")
        if m.group(1) != "en":
            return None
        endpoints.append(normalize_concept(uri))

    try:
        meta = json.loads(meta_raw)
    except json.JSONDecodeError as exc:
        raise AssertionLineError(f"unparseable metadata: {exc}") from exc
    if not isinstance(meta, dict):
        raise AssertionLineError("metadata is not an object")
    weight = meta.get("weight", 1.0)
    if not isinstance(weight, (int, float)) or weight < 0:
        raise AssertionLineError(f"bad weight: {weight!r}")

    return Triple(endpoints[0], kind, endpoints[1], float(weight))


@dataclass
class IngestStats:
    """Line-level counters collected while building an index."""

    accepted: int = 0
    skipped: int = 0
    errors: list[tuple[int, str]] = field(default_factory=list)

    @property
    def error_count(self) -> int:
        return len(self.errors)

    def to_dict(self) -> dict:
        return {
            "accepted": self.accepted,
            "skipped": self.skipped,
            "error_count": self.error_count,
        }


class KnowledgeIndex:
    """Immutable triple index keyed by concept (both endpoints).

    Duplicate (source, relation, target) assertions are collapsed at build
    time, keeping the maximum-weight instance.
    """

    def __init__(self, triples: Iterable[Triple], stats: IngestStats | None = None):
        self._triples: tuple[Triple, ...] = tuple(triples)
        self.stats = stats or IngestStats()
        self._by_concept: dict[str, tuple[int, ...]] = {}
        by_concept: dict[str, list[int]] = {}
        for i, triple in enumerate(self._triples):
            for concept in {triple.source, triple.target}:
                by_concept.setdefault(concept, []).append(i)
        self._by_concept = {c: tuple(ix) for c, ix in by_concept.items()}
        self.relation_counts = Counter(t.relation for t in self._triples)

    def __len__(self) -> int:
        return len(self._triples)

    def __iter__(self) -> Iterator[Triple]:
        return iter(self._triples)

    def concepts(self) -> Iterator[str]:
        return iter(self._by_concept)

    def lookup(self, concept: str) -> list[Triple]:
        """All triples having the concept as source or target.

        The concept must already be canonical; unknown concepts yield an
        empty list. Order is the dump's first-seen order; ranking is a
        separate concern.
        """
        return [self._triples[i] for i in self._by_concept.get(concept, ())]


def build_index(
    lines: Iterable[str], *, relations: frozenset[RelationKind] | None = None
) -> KnowledgeIndex:
    """Ingest dump lines into a KnowledgeIndex.

    Malformed lines are recorded in the stats (with their 1-based line
    number) but do not abort the build; a failure of the underlying
    stream raises IngestError carrying the partial-progress stats.
    """
    stats = IngestStats()
    best: dict[tuple[str, str, str], Triple] = {}
    lineno = 0
    try:
        for line in lines:
            lineno += 1
            if not line.strip():
                stats.skipped += 1
                continue
            try:
                triple = parse_assertion_line(line, relations=relations)
            except AssertionLineError as exc:
                stats.errors.append((lineno, str(exc)))
                continue
            if triple is None:
                stats.skipped += 1
                continue
            stats.accepted += 1
            key = triple.key()
            existing = best.get(key)
            if existing is None or triple.weight > existing.weight:
                best[key] = triple
    except OSError as exc:
        raise IngestError(f"dump stream failed at line {lineno}: {exc}", stats) from exc
    return KnowledgeIndex(best.values(), stats)


def open_dump(path: str | Path) -> IO[str]:
    """Open a dump file as text, transparently handling gzip by magic bytes."""
    path = Path(path)
    with path.open("rb") as probe:
        magic = probe.read(2)
    if magic == _GZIP_MAGIC:
        return io.TextIOWrapper(gzip.open(path, "rb"), encoding="utf-8")
    return path.open("r", encoding="utf-8")


def save_snapshot(index: KnowledgeIndex, path: str | Path) -> None:
    """Write the index to its line-delimited snapshot format.

    Line 1 is a JSON header with a magic marker, a format version, and the
    triple count; every following line is one triple as a compact JSON
    array ``[source, relation_token, target, weight]``. Paths ending in
    ``.gz`` are gzip-compressed.
    """
    path = Path(path)
    header = {
        "magic": SNAPSHOT_MAGIC,
        "version": SNAPSHOT_VERSION,
        "triples": len(index),
        "stats": index.stats.to_dict(),
    }
    opener = gzip.open if path.suffix == ".gz" else open
    with opener(path, "wt", encoding="utf-8") as fh:
        fh.write(json.dumps(header, sort_keys=True) + "\n")
        for triple in index:
            row = [triple.source, triple.relation.uri_token, triple.target, triple.weight]
            fh.write(json.dumps(row) + "\n")


def load_snapshot(path: str | Path) -> KnowledgeIndex:
    """Load a snapshot written by save_snapshot, validating its header."""
    path = Path(path)
    with path.open("rb") as probe:
        compressed = probe.read(2) == _GZIP_MAGIC
    opener = gzip.open if compressed else open
    with opener(path, "rt", encoding="utf-8") as fh:
        try:
            header = json.loads(fh.readline())
        except json.JSONDecodeError as exc:
            raise SnapshotError(f"unreadable snapshot header: {exc}") from exc
        if not isinstance(header, dict) or header.get("magic") != SNAPSHOT_MAGIC:
            raise SnapshotError("not a knowledge-index snapshot (bad magic)")
        if header.get("version") != SNAPSHOT_VERSION:
            raise SnapshotError(
                f"unsupported snapshot version: {header.get('version')!r}"
            )
        stats = IngestStats(
            accepted=header.get("stats", {}).get("accepted", 0),
            skipped=header.get("stats", {}).get("skipped", 0),
        )
        triples = []
        for lineno, line in enumerate(fh, start=2):
            if not line.strip():
                continue
            try:
                source, token, target, weight = json.loads(line)
                kind = relation_from_uri("/r/" + token)
                if kind is None:
                    raise ValueError(f"unknown relation token {token!r}")
                triples.append(Triple(source, kind, target, float(weight)))
            except (ValueError, TypeError) as exc:
                raise SnapshotError(f"bad snapshot line {lineno}: {exc}") from exc
        if len(triples) != header.get("triples"):
            raise SnapshotError(
                f"snapshot truncated: header says {header.get('triples')} triples, "
                f"found {len(triples)}"
            )
    return KnowledgeIndex(triples, stats)
