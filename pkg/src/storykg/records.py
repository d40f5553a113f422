"""Durable annotation records: append-only store, export, statistics.

Records live in an append-only JSONL log. The store tolerates a crash
mid-append by quarantining unparseable lines on open, and saving is
idempotent per session so retries never duplicate records. Export emits
the published line-delimited dataset shape with whole-story splits.
"""

from __future__ import annotations

import json
import os
import statistics
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Iterator

from .concepts import count_words
from .kgstore import Triple
from .session import AnnotationSession, SessionState, validate_qa

SPLITS = ("train", "val", "test")
STORE_SCHEMA_VERSION = 1


class PersistenceError(RuntimeError):
    """Raised when the record log cannot be read or appended."""


class ExportError(ValueError):
    """Raised when export preconditions fail (e.g. unmapped stories)."""


@dataclass(frozen=True)
class AnnotationRecord:
    """The full expert artifact for one completed session.

    ``recommended`` snapshots the triple list shown to the annotator (the
    cross-validation workflow re-ranks exactly that list) and
    ``section_text`` captures the context so exports need no corpus join.
    """

    record_id: str
    story_id: str
    section_index: int
    section_text: str
    concept: str
    triple: Triple
    question: str
    answer: str
    annotator_id: str
    created_at: str
    split: str | None = None
    recommended: tuple[Triple, ...] = ()

    def to_dict(self) -> dict:
        return {
            "record_id": self.record_id,
            "story_id": self.story_id,
            "section_index": self.section_index,
            "section_text": self.section_text,
            "concept": self.concept,
            "triple": self.triple.to_dict(),
            "question": self.question,
            "answer": self.answer,
            "annotator_id": self.annotator_id,
            "created_at": self.created_at,
            "split": self.split,
            "recommended": [t.to_dict() for t in self.recommended],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "AnnotationRecord":
        return cls(
            record_id=data["record_id"],
            story_id=data["story_id"],
            section_index=data["section_index"],
            section_text=data["section_text"],
            concept=data["concept"],
            triple=Triple.from_dict(data["triple"]),
            question=data["question"],
            answer=data["answer"],
            annotator_id=data["annotator_id"],
            created_at=data["created_at"],
            split=data.get("split"),
            recommended=tuple(Triple.from_dict(t) for t in data.get("recommended", [])),
        )


class RecordStore:
    """Append-only JSONL store with crash-safe open and idempotent saves."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._records: dict[str, AnnotationRecord] = {}
        self._by_session: dict[str, str] = {}
        self._next_serial = 1
        self._write_lock = threading.Lock()
        self._load()

    def _load(self) -> None:
        if not self.path.exists():
            return
        good_lines: list[str] = []
        quarantined: list[str] = []
        with self.path.open("r", encoding="utf-8") as fh:
            for raw in fh:
                line = raw.rstrip("\n")
                if not line.strip():
                    continue
                try:
                    entry = json.loads(line)
                    record = AnnotationRecord.from_dict(entry["record"])
                    session_id = entry["session_id"]
                except (ValueError, KeyError, TypeError):
                    quarantined.append(line)
                    continue
                self._records[record.record_id] = record
                self._by_session[session_id] = record.record_id
                good_lines.append(line)
        if quarantined:
            with self.path.with_suffix(self.path.suffix + ".quarantine").open(
                "a", encoding="utf-8"
            ) as fh:
                for line in quarantined:
                    fh.write(line + "\n")
            tmp = self.path.with_suffix(self.path.suffix + ".tmp")
            with tmp.open("w", encoding="utf-8") as fh:
                for line in good_lines:
                    fh.write(line + "\n")
            tmp.replace(self.path)
        serials = [
            int(r[1:]) for r in self._records if r.startswith("r") and r[1:].isdigit()
        ]
        self._next_serial = max(serials, default=0) + 1

    def __len__(self) -> int:
        return len(self._records)

    def __iter__(self) -> Iterator[AnnotationRecord]:
        return iter(sorted(self._records.values(), key=lambda r: r.record_id))

    def get(self, record_id: str) -> AnnotationRecord | None:
        return self._records.get(record_id)

    def record_for_session(self, session_id: str) -> AnnotationRecord | None:
        record_id = self._by_session.get(session_id)
        return None if record_id is None else self._records[record_id]

    def _append(self, session_id: str, record: AnnotationRecord) -> None:
        entry = {
            "schema": STORE_SCHEMA_VERSION,
            "session_id": session_id,
            "record": record.to_dict(),
        }
        try:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with self.path.open("a", encoding="utf-8") as fh:
                fh.write(json.dumps(entry, ensure_ascii=False, sort_keys=True) + "\n")
                fh.flush()
                os.fsync(fh.fileno())
        except OSError as exc:
            raise PersistenceError(f"cannot append to {self.path}: {exc}") from exc

    def save(
        self,
        session: AnnotationSession,
        clock: Callable[[], float] = time.time,
    ) -> AnnotationRecord:
        """Persist a completed session as a record.

        Idempotent: saving the same session twice returns the original
        record. Record ids are monotone r-prefixed serials.
        """
        if session.state is not SessionState.COMPLETED:
            raise ValueError(
                f"only completed sessions can be saved (state={session.state.value})"
            )
        with self._write_lock:
            existing = self.record_for_session(session.session_id)
            if existing is not None:
                return existing
            assert session.chosen_triple is not None
            assert session.chosen_concept is not None
            assert session.question is not None and session.answer is not None
            record = AnnotationRecord(
                record_id=f"r{self._next_serial:06d}",
                story_id=session.story_id,
                section_index=session.section_index,
                section_text=session.section_text,
                concept=session.chosen_concept,
                triple=session.chosen_triple,
                question=session.question,
                answer=session.answer,
                annotator_id=session.annotator_id,
                created_at=time.strftime(
                    "%Y-%m-%dT%H:%M:%SZ", time.gmtime(clock())
                ),
                recommended=tuple(r.triple for r in (session.recommended or ())),
            )
            self._append(session.session_id, record)
            self._records[record.record_id] = record
            self._by_session[session.session_id] = record.record_id
            self._next_serial += 1
            return record

    def audit(self) -> list[dict]:
        """Re-check every stored record against the record rules."""
        findings = []
        for record in self:
            violations, warnings = validate_qa(
                record.question, record.answer, record.triple
            )
            if record.recommended and record.triple.key() not in {
                t.key() for t in record.recommended
            }:
                violations.append("triple is not in the snapshotted recommendation list")
            if violations or warnings:
                findings.append(
                    {
                        "record_id": record.record_id,
                        "violations": violations,
                        "warnings": warnings,
                    }
                )
        return findings

    def compact(self) -> None:
        """Rewrite the log, dropping any superseded or quarantined bytes."""
        tmp = self.path.with_suffix(self.path.suffix + ".tmp")
        with tmp.open("w", encoding="utf-8") as fh:
            for session_id, record_id in sorted(
                self._by_session.items(), key=lambda kv: kv[1]
            ):
                entry = {
                    "schema": STORE_SCHEMA_VERSION,
                    "session_id": session_id,
                    "record": self._records[record_id].to_dict(),
                }
                fh.write(json.dumps(entry, ensure_ascii=False, sort_keys=True) + "\n")
        tmp.replace(self.path)


def export_record(record: AnnotationRecord, split: str) -> dict:
    """One line of the published dataset shape."""
    return {
        "story_id": record.story_id,
        "section_index": record.section_index,
        "section_text": record.section_text,
        "concept": record.concept,
        "triple": {
            "source": record.triple.source,
            "relation_phrase": record.triple.relation.phrase,
            "target": record.triple.target,
        },
        "question": record.question,
        "answer": record.answer,
        "split": split,
    }


def export_dataset(
    store_or_records: Iterable[AnnotationRecord],
    split_map: dict[str, str],
    path: str | Path | None = None,
) -> list[dict]:
    """Export records with whole-story split assignment.

    Every record's story must appear in split_map (missing stories raise
    ExportError listing all of them); splits are by story so no story can
    straddle splits. Writes JSONL when a path is given.
    """
    records = list(store_or_records)
    missing = sorted({r.story_id for r in records} - set(split_map))
    if missing:
        raise ExportError(f"stories missing from the split map: {missing}")
    bad = {s: v for s, v in split_map.items() if v not in SPLITS}
    if bad:
        raise ExportError(f"invalid split values: {bad} (expected one of {SPLITS})")
    exported = [export_record(r, split_map[r.story_id]) for r in records]
    if path is not None:
        with Path(path).open("w", encoding="utf-8") as fh:
            for line in exported:
                fh.write(json.dumps(line, ensure_ascii=False, sort_keys=True) + "\n")
    return exported


def import_dataset(path: str | Path) -> list[dict]:
    """Read an export file back into record dicts."""
    records = []
    with Path(path).open("r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            try:
                records.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise ExportError(f"line {lineno}: invalid JSON: {exc}") from exc
    return records


_METRICS = (
    "sections_per_story",
    "tokens_per_story",
    "tokens_per_section",
    "questions_per_story",
    "questions_per_section",
    "tokens_per_question",
    "tokens_per_answer",
)


def _describe(values: list[float]) -> dict:
    if not values:
        return {"mean": 0.0, "sd": 0.0, "min": 0.0, "max": 0.0, "n": 0}
    return {
        "mean": statistics.fmean(values),
        "sd": statistics.pstdev(values),
        "min": min(values),
        "max": max(values),
        "n": len(values),
    }


def summary_statistics(export_records: Iterable[dict]) -> dict:
    """Per-split corpus statistics over export records.

    Sections and stories are the distinct ones present in the records;
    token counts use the standard tokenizer with punctuation excluded.
    SD is population SD. Records without a split group under "all".
    """
    by_split: dict[str, list[dict]] = {}
    for record in export_records:
        by_split.setdefault(record.get("split") or "all", []).append(record)

    report: dict[str, dict] = {}
    for split, records in sorted(by_split.items()):
        section_tokens: dict[tuple[str, int], int] = {}
        story_sections: dict[str, set[int]] = {}
        story_questions: dict[str, int] = {}
        section_questions: dict[tuple[str, int], int] = {}
        question_tokens: list[float] = []
        answer_tokens: list[float] = []
        for record in records:
            key = (record["story_id"], record["section_index"])
            section_tokens.setdefault(key, count_words(record["section_text"]))
            story_sections.setdefault(key[0], set()).add(key[1])
            story_questions[key[0]] = story_questions.get(key[0], 0) + 1
            section_questions[key] = section_questions.get(key, 0) + 1
            question_tokens.append(count_words(record["question"]))
            answer_tokens.append(count_words(record["answer"]))
        story_tokens = {
            story: sum(section_tokens[(story, i)] for i in indices)
            for story, indices in story_sections.items()
        }
        report[split] = {
            "records": len(records),
            "stories": len(story_sections),
            "sections": len(section_tokens),
            "sections_per_story": _describe(
                [float(len(v)) for v in story_sections.values()]
            ),
            "tokens_per_story": _describe([float(v) for v in story_tokens.values()]),
            "tokens_per_section": _describe(
                [float(v) for v in section_tokens.values()]
            ),
            "questions_per_story": _describe(
                [float(v) for v in story_questions.values()]
            ),
            "questions_per_section": _describe(
                [float(v) for v in section_questions.values()]
            ),
            "tokens_per_question": _describe(question_tokens),
            "tokens_per_answer": _describe(answer_tokens),
        }
    return report


def format_statistics(report: dict) -> str:
    """Aligned text rendering of a summary_statistics report."""
    lines = []
    for split, stats in report.items():
        lines.append(
            f"[{split}] {stats['stories']} stories, {stats['sections']} sections, "
            f"{stats['records']} QA pairs"
        )
        lines.append(f"  {'metric':<22} {'mean':>8} {'sd':>8} {'min':>8} {'max':>8}")
        for metric in _METRICS:
            d = stats[metric]
            lines.append(
                f"  {metric:<22} {d['mean']:>8.1f} {d['sd']:>8.1f} "
                f"{d['min']:>8.0f} {d['max']:>8.0f}"
            )
    return "\n".join(lines)
