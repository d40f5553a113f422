"""Cross-validation of annotations by a second expert.

A sampled annotation becomes a task for a different validator, who (1)
re-ranks the top 3 triples from the same recommendation list the original
annotator saw, (2) writes their own QA pair for the originally chosen
triple, and (3) answers the original question. Agreement is reported as
top-3 / top-1 triple overlap plus the mean Rouge-L F1 between QA pairs.
"""

from __future__ import annotations

import json
import random
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Iterator, Sequence

from .kgstore import Triple
from .metrics import rouge_l
from .records import AnnotationRecord

Embedder = Callable[[str], Sequence[float]]


class SamplingError(ValueError):
    """Raised when a validation sample cannot be drawn."""


class ResultValidationError(ValueError):
    """Raised when a submitted validation result violates its rules."""


@dataclass(frozen=True)
class ValidationTask:
    task_id: str
    record: AnnotationRecord
    recommended: tuple[Triple, ...]
    validator_id: str

    def __post_init__(self):
        keys = {t.key() for t in self.recommended}
        if self.record.triple.key() not in keys:
            raise ValueError("the original triple must be in the recommended list")
        if self.validator_id == self.record.annotator_id:
            raise ValueError("a validator cannot validate their own annotation")

    def to_dict(self) -> dict:
        return {
            "task_id": self.task_id,
            "record": self.record.to_dict(),
            "recommended": [t.to_dict() for t in self.recommended],
            "validator_id": self.validator_id,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ValidationTask":
        return cls(
            task_id=data["task_id"],
            record=AnnotationRecord.from_dict(data["record"]),
            recommended=tuple(Triple.from_dict(t) for t in data["recommended"]),
            validator_id=data["validator_id"],
        )


@dataclass(frozen=True)
class ValidationResult:
    task_id: str
    top3: tuple[Triple, ...]
    validator_question: str
    validator_answer_to_own: str
    validator_answer_to_original: str
    created_at: str = ""

    def to_dict(self) -> dict:
        return {
            "task_id": self.task_id,
            "top3": [t.to_dict() for t in self.top3],
            "validator_question": self.validator_question,
            "validator_answer_to_own": self.validator_answer_to_own,
            "validator_answer_to_original": self.validator_answer_to_original,
            "created_at": self.created_at,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ValidationResult":
        return cls(
            task_id=data["task_id"],
            top3=tuple(Triple.from_dict(t) for t in data["top3"]),
            validator_question=data["validator_question"],
            validator_answer_to_own=data["validator_answer_to_own"],
            validator_answer_to_original=data["validator_answer_to_original"],
            created_at=data.get("created_at", ""),
        )


def sample_tasks(
    records: Iterable[AnnotationRecord],
    n: int,
    seed: int,
    validators: Sequence[str],
    split: str | None = None,
    split_map: dict[str, str] | None = None,
) -> list[ValidationTask]:
    """Draw a uniform sample of annotations to validate.

    Records are filtered to ``split`` when given (using the record's own
    split or ``split_map``); sampling is without replacement and fully
    determined by the seed. Validators are assigned round-robin, skipping
    the record's own annotator.
    """
    if not validators:
        raise SamplingError("at least one validator id is required")

    def effective_split(record: AnnotationRecord) -> str | None:
        if record.split is not None:
            return record.split
        if split_map is not None:
            return split_map.get(record.story_id)
        return None

    pool = [
        r
        for r in records
        if r.recommended and (split is None or effective_split(r) == split)
    ]
    if len(pool) < n:
        raise SamplingError(
            f"cannot sample {n} records: only {len(pool)} available"
            + (f" in split {split!r}" if split else "")
        )
    pool.sort(key=lambda r: r.record_id)
    rng = random.Random(seed)
    chosen = rng.sample(pool, n)

    tasks: list[ValidationTask] = []
    cursor = 0
    for record in chosen:
        assigned = None
        for _ in range(len(validators)):
            candidate = validators[cursor % len(validators)]
            cursor += 1
            if candidate != record.annotator_id:
                assigned = candidate
                break
        if assigned is None:
            raise SamplingError(
                f"no validator differs from annotator {record.annotator_id!r}"
            )
        tasks.append(
            ValidationTask(
                task_id=f"vt-{record.record_id}",
                record=record,
                recommended=record.recommended,
                validator_id=assigned,
            )
        )
    return tasks


def check_result(task: ValidationTask, result: ValidationResult) -> None:
    """Validate a result against its task; raises ResultValidationError."""
    problems: list[str] = []
    if result.task_id != task.task_id:
        problems.append(
            f"result is for task {result.task_id!r}, expected {task.task_id!r}"
        )
    expected = min(3, len(task.recommended))
    keys = [t.key() for t in result.top3]
    if len(keys) != expected or len(set(keys)) != len(keys):
        problems.append(f"top3 must hold exactly {expected} distinct triples")
    allowed = {t.key() for t in task.recommended}
    foreign = [k for k in keys if k not in allowed]
    if foreign:
        problems.append(f"top3 contains triples outside the recommended list: {foreign}")
    if not result.validator_question.strip() or not result.validator_answer_to_own.strip():
        problems.append("the validator QA pair is incomplete")
    if not result.validator_answer_to_original.strip():
        problems.append("the answer to the original question is missing")
    if problems:
        raise ResultValidationError("; ".join(problems))


class ValidationStore:
    """JSONL store of (task, result) pairs, one result per task."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._pairs: dict[str, tuple[ValidationTask, ValidationResult]] = {}
        self._write_lock = threading.Lock()
        if self.path.exists():
            with self.path.open("r", encoding="utf-8") as fh:
                for raw in fh:
                    line = raw.strip()
                    if not line:
                        continue
                    try:
                        entry = json.loads(line)
                        task = ValidationTask.from_dict(entry["task"])
                        result = ValidationResult.from_dict(entry["result"])
                    except (ValueError, KeyError, TypeError):
                        continue
                    self._pairs[task.task_id] = (task, result)

    def __len__(self) -> int:
        return len(self._pairs)

    def __iter__(self) -> Iterator[tuple[ValidationTask, ValidationResult]]:
        return iter(
            [self._pairs[k] for k in sorted(self._pairs)]
        )

    def get(self, task_id: str) -> tuple[ValidationTask, ValidationResult] | None:
        return self._pairs.get(task_id)

    def record_result(
        self,
        task: ValidationTask,
        result: ValidationResult,
        clock: Callable[[], float] = time.time,
    ) -> ValidationResult:
        """Store one validated result per task.

        Resubmitting an identical result is idempotent; a different result
        for an already-answered task is rejected.
        """
        check_result(task, result)
        with self._write_lock:
            existing = self._pairs.get(task.task_id)
            if existing is not None:
                stored = existing[1]
                same = (
                    [t.key() for t in stored.top3] == [t.key() for t in result.top3]
                    and stored.validator_question == result.validator_question
                    and stored.validator_answer_to_own == result.validator_answer_to_own
                    and stored.validator_answer_to_original
                    == result.validator_answer_to_original
                )
                if same:
                    return stored
                raise ResultValidationError(
                    f"task {task.task_id!r} already has a different result"
                )
            if not result.created_at:
                result = ValidationResult(
                    task_id=result.task_id,
                    top3=result.top3,
                    validator_question=result.validator_question,
                    validator_answer_to_own=result.validator_answer_to_own,
                    validator_answer_to_original=result.validator_answer_to_original,
                    created_at=time.strftime(
                        "%Y-%m-%dT%H:%M:%SZ", time.gmtime(clock())
                    ),
                )
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with self.path.open("a", encoding="utf-8") as fh:
                entry = {"task": task.to_dict(), "result": result.to_dict()}
                fh.write(json.dumps(entry, ensure_ascii=False, sort_keys=True) + "\n")
            self._pairs[task.task_id] = (task, result)
            return result


@dataclass(frozen=True)
class AgreementReport:
    n: int
    top3_agreement: float
    top1_agreement: float
    rouge_l_f1: float
    embedding_similarity: float | None = None

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "top3_agreement": self.top3_agreement,
            "top1_agreement": self.top1_agreement,
            "rouge_l_f1": self.rouge_l_f1,
            "embedding_similarity": self.embedding_similarity,
        }


def _cosine(a: Sequence[float], b: Sequence[float]) -> float:
    dot = sum(x * y for x, y in zip(a, b))
    na = sum(x * x for x in a) ** 0.5
    nb = sum(y * y for y in b) ** 0.5
    if na == 0 or nb == 0:
        return 0.0
    return dot / (na * nb)


def agreement_report(
    pairs: Iterable[tuple[ValidationTask, ValidationResult]],
    embedder: Embedder | None = None,
) -> AgreementReport:
    """Aggregate agreement measures over completed validation tasks.

    Measures: fraction of tasks whose original triple appears in the
    validator's top 3; fraction where it is ranked first; mean Rouge-L F1
    between the concatenated (question + space + answer) texts, lowercased;
    optionally the mean cosine similarity of embedded QA texts when an
    embedding provider is supplied.
    """
    pairs = list(pairs)
    if not pairs:
        raise ValueError("at least one validation result is required")
    top3_hits = 0
    top1_hits = 0
    rouge_scores = []
    emb_scores = []
    for task, result in pairs:
        original_key = task.record.triple.key()
        keys = [t.key() for t in result.top3]
        if original_key in keys:
            top3_hits += 1
        if keys and keys[0] == original_key:
            top1_hits += 1
        original_qa = f"{task.record.question} {task.record.answer}".lower()
        validator_qa = (
            f"{result.validator_question} {result.validator_answer_to_own}".lower()
        )
        rouge_scores.append(rouge_l(validator_qa, original_qa).f1)
        if embedder is not None:
            emb_scores.append(_cosine(embedder(original_qa), embedder(validator_qa)))
    n = len(pairs)
    return AgreementReport(
        n=n,
        top3_agreement=top3_hits / n,
        top1_agreement=top1_hits / n,
        rouge_l_f1=sum(rouge_scores) / n,
        embedding_similarity=(sum(emb_scores) / n) if emb_scores else None,
    )
