"""The three-step annotation workflow as an explicit state machine.

A session moves Started -> ConceptChosen -> TripleChosen -> Completed.
Abandoning is possible from any non-final state, and StepBack walks one
step backwards so experts can revise. The triple recommendation list is
snapshotted when the concept is chosen; the chosen triple must come from
that snapshot even if the underlying index changes later.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Union

from .kgstore import Triple, normalize_concept
from .ranker import RankedTriple


class SessionState(str, Enum):
    STARTED = "started"
    CONCEPT_CHOSEN = "concept_chosen"
    TRIPLE_CHOSEN = "triple_chosen"
    COMPLETED = "completed"
    ABANDONED = "abandoned"


@dataclass(frozen=True)
class ChooseConcept:
    concept: str


@dataclass(frozen=True)
class ChooseTriple:
    triple: Triple


@dataclass(frozen=True)
class SubmitQA:
    question: str
    answer: str


@dataclass(frozen=True)
class StepBack:
    pass


@dataclass(frozen=True)
class Abandon:
    pass


Event = Union[ChooseConcept, ChooseTriple, SubmitQA, StepBack, Abandon]

Recommender = Callable[[str], list[RankedTriple]]


class StateError(RuntimeError):
    """An event was applied in a state where it is not legal."""

    def __init__(self, state: SessionState, event: Event):
        super().__init__(
            f"event {type(event).__name__} is illegal in state {state.value!r}"
        )
        self.state = state
        self.event = event


class TripleNotRecommendedError(ValueError):
    """The chosen triple is not in the snapshotted recommendation list."""


class QAValidationError(ValueError):
    """A submitted QA pair violates one or more hard record rules."""

    def __init__(self, violations: list[str]):
        super().__init__("; ".join(violations))
        self.violations = violations


@dataclass
class AnnotationSession:
    session_id: str
    annotator_id: str
    story_id: str
    section_index: int
    section_text: str
    state: SessionState = SessionState.STARTED
    chosen_concept: str | None = None
    recommended: tuple[RankedTriple, ...] | None = None
    chosen_triple: Triple | None = None
    question: str | None = None
    answer: str | None = None
    qa_warnings: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {
            "session_id": self.session_id,
            "annotator_id": self.annotator_id,
            "story_id": self.story_id,
            "section_index": self.section_index,
            "state": self.state.value,
            "concept": self.chosen_concept,
            "recommended": (
                None
                if self.recommended is None
                else [r.to_dict() for r in self.recommended]
            ),
            "triple": None if self.chosen_triple is None else self.chosen_triple.to_dict(),
            "question": self.question,
            "answer": self.answer,
            "qa_warnings": list(self.qa_warnings),
        }


def _display_in_text(display: str, text: str) -> bool:
    pattern = r"\b" + re.escape(display) + r"\b"
    return re.search(pattern, text, flags=re.IGNORECASE) is not None


def validate_qa(
    question: str, answer: str, triple: Triple
) -> tuple[list[str], list[str]]:
    """Check a QA pair against the record rules.

    Returns (hard violations, warnings). Hard rules: non-empty question
    and answer, and at least one triple endpoint appearing on word
    boundaries in the question or answer. A question not ending in "?" is
    only a lint-level warning so legitimate expert phrasing is never
    rejected.
    """
    violations: list[str] = []
    warnings: list[str] = []
    if not question or not question.strip():
        violations.append("question is empty")
    if not answer or not answer.strip():
        violations.append("answer is empty")
    if question and question.strip():
        endpoints = (triple.source_display, triple.target_display)
        if not any(
            _display_in_text(d, text)
            for d in endpoints
            for text in (question, answer)
        ):
            violations.append(
                "neither triple concept "
                f"({triple.source_display!r}, {triple.target_display!r}) "
                "appears in the question or answer"
            )
        if not question.rstrip().endswith("?"):
            warnings.append("question does not end with '?'")
    return violations, warnings


def advance(
    session: AnnotationSession,
    event: Event,
    recommend: Recommender | None = None,
) -> AnnotationSession:
    """Apply one workflow event, mutating and returning the session.

    ``recommend`` maps a canonical concept to its ranked triple list and
    is only consulted for ChooseConcept events. Illegal transitions raise
    StateError; QA rule violations raise QAValidationError and leave the
    session in TripleChosen.
    """
    state = session.state

    if isinstance(event, ChooseConcept):
        if state is not SessionState.STARTED:
            raise StateError(state, event)
        if recommend is None:
            raise ValueError("ChooseConcept requires a recommender")
        concept = normalize_concept(event.concept)
        session.chosen_concept = concept
        session.recommended = tuple(recommend(concept))
        session.state = SessionState.CONCEPT_CHOSEN
        return session

    if isinstance(event, ChooseTriple):
        if state is not SessionState.CONCEPT_CHOSEN:
            raise StateError(state, event)
        assert session.recommended is not None
        wanted = event.triple.key()
        for ranked in session.recommended:
            if ranked.triple.key() == wanted:
                session.chosen_triple = ranked.triple
                session.state = SessionState.TRIPLE_CHOSEN
                return session
        raise TripleNotRecommendedError(
            f"triple {event.triple.as_text()!r} is not in the recommended list"
        )

    if isinstance(event, SubmitQA):
        if state is not SessionState.TRIPLE_CHOSEN:
            raise StateError(state, event)
        assert session.chosen_triple is not None
        violations, warnings = validate_qa(
            event.question, event.answer, session.chosen_triple
        )
        if violations:
            raise QAValidationError(violations)
        session.question = event.question
        session.answer = event.answer
        session.qa_warnings = tuple(warnings)
        session.state = SessionState.COMPLETED
        return session

    if isinstance(event, StepBack):
        if state is SessionState.CONCEPT_CHOSEN:
            session.chosen_concept = None
            session.recommended = None
            session.state = SessionState.STARTED
            return session
        if state is SessionState.TRIPLE_CHOSEN:
            session.chosen_triple = None
            session.state = SessionState.CONCEPT_CHOSEN
            return session
        raise StateError(state, event)

    if isinstance(event, Abandon):
        if state in (SessionState.COMPLETED, SessionState.ABANDONED):
            raise StateError(state, event)
        session.state = SessionState.ABANDONED
        return session

    raise TypeError(f"unknown event: {event!r}")
