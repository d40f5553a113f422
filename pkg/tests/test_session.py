import random

import pytest

from storykg.ranker import RankedTriple
from storykg.session import (
    Abandon,
    AnnotationSession,
    ChooseConcept,
    ChooseTriple,
    QAValidationError,
    SessionState,
    StateError,
    StepBack,
    SubmitQA,
    TripleNotRecommendedError,
    advance,
    validate_qa,
)

from .conftest import make_triple

BAG_TRIPLE = make_triple("bag", "USED_FOR", "carrying_things", 2.0)
DAGGER_TRIPLE = make_triple("dagger", "IS_A", "short_sword", 1.0)
COLOR_TRIPLE = make_triple("white", "IS_A", "color", 1.0)

RECOMMENDATIONS = {
    "bag": [
        RankedTriple(BAG_TRIPLE, 0.0, 3.0),
        RankedTriple(make_triple("bag", "MADE_OF", "leather", 1.0), 0.0, 2.0),
    ],
    "dagger": [RankedTriple(DAGGER_TRIPLE, 0.0, 2.0)],
    "white": [RankedTriple(COLOR_TRIPLE, 0.0, 2.0)],
}


def recommend(concept):
    return RECOMMENDATIONS.get(concept, [])


def fresh_session(session_id="s1"):
    return AnnotationSession(
        session_id=session_id,
        annotator_id="expert-a",
        story_id="tale",
        section_index=1,
        section_text="They carried a leather bag.",
    )


class TestHappyPath:
    def test_three_step_flow(self):
        session = fresh_session()
        advance(session, ChooseConcept("bag"), recommend)
        assert session.state is SessionState.CONCEPT_CHOSEN
        assert session.recommended is not None and len(session.recommended) <= 6
        advance(session, ChooseTriple(BAG_TRIPLE), recommend)
        assert session.state is SessionState.TRIPLE_CHOSEN
        advance(
            session,
            SubmitQA("What is a bag used for?", "A bag is used for carrying things."),
            recommend,
        )
        assert session.state is SessionState.COMPLETED
        assert session.question == "What is a bag used for?"

    def test_choose_concept_normalizes(self):
        session = fresh_session()
        advance(session, ChooseConcept("  Bag "), recommend)
        assert session.chosen_concept == "bag"


class TestIllegalTransitions:
    def test_qa_before_triple(self):
        session = fresh_session()
        advance(session, ChooseConcept("bag"), recommend)
        with pytest.raises(StateError) as err:
            advance(session, SubmitQA("What is a bag?", "A bag."), recommend)
        assert "concept_chosen" in str(err.value)

    def test_triple_before_concept(self):
        with pytest.raises(StateError):
            advance(fresh_session(), ChooseTriple(BAG_TRIPLE), recommend)

    def test_double_concept_choice(self):
        session = fresh_session()
        advance(session, ChooseConcept("bag"), recommend)
        with pytest.raises(StateError):
            advance(session, ChooseConcept("dagger"), recommend)

    def test_stepback_from_started(self):
        with pytest.raises(StateError):
            advance(fresh_session(), StepBack(), recommend)

    def test_completed_is_final(self):
        session = fresh_session()
        advance(session, ChooseConcept("bag"), recommend)
        advance(session, ChooseTriple(BAG_TRIPLE), recommend)
        advance(session, SubmitQA("What is a bag used for?", "Carrying things."), recommend)
        for event in (ChooseConcept("bag"), StepBack(), Abandon()):
            with pytest.raises(StateError):
                advance(session, event, recommend)

    def test_abandoned_is_final(self):
        session = fresh_session()
        advance(session, Abandon(), recommend)
        with pytest.raises(StateError):
            advance(session, ChooseConcept("bag"), recommend)


class TestTripleMembership:
    def test_foreign_triple_rejected(self):
        session = fresh_session()
        advance(session, ChooseConcept("bag"), recommend)
        with pytest.raises(TripleNotRecommendedError):
            advance(session, ChooseTriple(DAGGER_TRIPLE), recommend)

    def test_snapshot_survives_recommendation_change(self):
        session = fresh_session()
        advance(session, ChooseConcept("bag"), recommend)
        snapshot = session.recommended
        # recommendations for "bag" change out from under the session
        advance(session, ChooseTriple(BAG_TRIPLE), lambda c: [])
        assert session.recommended == snapshot
        assert session.chosen_triple in [r.triple for r in snapshot]


class TestStepBack:
    def test_back_from_triple_chosen(self):
        session = fresh_session()
        advance(session, ChooseConcept("bag"), recommend)
        advance(session, ChooseTriple(BAG_TRIPLE), recommend)
        advance(session, StepBack(), recommend)
        assert session.state is SessionState.CONCEPT_CHOSEN
        assert session.chosen_triple is None
        assert session.recommended is not None

    def test_back_from_concept_chosen(self):
        session = fresh_session()
        advance(session, ChooseConcept("bag"), recommend)
        advance(session, StepBack(), recommend)
        assert session.state is SessionState.STARTED
        assert session.chosen_concept is None
        assert session.recommended is None

    def test_revise_after_back(self):
        session = fresh_session()
        advance(session, ChooseConcept("bag"), recommend)
        advance(session, StepBack(), recommend)
        advance(session, ChooseConcept("dagger"), recommend)
        assert session.chosen_concept == "dagger"


class TestQAValidation:
    def test_empty_question_rejected(self):
        violations, _ = validate_qa("", "An answer about bags.", BAG_TRIPLE)
        assert "question is empty" in violations

    def test_concept_inclusion_required(self):
        violations, _ = validate_qa(
            "What do people eat?", "People eat food.", BAG_TRIPLE
        )
        assert any("appears in the question or answer" in v for v in violations)

    def test_target_display_in_answer_suffices(self):
        violations, _ = validate_qa(
            "What do you put your things in?", "Something for carrying things.", BAG_TRIPLE
        )
        assert violations == []

    def test_word_boundary_matters(self):
        # "bags" contains "bag" only as a prefix, not on a word boundary...
        violations, _ = validate_qa(
            "What are handbags for?", "Handbags hold items.", BAG_TRIPLE
        )
        assert violations != []

    def test_case_insensitive(self):
        violations, _ = validate_qa("What is a BAG used for?", "Things.", BAG_TRIPLE)
        assert violations == []

    def test_missing_question_mark_is_warning_only(self):
        violations, warnings = validate_qa(
            "Tell me what a bag is used for.", "Carrying things.", BAG_TRIPLE
        )
        assert violations == []
        assert any("?" in w for w in warnings)

    def test_submit_failure_keeps_state(self):
        session = fresh_session()
        advance(session, ChooseConcept("bag"), recommend)
        advance(session, ChooseTriple(BAG_TRIPLE), recommend)
        with pytest.raises(QAValidationError):
            advance(session, SubmitQA("What is snow?", "White."), recommend)
        assert session.state is SessionState.TRIPLE_CHOSEN


def random_event(rng):
    roll = rng.random()
    if roll < 0.30:
        return ChooseConcept(rng.choice(["bag", "dagger", "white", "unknown_word"]))
    if roll < 0.55:
        triple = rng.choice([BAG_TRIPLE, DAGGER_TRIPLE, COLOR_TRIPLE])
        return ChooseTriple(triple)
    if roll < 0.80:
        question, answer = rng.choice(
            [
                ("What is a bag used for?", "Carrying things."),
                ("What is a dagger?", "A short sword."),
                ("What color is snow?", "White is a color of snow."),
                ("What is the weather?", "Sunny."),  # violates inclusion
                ("", "Empty question."),
            ]
        )
        return SubmitQA(question, answer)
    if roll < 0.92:
        return StepBack()
    return Abandon()


class TestRandomWalks:
    """Exhaustive random-walk soundness over the event alphabet."""

    def test_random_sequences_never_break_invariants(self):
        rng = random.Random(2024)
        completed = 0
        for case in range(1200):
            session = fresh_session(f"s{case}")
            for _ in range(rng.randint(1, 12)):
                event = random_event(rng)
                before = session.state
                try:
                    advance(session, event, recommend)
                except StateError:
                    assert session.state is before
                except (TripleNotRecommendedError, QAValidationError):
                    assert session.state is before
                if session.state in (SessionState.COMPLETED, SessionState.ABANDONED):
                    break
            if session.state is SessionState.COMPLETED:
                completed += 1
                assert session.chosen_concept is not None
                assert session.chosen_triple is not None
                assert session.question and session.answer
                assert session.recommended is not None
                assert session.chosen_triple.key() in {
                    r.triple.key() for r in session.recommended
                }
        assert completed > 0  # the walk does reach the final state sometimes
