import random
import time

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from storykg.kgstore import Triple
from storykg.ranker import (
    EmptyCandidatesError,
    RankingConfig,
    mean_similarities,
    rank,
    triple_to_document,
)
from storykg.relations import RelationKind

from .conftest import make_triple
from .oracles import mean_cosine_to_others, rank_oracle

KINDS = list(RelationKind)


def random_triples(rng: random.Random, n: int) -> list[Triple]:
    words = ["bag", "dagger", "sword", "water", "tree", "house", "bird", "stone"]
    triples = []
    seen = set()
    while len(triples) < n:
        t = Triple(
            rng.choice(words),
            rng.choice(KINDS),
            "_".join(rng.sample(words, rng.randint(1, 2))),
            round(rng.uniform(0.0, 5.0), 2),
        )
        if t.key() not in seen:
            seen.add(t.key())
            triples.append(t)
    return triples


class TestTripleToDocument:
    def test_used_for_rendering(self):
        doc = triple_to_document(make_triple("bag", "USED_FOR", "carrying_things"))
        assert doc.text == "bag is used for carrying things"

    def test_is_a_rendering(self):
        doc = triple_to_document(make_triple("white", "IS_A", "color"))
        assert doc.text == "white is a color"

    def test_multiword_source(self):
        doc = triple_to_document(make_triple("dagger", "IS_A", "short_sword"))
        assert doc.text == "dagger is a short sword"

    def test_contains_relation_phrase(self):
        for kind in RelationKind:
            doc = triple_to_document(make_triple("x", kind.name, "y"))
            assert kind.phrase in doc.text


class TestMeanSimilarities:
    def test_single_document_is_zero(self):
        docs = [triple_to_document(make_triple("bag", "IS_A", "container"))]
        assert mean_similarities(docs) == [0.0]

    def test_identical_documents_are_one(self):
        t = make_triple("bag", "USED_FOR", "carrying_things")
        docs = [triple_to_document(t, 0), triple_to_document(t, 1)]
        sims = mean_similarities(docs)
        assert sims == pytest.approx([1.0, 1.0], abs=1e-12)

    def test_empty_docs_rejected(self):
        with pytest.raises(EmptyCandidatesError):
            mean_similarities([])

    def test_three_document_fixture_matches_oracle(self):
        triples = [
            make_triple("bag", "USED_FOR", "carrying_things"),
            make_triple("bag", "IS_A", "container"),
            make_triple("bag", "MADE_OF", "leather"),
        ]
        docs = [triple_to_document(t, i) for i, t in enumerate(triples)]
        sims = mean_similarities(docs)
        expected = mean_cosine_to_others([d.text for d in docs])
        assert sims == pytest.approx(expected, abs=1e-9)

    @settings(max_examples=50, deadline=None)
    @given(st.integers(min_value=0, max_value=10_000), st.integers(min_value=1, max_value=9))
    def test_values_in_unit_interval(self, seed, n):
        rng = random.Random(seed)
        docs = [
            triple_to_document(t, i)
            for i, t in enumerate(random_triples(rng, n))
        ]
        for value in mean_similarities(docs):
            assert 0.0 <= value <= 1.0


class TestRank:
    def test_weight_breaks_equal_similarity(self):
        # Identical documents share s_mean, so the higher weight must win.
        heavy = make_triple("bag", "IS_A", "container", 2.0)
        light = make_triple("bag", "IS_A", "container", 1.0)
        ranked = rank([light, heavy])
        assert [r.triple.weight for r in ranked] == [2.0, 1.0]

    def test_k_exceeding_candidates_returns_all_sorted(self):
        rng = random.Random(4)
        triples = random_triples(rng, 4)
        ranked = rank(triples, RankingConfig(top_k=6))
        assert len(ranked) == 4
        scores = [r.score for r in ranked]
        assert scores == sorted(scores, reverse=True)

    def test_empty_input_is_empty_output(self):
        assert rank([]) == []

    def test_matches_exhaustive_oracle(self):
        rng = random.Random(11)
        triples = random_triples(rng, 10)
        ranked = rank(triples, RankingConfig(top_k=6))
        expected = rank_oracle(triples, top_k=6)
        assert [r.triple for r in ranked] == [row[0] for row in expected]
        assert [r.score for r in ranked] == pytest.approx(
            [row[2] for row in expected], abs=1e-9
        )

    def test_score_formula_exact(self):
        rng = random.Random(12)
        for r in rank(random_triples(rng, 8), RankingConfig(top_k=8)):
            assert r.score - (1.0 - r.mean_similarity + r.triple.weight) == 0.0

    def test_weight_shift_preserves_order(self):
        rng = random.Random(13)
        triples = random_triples(rng, 9)
        shifted = [
            Triple(t.source, t.relation, t.target, t.weight + 5.0) for t in triples
        ]
        order = [r.triple.key() for r in rank(triples, RankingConfig(top_k=9))]
        shifted_order = [r.triple.key() for r in rank(shifted, RankingConfig(top_k=9))]
        assert order == shifted_order

    def test_permutation_invariance(self):
        rng = random.Random(14)
        triples = random_triples(rng, 8)
        baseline = rank(triples, RankingConfig(top_k=8))
        for seed in range(5):
            shuffled = triples[:]
            random.Random(seed).shuffle(shuffled)
            assert rank(shuffled, RankingConfig(top_k=8)) == baseline

    def test_output_is_subset_of_input(self):
        rng = random.Random(15)
        triples = random_triples(rng, 10)
        ranked = rank(triples)
        assert len(ranked) == 6
        assert {r.triple.key() for r in ranked} <= {t.key() for t in triples}

    def test_normalize_weights_toggle(self):
        triples = [
            make_triple("bag", "IS_A", "container", 10.0),
            make_triple("bag", "USED_FOR", "carrying_things", 2.0),
        ]
        ranked = rank(triples, RankingConfig(normalize_weights=True))
        by_key = {r.triple.key(): r for r in ranked}
        top = by_key[("bag", "IsA", "container")]
        assert top.score == pytest.approx(1.0 - top.mean_similarity + 1.0)

    def test_bad_config_rejected(self):
        with pytest.raises(ValueError):
            RankingConfig(top_k=0)
        with pytest.raises(ValueError):
            RankingConfig(tie_break="mystery")


class TestRankAcceptanceScale:
    def test_25_random_fixtures_match_oracle_quickly(self):
        start = time.perf_counter()
        for seed in range(25):
            rng = random.Random(1000 + seed)
            triples = random_triples(rng, rng.randint(1, 10))
            ranked = rank(triples, RankingConfig(top_k=6))
            expected = rank_oracle(triples, top_k=6)
            assert [r.triple for r in ranked] == [row[0] for row in expected]
            for got, row in zip(ranked, expected):
                assert got.score == pytest.approx(row[2], abs=1e-9)
                assert got.mean_similarity == pytest.approx(row[1], abs=1e-9)
        assert time.perf_counter() - start < 1.0
