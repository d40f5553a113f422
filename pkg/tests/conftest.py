import json
import random

import pytest

from storykg.concepts import LexiconEntry, TierLexicon
from storykg.kgstore import Triple
from storykg.relations import RelationKind


def pytest_configure(config):
    config.addinivalue_line(
        "markers", "acceptance: release-criterion checks (one summary line each)"
    )


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One PASS/FAIL/SKIP line per acceptance criterion."""
    lines = []
    for outcome in ("passed", "failed", "skipped"):
        for report in terminalreporter.stats.get(outcome, []):
            if getattr(report, "when", "call") != "call" and outcome != "skipped":
                continue
            if "test_acceptance" not in report.nodeid:
                continue
            name = report.nodeid.split("::")[-1]
            lines.append((name, outcome.upper()))
    if lines:
        terminalreporter.section("acceptance criteria")
        for name, outcome in sorted(set(lines)):
            terminalreporter.write_line(f"{outcome:<7} {name}")

RELATION_URI_TOKENS = [k.uri_token for k in RelationKind]


def make_dump_line(
    relation: str,
    start: str,
    end: str,
    weight: float | None = 1.0,
    start_lang: str = "en",
    end_lang: str = "en",
) -> str:
    rel_uri = relation if relation.startswith("/r/") else f"/r/{relation}"
    start_uri = f"/c/{start_lang}/{start}"
    end_uri = f"/c/{end_lang}/{end}"
    meta = {"dataset": "/d/test"} if weight is None else {"weight": weight}
    assertion = f"/a/[{rel_uri}/,{start_uri}/,{end_uri}/]"
    return "\t".join([assertion, rel_uri, start_uri, end_uri, json.dumps(meta)])


def make_triple(source, relation, target, weight=1.0) -> Triple:
    if isinstance(relation, str):
        relation = RelationKind[relation]
    return Triple(source, relation, target, weight)


@pytest.fixture
def small_lexicon() -> TierLexicon:
    pos = frozenset
    return TierLexicon(
        {
            "dagger": LexiconEntry(2, pos({"noun"}), 4.8),
            "bag": LexiconEntry(1, pos({"noun"}), 4.9),
            "sword": LexiconEntry(2, pos({"noun"}), 4.9),
            "belt": LexiconEntry(2, pos({"noun"}), 4.9),
            "leather": LexiconEntry(2, pos({"noun"}), 4.7),
            "hidden": LexiconEntry(2, pos({"adjective"}), 3.0),
            "carry": LexiconEntry(1, pos({"verb"}), 4.0),
            "wear": LexiconEntry(1, pos({"verb"}), 4.0),
            "white": LexiconEntry(1, pos({"adjective"}), 4.2),
            "injury": LexiconEntry(2, pos({"noun"}), 3.7),
            "water": LexiconEntry(1, pos({"noun"}), 5.0),
            "run": LexiconEntry(1, pos({"verb"}), 4.3),
            "house": LexiconEntry(1, pos({"noun"}), 5.0),
            "king": LexiconEntry(1, pos({"noun"}), 4.6),
        }
    )


def random_dump_lines(n: int, seed: int) -> list[str]:
    """A synthetic dump excerpt mixing accepted, skipped, and broken lines."""
    rng = random.Random(seed)
    concepts = [f"c{i:02d}" for i in range(40)]
    lines = []
    for _ in range(n):
        roll = rng.random()
        start, end = rng.choice(concepts), rng.choice(concepts)
        if roll < 0.70:
            rel = rng.choice(RELATION_URI_TOKENS)
            lines.append(
                make_dump_line(rel, start, end, weight=round(rng.uniform(0.5, 6.0), 2))
            )
        elif roll < 0.82:
            rel = rng.choice(["Synonym", "RelatedTo", "DerivedFrom", "FormOf"])
            lines.append(make_dump_line(rel, start, end))
        elif roll < 0.92:
            rel = rng.choice(RELATION_URI_TOKENS)
            lang = rng.choice(["fr", "es", "de", "ja"])
            lines.append(make_dump_line(rel, start, end, start_lang=lang))
        elif roll < 0.97:
            lines.append(make_dump_line(rng.choice(RELATION_URI_TOKENS), start, end, weight=None))
        else:
            lines.append(rng.choice([
                "garbage line without tabs",
                "/a/x\t/r/IsA\t/c/en/a",
                make_dump_line("IsA", start, end).rsplit("\t", 1)[0] + "\t{not json",
            ]))
    return lines
