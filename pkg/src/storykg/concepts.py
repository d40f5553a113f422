"""Candidate-concept extraction from story section text.

A section is tokenized, tagged with a coarse part of speech, and filtered
down to common-vocabulary content words (nouns, verbs, adjectives in tier
1 or 2 of the lexicon). A pre-tagged import path accepts tokens and
semantic-role spans produced by an external tagger and bypasses the
built-in heuristics entirely.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable

from .kgstore import normalize_concept

logger = logging.getLogger(__name__)

NOUN = "noun"
VERB = "verb"
ADJECTIVE = "adjective"
CONTENT_POS = frozenset({NOUN, VERB, ADJECTIVE})

#: Tags dropped outright before any lexicon check.
EXCLUDED_POS = frozenset(
    {"auxiliary", "adposition", "determiner", "particle", "punctuation", "symbol", "other"}
)

ROLE_LABELS = frozenset({"agent", "goal", "result"})

_TOKEN_RE = re.compile(r"[A-Za-z0-9]+(?:['’][A-Za-z0-9]+)*|[^\sA-Za-z0-9]+")

_DETERMINERS = frozenset("the a an this that these those every each some any no".split())
_AUXILIARIES = frozenset(
    "be am is are was were been being have has had do does did will would "
    "shall should may might must can could".split()
)
_ADPOSITIONS = frozenset(
    "of in on at by for with from to into onto over under above below between "
    "through during before after about against among around behind beneath "
    "beside near off out up down upon within without".split()
)
_PARTICLES = frozenset({"not", "nt"})
_CLOSED_OTHER = frozenset(
    "i you he she it we they me him her us them my your his its our their "
    "mine yours hers ours theirs who whom whose which what and or but nor so "
    "yet if then than because while when where how why there here very too "
    "also just only even still never always often again once more most".split()
)
_SYMBOL_CHARS = set("$%€£+=<>^|~#&*@/\\")

_ADJ_SUFFIXES = ("ous", "ful", "ish", "ive", "able", "ible", "less", "ic", "al")

_LEMMA_EXCEPTIONS = {
    "children": "child",
    "men": "man",
    "women": "woman",
    "feet": "foot",
    "teeth": "tooth",
    "mice": "mouse",
    "geese": "goose",
    "wolves": "wolf",
    "knives": "knife",
    "leaves": "leaf",
    "lives": "life",
    "wives": "wife",
    "thieves": "thief",
    "went": "go",
    "gone": "go",
    "ran": "run",
    "came": "come",
    "took": "take",
    "taken": "take",
    "gave": "give",
    "given": "give",
    "made": "make",
    "said": "say",
    "told": "tell",
    "wore": "wear",
    "worn": "wear",
    "stood": "stand",
    "sat": "sit",
    "found": "find",
    "brought": "bring",
    "thought": "think",
    "caught": "catch",
    "held": "hold",
    "kept": "keep",
    "left": "leave",
    "felt": "feel",
    "fell": "fall",
    "flew": "fly",
    "drew": "draw",
    "grew": "grow",
    "knew": "know",
    "threw": "throw",
    "spoke": "speak",
    "broke": "break",
    "chose": "choose",
    "rode": "ride",
    "wrote": "write",
    "ate": "eat",
    "slept": "sleep",
    "heard": "hear",
    "built": "build",
    "bought": "buy",
    "carried": "carry",
    "children's": "child",
}


class LexiconError(ValueError):
    """Raised for malformed lexicon files or entries."""


class PretaggedImportError(ValueError):
    """Raised when a pre-tagged record violates the documented schema."""

    def __init__(self, message: str, field_name: str | None = None):
        super().__init__(message)
        self.field_name = field_name


@dataclass(frozen=True)
class Token:
    text: str
    lemma: str
    pos: str
    start: int
    end: int

    @property
    def span(self) -> tuple[int, int]:
        return (self.start, self.end)


@dataclass(frozen=True)
class RoleSpan:
    label: str
    start: int
    end: int


@dataclass(frozen=True)
class CandidateConcept:
    """A kept lemma with every span where it occurs in the section."""

    lemma: str
    pos: str
    spans: tuple[tuple[int, int], ...]
    roles: frozenset[str] = frozenset()

    def to_dict(self) -> dict:
        return {
            "lemma": self.lemma,
            "pos": self.pos,
            "spans": [list(s) for s in self.spans],
            "roles": sorted(self.roles),
        }


@dataclass(frozen=True)
class LexiconEntry:
    tier: int
    pos: frozenset[str]
    concreteness: float | None = None


class TierLexicon:
    """Immutable lemma -> (tier, allowed pos, concreteness) mapping."""

    def __init__(self, entries: dict[str, LexiconEntry]):
        for lemma, entry in entries.items():
            if entry.tier not in (1, 2):
                raise LexiconError(f"tier must be 1 or 2 for {lemma!r}, got {entry.tier}")
            bad = entry.pos - CONTENT_POS
            if bad:
                raise LexiconError(f"unknown pos {sorted(bad)} for {lemma!r}")
        self._entries = dict(entries)

    def __contains__(self, lemma: str) -> bool:
        return lemma in self._entries

    def __len__(self) -> int:
        return len(self._entries)

    def get(self, lemma: str) -> LexiconEntry | None:
        return self._entries.get(lemma)

    @classmethod
    def from_file(cls, path: str | Path) -> "TierLexicon":
        """Load the documented lexicon format.

        One entry per line: ``lemma<TAB>tier<TAB>pos1,pos2[<TAB>score]``;
        blank lines and ``#`` comments are skipped.
        """
        entries: dict[str, LexiconEntry] = {}
        with Path(path).open("r", encoding="utf-8") as fh:
            for lineno, raw in enumerate(fh, start=1):
                line = raw.strip()
                if not line or line.startswith("#"):
                    continue
                parts = re.split(r"\t+|\s{2,}", line)
                if len(parts) == 1:
                    parts = line.split()
                if len(parts) < 3:
                    raise LexiconError(f"line {lineno}: expected at least 3 columns")
                lemma = normalize_concept(parts[0])
                try:
                    tier = int(parts[1])
                except ValueError as exc:
                    raise LexiconError(f"line {lineno}: bad tier {parts[1]!r}") from exc
                pos = frozenset(p.strip() for p in parts[2].split(",") if p.strip())
                concreteness = None
                if len(parts) >= 4:
                    try:
                        concreteness = float(parts[3])
                    except ValueError as exc:
                        raise LexiconError(
                            f"line {lineno}: bad concreteness {parts[3]!r}"
                        ) from exc
                if tier not in (1, 2):
                    raise LexiconError(f"line {lineno}: tier must be 1 or 2, got {tier}")
                entries[lemma] = LexiconEntry(tier, pos, concreteness)
        return cls(entries)

    @classmethod
    def from_frequency_list(
        cls, words: Iterable[str], tier1_rank: int = 1000, tier2_rank: int = 6000
    ) -> "TierLexicon":
        """Derive tiers from a frequency-ranked word list.

        Rank <= tier1_rank maps to tier 1, rank <= tier2_rank to tier 2,
        everything rarer is dropped. Closed-class function words are
        excluded since frequency lists are dominated by them; entries get
        all three content pos tags because the list carries none.
        """
        function_words = (
            _DETERMINERS | _AUXILIARIES | _ADPOSITIONS | _PARTICLES | _CLOSED_OTHER
        )
        entries: dict[str, LexiconEntry] = {}
        rank = 0
        for word in words:
            rank += 1
            if rank > tier2_rank:
                break
            lemma = normalize_concept(word)
            if lemma in function_words or lemma in entries:
                continue
            tier = 1 if rank <= tier1_rank else 2
            entries[lemma] = LexiconEntry(tier, CONTENT_POS)
        return cls(entries)

    @classmethod
    def packaged(cls) -> "TierLexicon":
        """The lexicon shipped with the package."""
        ref = resources.files("storykg").joinpath("data/tier_lexicon.txt")
        with resources.as_file(ref) as path:
            return cls.from_file(path)


def lemmatize(word: str, lexicon: TierLexicon | None = None) -> str:
    """Suffix-stripping lemmatizer backed by an exceptions table.

    Deliberately approximate; the pre-tagged import path carries real
    lemmas and skips this entirely. When a lexicon is given it is used to
    validate stripped forms (e.g. restoring a silent e).
    """
    w = word.lower()
    if w in _LEMMA_EXCEPTIONS:
        return _LEMMA_EXCEPTIONS[w]
    if lexicon is not None and w in lexicon:
        return w

    def known(form: str) -> bool:
        return lexicon is not None and form in lexicon

    if w.endswith("ies") and len(w) > 4:
        return w[:-3] + "y"
    if w.endswith("sses"):
        return w[:-2]
    if w.endswith(("xes", "ches", "shes", "zes", "oes")):
        return w[:-2]
    if w.endswith("s") and not w.endswith(("ss", "us", "is")) and len(w) > 3:
        return w[:-1]
    for suffix in ("ing", "ed"):
        if w.endswith(suffix) and len(w) > len(suffix) + 2:
            stem = w[: -len(suffix)]
            if known(stem):
                return stem
            if known(stem + "e"):
                return stem + "e"
            if len(stem) > 2 and stem[-1] == stem[-2] and not known(stem):
                return stem[:-1]
            return stem
    return w


def _is_word(surface: str) -> bool:
    return surface[0].isalnum()


def _heuristic_pos(surface: str, lemma: str) -> str:
    if lemma in _DETERMINERS:
        return "determiner"
    if lemma in _AUXILIARIES:
        return "auxiliary"
    if lemma in _ADPOSITIONS:
        return "adposition"
    if lemma in _PARTICLES or surface.lower() in ("n't", "'t"):
        return "particle"
    if lemma in _CLOSED_OTHER:
        return "other"
    if surface.lower().endswith("ly"):
        return "other"
    if surface.lower().endswith(("ing", "ed")) and surface.lower() != lemma:
        return VERB
    if surface.lower().endswith(_ADJ_SUFFIXES):
        return ADJECTIVE
    return NOUN


_POS_PREFERENCE = (NOUN, VERB, ADJECTIVE)


def tokenize(section_text: str, lexicon: TierLexicon | None = None) -> list[Token]:
    """Split text into word and punctuation tokens with character spans.

    The default tagger prefers the lexicon's allowed-pos data for known
    lemmas and falls back to closed-class lists and suffix heuristics.
    Deterministic; empty text yields an empty list.
    """
    tokens = []
    for m in _TOKEN_RE.finditer(section_text):
        surface = m.group()
        start, end = m.span()
        if not _is_word(surface):
            pos = "symbol" if set(surface) & _SYMBOL_CHARS else "punctuation"
            tokens.append(Token(surface, surface, pos, start, end))
            continue
        lemma = lemmatize(surface, lexicon)
        entry = lexicon.get(lemma) if lexicon is not None else None
        if entry is not None and entry.pos:
            pos = next(p for p in _POS_PREFERENCE if p in entry.pos)
        else:
            pos = _heuristic_pos(surface, lemma)
        tokens.append(Token(surface, lemma, pos, start, end))
    return tokens


def count_words(text: str) -> int:
    """Number of word tokens (punctuation runs excluded)."""
    return sum(1 for m in _TOKEN_RE.finditer(text) if _is_word(m.group()))


def filter_candidates(
    tokens: list[Token],
    lexicon: TierLexicon,
    min_concreteness: float | None = None,
) -> list[CandidateConcept]:
    """Reduce tagged tokens to educationally suitable candidates.

    Drops excluded tags, keeps content-pos lemmas found in the lexicon
    (tier 1 or 2, pos allowed by the entry), merges repeated lemmas into
    one candidate with all spans, and preserves first-occurrence order.
    """
    merged: dict[str, dict] = {}
    for token in tokens:
        if token.pos in EXCLUDED_POS or token.pos not in CONTENT_POS:
            continue
        lemma = normalize_concept(token.lemma)
        entry = lexicon.get(lemma)
        if entry is None:
            continue
        if entry.pos and token.pos not in entry.pos:
            continue
        if (
            min_concreteness is not None
            and entry.concreteness is not None
            and entry.concreteness < min_concreteness
        ):
            continue
        slot = merged.setdefault(lemma, {"pos": token.pos, "spans": []})
        slot["spans"].append(token.span)
    return [
        CandidateConcept(lemma=lemma, pos=slot["pos"], spans=tuple(slot["spans"]))
        for lemma, slot in merged.items()
    ]


def _require(record: dict, field_name: str, kind: type) -> object:
    if field_name not in record:
        raise PretaggedImportError(f"missing field {field_name!r}", field_name)
    value = record[field_name]
    if not isinstance(value, kind):
        raise PretaggedImportError(
            f"field {field_name!r} must be {kind.__name__}, got {type(value).__name__}",
            field_name,
        )
    return value


def import_pretagged(record: dict) -> tuple[list[Token], list[RoleSpan]]:
    """Load externally tagged tokens and role spans verbatim.

    The record schema is documented in the repo: ``text`` plus ``tokens``
    rows of [text, lemma, pos, start, end] and optional ``roles`` rows of
    [label, start, end]. Violations raise PretaggedImportError naming the
    offending field.
    """
    text = _require(record, "text", str)
    rows = _require(record, "tokens", list)
    tokens: list[Token] = []
    for i, row in enumerate(rows):
        name = f"tokens[{i}]"
        if not isinstance(row, (list, tuple)) or len(row) != 5:
            raise PretaggedImportError(
                f"{name} must be [text, lemma, pos, start, end]", name
            )
        surface, lemma, pos, start, end = row
        if not isinstance(surface, str) or not isinstance(lemma, str) or not isinstance(pos, str):
            raise PretaggedImportError(f"{name} has non-string text/lemma/pos", name)
        if not isinstance(start, int) or not isinstance(end, int):
            raise PretaggedImportError(f"{name} has non-integer span", name)
        if not (0 <= start < end <= len(text)):
            raise PretaggedImportError(f"{name} span out of bounds", f"{name}.span")
        if text[start:end] != surface:
            raise PretaggedImportError(
                f"{name} span does not match the section text", f"{name}.span"
            )
        tokens.append(Token(surface, lemma, pos, start, end))
    roles: list[RoleSpan] = []
    for i, row in enumerate(record.get("roles", []) or []):
        name = f"roles[{i}]"
        if not isinstance(row, (list, tuple)) or len(row) != 3:
            raise PretaggedImportError(f"{name} must be [label, start, end]", name)
        label, start, end = row
        if not isinstance(label, str) or label not in ROLE_LABELS:
            raise PretaggedImportError(
                f"{name} label must be one of {sorted(ROLE_LABELS)}", f"{name}.label"
            )
        if not isinstance(start, int) or not isinstance(end, int) or not (0 <= start < end <= len(text)):
            raise PretaggedImportError(f"{name} span out of bounds", f"{name}.span")
        roles.append(RoleSpan(label, start, end))
    return tokens, roles


def attach_roles(
    candidates: list[CandidateConcept], roles: list[RoleSpan]
) -> list[CandidateConcept]:
    """Attach role labels to overlapping candidates and boost them.

    Role-bearing candidates move to the front (stable otherwise); a role
    span overlapping no candidate is discarded with a warning.
    """
    role_sets: list[set[str]] = [set() for _ in candidates]
    for role in roles:
        hit = False
        for i, cand in enumerate(candidates):
            if any(s < role.end and role.start < e for s, e in cand.spans):
                role_sets[i].add(role.label)
                hit = True
        if not hit:
            logger.warning(
                "role %r at [%d, %d) overlaps no candidate; discarded",
                role.label,
                role.start,
                role.end,
            )
    updated = [
        CandidateConcept(c.lemma, c.pos, c.spans, frozenset(rs))
        for c, rs in zip(candidates, role_sets)
    ]
    return sorted(updated, key=lambda c: 0 if c.roles else 1)


def extract_candidates(
    section_text: str,
    lexicon: TierLexicon,
    pretagged: dict | None = None,
    min_concreteness: float | None = None,
) -> list[CandidateConcept]:
    """End-to-end candidate extraction for one section."""
    if pretagged is not None:
        tokens, roles = import_pretagged(pretagged)
    else:
        tokens, roles = tokenize(section_text, lexicon), []
    candidates = filter_candidates(tokens, lexicon, min_concreteness=min_concreteness)
    if roles:
        candidates = attach_roles(candidates, roles)
    return candidates
