"""Whitelisted knowledge-graph relation vocabulary.

Only 13 relation kinds are served to annotators; everything else in a raw
dump is considered weak and dropped at ingestion time. Each kind maps
one-to-one to the URI token used in assertion dumps and to the display
phrase used when a triple is rendered as text.
"""

from __future__ import annotations

import re
from enum import Enum


class RelationKind(Enum):
    """One of the 13 whitelisted relation kinds.

    Member order is the canonical listing order used in prompts and
    reports ("causes, desires, has context of, ...").
    """

    CAUSES = ("Causes", "causes")
    DESIRES = ("Desires", "desires")
    HAS_CONTEXT = ("HasContext", "has context of")
    HAS_PROPERTY = ("HasProperty", "has property")
    HAS_SUBEVENT = ("HasSubevent", "has subevent")
    IS_A = ("IsA", "is a")
    AT_LOCATION = ("AtLocation", "is at location of")
    CAPABLE_OF = ("CapableOf", "is capable of")
    CREATED_BY = ("CreatedBy", "is created by")
    MADE_OF = ("MadeOf", "is made of")
    PART_OF = ("PartOf", "is part of")
    ANTONYM = ("Antonym", "is the antonym of")
    USED_FOR = ("UsedFor", "is used for")

    def __init__(self, uri_token: str, phrase: str):
        self.uri_token = uri_token
        self.phrase = phrase

    @property
    def uri(self) -> str:
        return f"/r/{self.uri_token}"

    def __lt__(self, other: "RelationKind") -> bool:
        if not isinstance(other, RelationKind):
            return NotImplemented
        return self.phrase < other.phrase


RELATION_PHRASES: tuple[str, ...] = tuple(kind.phrase for kind in RelationKind)

#: Comma-separated canonical list, e.g. for prompt bodies and help text.
RELATION_PHRASE_LIST: str = ", ".join(RELATION_PHRASES)

_BY_URI_TOKEN = {kind.uri_token.lower(): kind for kind in RelationKind}
_BY_PHRASE = {kind.phrase: kind for kind in RelationKind}
_BY_NAME = {kind.name.lower(): kind for kind in RelationKind}

_RELATION_URI_RE = re.compile(r"^/r/([^/\s]+)")
_WS_RUN = re.compile(r"\s+")


def relation_from_uri(uri: str) -> RelationKind | None:
    """Map a dump relation URI (e.g. ``/r/IsA``) to its kind.

    Returns None for anything outside the whitelist, including URIs that
    do not look like relation URIs at all.
    """
    m = _RELATION_URI_RE.match(uri.strip())
    if not m:
        return None
    return _BY_URI_TOKEN.get(m.group(1).lower())


def relation_from_phrase(phrase: str) -> RelationKind | None:
    """Map a display phrase ("is used for") to its kind, or None."""
    folded = _WS_RUN.sub(" ", phrase.strip().lower())
    return _BY_PHRASE.get(folded)


def relation_from_name(name: str) -> RelationKind | None:
    """Resolve a kind from any of its spellings.

    Accepts the enum name (``USED_FOR``), the URI token (``UsedFor``),
    a full URI (``/r/UsedFor``), or the display phrase (``is used for``).
    """
    text = name.strip()
    if not text:
        return None
    if text.startswith("/r/"):
        return relation_from_uri(text)
    key = text.lower()
    return _BY_NAME.get(key) or _BY_URI_TOKEN.get(key) or relation_from_phrase(text)
