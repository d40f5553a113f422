"""Dictionary glosses for selected concepts, with an offline mode.

Live lookups hit the Wiktionary REST definition endpoint; results are
cached on disk so annotation sessions stay fast and reproducible. Offline
mode answers exclusively from the cache and a fixture directory and is
guaranteed to perform no network I/O (the transport is injectable and can
be stubbed out in tests).
"""

from __future__ import annotations

import html
import json
import os
import re
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Protocol
from urllib.parse import quote

import requests

DEFAULT_BASE_URL = "https://en.wiktionary.org/api/rest_v1/page/definition"
BASE_URL_ENV_VAR = "WIKTIONARY_API_URL"
DEFAULT_TTL_SECONDS = 7 * 24 * 3600
MAX_SENSES = 3

SOURCE_LIVE = "live"
SOURCE_CACHE = "cache"
SOURCE_FIXTURE = "fixture"

_TAG_RE = re.compile(r"<[^>]+>")


class GlossTransportError(RuntimeError):
    """Network-level failure while fetching a live gloss."""


@dataclass(frozen=True)
class Gloss:
    concept: str
    definitions: tuple[str, ...]
    source: str
    fetched_at: float

    def to_dict(self) -> dict:
        return {
            "concept": self.concept,
            "definitions": list(self.definitions),
            "source": self.source,
            "fetched_at": self.fetched_at,
        }


class Transport(Protocol):
    def get_json(self, url: str) -> dict | None:
        """GET a JSON document; None for a 404, GlossTransportError otherwise."""


class RequestsTransport:
    def __init__(self, timeout: float = 10.0):
        self.timeout = timeout

    def get_json(self, url: str) -> dict | None:
        try:
            resp = requests.get(url, timeout=self.timeout)
        except requests.RequestException as exc:
            raise GlossTransportError(f"gloss request failed: {exc}") from exc
        if resp.status_code == 404:
            return None
        if resp.status_code != 200:
            raise GlossTransportError(f"gloss endpoint returned {resp.status_code}")
        try:
            return resp.json()
        except ValueError as exc:
            raise GlossTransportError(f"gloss endpoint returned non-JSON: {exc}") from exc


def strip_markup(text: str) -> str:
    """Drop HTML tags and entities, keeping plain definition text."""
    return html.unescape(_TAG_RE.sub("", text)).strip()


def definitions_from_response(payload: dict, max_senses: int = MAX_SENSES) -> list[str]:
    """Flatten a REST definition payload to English sense texts in order.

    Example sentences are dropped; at most ``max_senses`` non-empty senses
    are kept for annotator display.
    """
    senses: list[str] = []
    for block in payload.get("en", []):
        for definition in block.get("definitions", []):
            text = strip_markup(definition.get("definition", ""))
            if text:
                senses.append(text)
            if len(senses) >= max_senses:
                return senses
    return senses


class GlossProvider:
    """Cached gloss lookups keyed by canonical concept.

    Concurrent reads are fine; cache writes are serialized and fetches for
    the same key are coalesced behind a per-key lock so at most one live
    request per concept is in flight.
    """

    def __init__(
        self,
        cache_path: str | Path | None = None,
        fixtures_dir: str | Path | None = None,
        transport: Transport | None = None,
        base_url: str | None = None,
        ttl: float = DEFAULT_TTL_SECONDS,
        max_senses: int = MAX_SENSES,
        clock: Callable[[], float] = time.time,
    ):
        self.cache_path = Path(cache_path) if cache_path else None
        self.fixtures_dir = Path(fixtures_dir) if fixtures_dir else None
        self.transport = transport or RequestsTransport()
        self.base_url = (
            base_url or os.environ.get(BASE_URL_ENV_VAR) or DEFAULT_BASE_URL
        ).rstrip("/")
        self.ttl = ttl
        self.max_senses = max_senses
        self.clock = clock
        self._cache: dict[str, dict] = {}
        self._cache_lock = threading.Lock()
        self._key_locks: dict[str, threading.Lock] = {}
        self._key_locks_guard = threading.Lock()
        if self.cache_path and self.cache_path.exists():
            with self.cache_path.open("r", encoding="utf-8") as fh:
                self._cache = json.load(fh)

    def _key_lock(self, concept: str) -> threading.Lock:
        with self._key_locks_guard:
            return self._key_locks.setdefault(concept, threading.Lock())

    def _store(self, concept: str, definitions: list[str], fetched_at: float) -> None:
        with self._cache_lock:
            self._cache[concept] = {
                "definitions": definitions,
                "fetched_at": fetched_at,
            }
            if self.cache_path:
                self.cache_path.parent.mkdir(parents=True, exist_ok=True)
                tmp = self.cache_path.with_suffix(".tmp")
                with tmp.open("w", encoding="utf-8") as fh:
                    json.dump(self._cache, fh, sort_keys=True)
                tmp.replace(self.cache_path)

    def _from_cache(self, concept: str, max_age: float | None) -> Gloss | None:
        entry = self._cache.get(concept)
        if entry is None:
            return None
        if max_age is not None and self.clock() - entry["fetched_at"] > max_age:
            return None
        return Gloss(
            concept=concept,
            definitions=tuple(entry["definitions"]),
            source=SOURCE_CACHE,
            fetched_at=entry["fetched_at"],
        )

    def _from_fixture(self, concept: str) -> Gloss | None:
        if self.fixtures_dir is None:
            return None
        path = self.fixtures_dir / f"{concept}.json"
        if not path.exists():
            return None
        with path.open("r", encoding="utf-8") as fh:
            payload = json.load(fh)
        if isinstance(payload, dict) and isinstance(payload.get("definitions"), list):
            definitions = [str(d) for d in payload["definitions"]][: self.max_senses]
        else:
            definitions = definitions_from_response(payload, self.max_senses)
        return Gloss(
            concept=concept,
            definitions=tuple(definitions),
            source=SOURCE_FIXTURE,
            fetched_at=self.clock(),
        )

    def fetch(self, concept: str, mode: str = "live") -> Gloss:
        """Return the gloss for a canonical concept.

        ``offline`` answers only from cache then fixtures (a miss is an
        empty gloss, never an error); ``live`` serves a fresh cache entry
        if present, otherwise queries the endpoint and caches the result.
        A concept absent upstream yields an empty gloss.
        """
        if mode not in ("live", "offline"):
            raise ValueError(f"unknown gloss mode: {mode!r}")
        if mode == "offline":
            cached = self._from_cache(concept, max_age=None)
            if cached is not None:
                return cached
            fixture = self._from_fixture(concept)
            if fixture is not None:
                return fixture
            return Gloss(concept, (), SOURCE_CACHE, self.clock())

        with self._key_lock(concept):
            cached = self._from_cache(concept, max_age=self.ttl)
            if cached is not None:
                return cached
            url = f"{self.base_url}/{quote(concept)}"
            payload = self.transport.get_json(url)
            definitions = (
                [] if payload is None else definitions_from_response(payload, self.max_senses)
            )
            now = self.clock()
            self._store(concept, definitions, now)
            return Gloss(concept, tuple(definitions), SOURCE_LIVE, now)
