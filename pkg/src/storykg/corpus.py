"""Story-section corpus loading.

The canonical corpus format is line-delimited JSON records with story_id,
section_index, and text; a converter is provided for the common CSV
layout in which section rows carry a story name column.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator

from .concepts import count_words


class CorpusError(ValueError):
    """Raised for malformed corpus records, naming the story and line."""


@dataclass(frozen=True)
class StorySection:
    story_id: str
    section_index: int
    text: str
    token_count: int

    @property
    def section_id(self) -> str:
        return f"{self.story_id}:{self.section_index}"

    def to_dict(self) -> dict:
        return {
            "story_id": self.story_id,
            "section_index": self.section_index,
            "text": self.text,
            "token_count": self.token_count,
        }


def make_section(story_id: str, section_index: int, text: str) -> StorySection:
    return StorySection(
        story_id=story_id,
        section_index=section_index,
        text=text,
        token_count=count_words(text),
    )


def load_corpus(path: str | Path) -> list[StorySection]:
    """Load sections from the line-delimited corpus format.

    Stable identifiers are (story_id, section_index); token counts are
    computed on load. Duplicated indices within a story or malformed
    records raise CorpusError with the offending line number.
    """
    sections: list[StorySection] = []
    seen: set[tuple[str, int]] = set()
    with Path(path).open("r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusError(f"line {lineno}: invalid JSON: {exc}") from exc
            try:
                story_id = str(record["story_id"])
                section_index = record["section_index"]
                text = record["text"]
            except (KeyError, TypeError) as exc:
                raise CorpusError(f"line {lineno}: missing field {exc}") from exc
            if not isinstance(section_index, int) or section_index < 1:
                raise CorpusError(
                    f"line {lineno} (story {story_id}): section_index must be a "
                    f"positive integer, got {section_index!r}"
                )
            if not isinstance(text, str) or not text.strip():
                raise CorpusError(f"line {lineno} (story {story_id}): empty text")
            key = (story_id, section_index)
            if key in seen:
                raise CorpusError(
                    f"line {lineno}: duplicate section {section_index} in story {story_id}"
                )
            seen.add(key)
            sections.append(make_section(story_id, section_index, text))
    return sections


def save_corpus(sections: Iterable[StorySection], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for section in sections:
            record = {
                "story_id": section.story_id,
                "section_index": section.section_index,
                "text": section.text,
            }
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")


_STORY_COLUMNS = ("story_id", "story_name", "story", "book")
_SECTION_COLUMNS = ("section_index", "section_id", "section", "cor_section")
_TEXT_COLUMNS = ("text", "section_text", "story_section", "content")


def convert_sections_csv(path: str | Path) -> Iterator[dict]:
    """Convert a sections CSV (one row per section) to corpus records.

    Column names are detected from common layouts: a story column, a
    section number column, and a text column. Section numbers are
    renumbered from 1 per story when the source column is missing.
    """
    with Path(path).open("r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            return
        fields = {name.strip().lower(): name for name in reader.fieldnames}

        def pick(candidates: tuple[str, ...]) -> str | None:
            for cand in candidates:
                if cand in fields:
                    return fields[cand]
            return None

        story_col = pick(_STORY_COLUMNS)
        section_col = pick(_SECTION_COLUMNS)
        text_col = pick(_TEXT_COLUMNS)
        if story_col is None or text_col is None:
            raise CorpusError(
                f"cannot detect story/text columns in {reader.fieldnames}"
            )
        counters: dict[str, int] = {}
        for row in reader:
            story_id = str(row[story_col]).strip()
            text = (row[text_col] or "").strip()
            if not story_id or not text:
                continue
            if section_col is not None and str(row.get(section_col, "")).strip():
                section_index = int(float(row[section_col]))
            else:
                counters[story_id] = counters.get(story_id, 0) + 1
                section_index = counters[story_id]
            yield {
                "story_id": story_id,
                "section_index": section_index,
                "text": text,
            }
