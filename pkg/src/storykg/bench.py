"""Question-generation benchmark harness.

Renders prompts for two task variants (QA pair only, or knowledge triple
plus QA pair) under zero-shot, few-shot, and chain-of-thought strategies,
drives a pluggable completion endpoint, parses the labeled-line response
format, and scores outputs with multi-reference Rouge-L against the
expert ground truths. Reports are bit-stable given a seed and a
deterministic endpoint.
"""

from __future__ import annotations

import hashlib
import json
import os
import random
import re
import time
from dataclasses import dataclass, field
from typing import Callable, Iterable, Protocol, Sequence

import requests

from .metrics import RougeScore, rouge_l_multi_ref
from .relations import RELATION_PHRASE_LIST, RelationKind, relation_from_phrase

VARIANT_QA_ONLY = "qa_only"
VARIANT_QA_WITH_TRIPLE = "qa_with_triple"
VARIANTS = (VARIANT_QA_ONLY, VARIANT_QA_WITH_TRIPLE)

STRATEGY_ZERO_SHOT = "zero_shot"
STRATEGY_FEW_SHOT = "few_shot"
STRATEGY_COT = "cot"

TRIPLE_LABEL = "real-world knowledge triple"


class PromptError(ValueError):
    """Raised for template/demonstration mismatches."""


class ResponseParseError(ValueError):
    """Raised when a model response lacks the mandatory labeled lines."""

    def __init__(self, message: str, raw: str):
        super().__init__(message)
        self.raw = raw


class EndpointError(RuntimeError):
    """Transport-level failure talking to a completion endpoint."""


_COMMON_STEPS = (
    "I need you to help generate a question and answer pair for young children "
    "aged three to six. I will provide you with a short section of a story "
    "delimited by triple quotes.\n"
    "Please follow these steps:\n"
    "1. For each sentence, identify one key word that meets the following "
    "criteria: it is relatively complex, it is considered tier 1 or tier 2 "
    "vocabulary, and it is a concrete noun, verb, or adjective.\n"
    "2. After this, completely forget about the story itself, remembering only "
    "the words you identified.\n"
)

_RELATION_CLAUSE = (
    "The real-world, fact-based knowledge should be based on the selected word "
    "and is in the form of a triple such as 'A relation B', where A and B are "
    "two concepts and the selected word can be either A or B. You should use "
    "one of the following relations for the real-world knowledge: "
    f"{RELATION_PHRASE_LIST}.\n"
)

_QA_ONLY_BODY = (
    _COMMON_STEPS
    + "3. Based on each selected word, generate a question and answer pair such "
    "that either the question or the answer contains that word. These questions "
    "should go beyond the context of the story. Each question should have one "
    "single correct answer that would be the same regardless of the children's "
    "experiences. The questions should be focused on real-world, fact-based "
    "knowledge and beneficial for educating children during story reading. "
    + _RELATION_CLAUSE
    + "4. After this, select the one question-answer pair that best meets the "
    "criteria. The question should be answerable without reading the story, and "
    "the answer should be a concrete noun, verb, or adjective.\n"
    "Return the selected question-answer pair in the following format:\n"
    "\n"
    "question: ...\n"
    "answer: ...\n"
)

_QA_WITH_TRIPLE_BODY = (
    _COMMON_STEPS
    + "3. Based on each selected word, generate one real-world relation that "
    "goes beyond the context of the story. "
    + _RELATION_CLAUSE
    + "4. After this, generate a question and answer pair based on the "
    "real-world, fact-based knowledge you generated. Either the question or the "
    "answer should contain the identified word. Each question should have one "
    "single correct answer that would be the same regardless of the children's "
    "experiences.\n"
    "5. After this, select the one question-answer pair that best meets the "
    "criteria. The question should be answerable without reading the story, and "
    "the answer should be a concrete noun, verb, or adjective.\n"
    "Return the generated real-world knowledge triple and selected "
    "question-answer pair in the following format:\n"
    "\n"
    "real-world knowledge triple: (A, relation, B)\n"
    "question: ...\n"
    "answer: ...\n"
)

_COT_SUFFIX = (
    "\nThink through the steps above one at a time before deciding, then return "
    "only the final response in the required format.\n"
)


@dataclass(frozen=True)
class PromptTemplate:
    variant: str
    strategy: str
    shots: int = 0
    body: str = ""

    @property
    def strategy_label(self) -> str:
        if self.strategy == STRATEGY_FEW_SHOT:
            return f"few_shot:{self.shots}"
        return self.strategy


def build_template(variant: str, strategy: str, shots: int = 0) -> PromptTemplate:
    """Assemble the prompt body for a variant/strategy pair.

    Chain-of-thought applies to the triple-generating variant only, and
    few_shot requires a positive shot count.
    """
    if variant not in VARIANTS:
        raise PromptError(f"unknown variant: {variant!r}")
    if strategy == STRATEGY_COT and variant != VARIANT_QA_WITH_TRIPLE:
        raise PromptError("chain-of-thought is only defined for qa_with_triple")
    if strategy == STRATEGY_FEW_SHOT and shots < 1:
        raise PromptError("few_shot requires shots >= 1")
    if strategy in (STRATEGY_ZERO_SHOT, STRATEGY_COT):
        shots = 0
    elif strategy != STRATEGY_FEW_SHOT:
        raise PromptError(f"unknown strategy: {strategy!r}")
    body = _QA_ONLY_BODY if variant == VARIANT_QA_ONLY else _QA_WITH_TRIPLE_BODY
    if strategy == STRATEGY_COT:
        body = body + _COT_SUFFIX
    return PromptTemplate(variant=variant, strategy=strategy, shots=shots, body=body)


def parse_strategy(label: str) -> tuple[str, int]:
    """Parse a CLI strategy label like ``few_shot:5``."""
    if label in (STRATEGY_ZERO_SHOT, STRATEGY_COT):
        return label, 0
    m = re.fullmatch(r"few_shot:(\d+)", label)
    if m:
        return STRATEGY_FEW_SHOT, int(m.group(1))
    raise PromptError(f"unknown strategy label: {label!r}")


@dataclass(frozen=True)
class Demonstration:
    story: str
    response: str


def format_response(
    question: str, answer: str, triple_text: str | None = None
) -> str:
    """Render a well-formed response in the output grammar."""
    lines = []
    if triple_text is not None:
        lines.append(f"{TRIPLE_LABEL}: ({triple_text})")
    lines.append(f"question: {question}")
    lines.append(f"answer: {answer}")
    return "\n".join(lines)


def render_prompt(
    template: PromptTemplate, demos: Sequence[Demonstration], story: str
) -> str:
    """Substitute demonstrations and the target story into the template.

    Purely deterministic string assembly: identical inputs give
    byte-identical prompts. The demo count must match the strategy.
    """
    if template.strategy == STRATEGY_FEW_SHOT:
        if len(demos) != template.shots:
            raise PromptError(
                f"few_shot:{template.shots} needs {template.shots} demonstrations, "
                f"got {len(demos)}"
            )
    elif demos:
        raise PromptError(f"{template.strategy} takes no demonstrations")
    parts = [template.body]
    for demo in demos:
        parts.append(f'<story>:\n"""{demo.story}"""\n\n<response>:\n{demo.response}\n')
    parts.append(f'<story>:\n"""{story}"""\n\n<response>:\n')
    return "\n".join(parts)


@dataclass(frozen=True)
class ParsedTriple:
    source_text: str
    relation_phrase: str
    target_text: str
    kind: RelationKind | None

    def as_text(self) -> str:
        return f"{self.source_text} {self.relation_phrase} {self.target_text}"


@dataclass(frozen=True)
class ParsedResponse:
    question: str
    answer: str
    triple: ParsedTriple | None = None


_LABEL_RES = {
    "triple": re.compile(
        r"^\s*(?:real[- ]world knowledge triple)\s*:\s*(.+)$", re.IGNORECASE
    ),
    "question": re.compile(r"^\s*question\s*:\s*(.+)$", re.IGNORECASE),
    "answer": re.compile(r"^\s*answer\s*:\s*(.+)$", re.IGNORECASE),
}


def parse_triple_text(raw: str) -> ParsedTriple | None:
    """Parse ``(A, relation, B)`` (parentheses optional).

    The relation is matched case-insensitively against the 13 display
    phrases; an unknown middle phrase is kept raw with kind=None so it can
    still be scored as text.
    """
    inner = raw.strip()
    if inner.startswith("(") and inner.endswith(")"):
        inner = inner[1:-1]
    parts = [p.strip() for p in inner.split(",")]
    if len(parts) < 3 or any(not p for p in parts):
        return None
    if len(parts) == 3:
        source, phrase, target = parts
        return ParsedTriple(source, phrase, target, relation_from_phrase(phrase))
    for i in range(1, len(parts) - 1):
        kind = relation_from_phrase(parts[i])
        if kind is not None:
            return ParsedTriple(
                ", ".join(parts[:i]), parts[i], ", ".join(parts[i + 1 :]), kind
            )
    return None


def parse_response(text: str, variant: str) -> ParsedResponse:
    """Extract the labeled lines from a model response.

    Surrounding chatter is tolerated; the first occurrence of each label
    wins and scanning stops at the first complete set. Missing mandatory
    lines (question/answer, plus the triple for qa_with_triple) raise
    ResponseParseError carrying the raw text.
    """
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant: {variant!r}")
    needed = ["question", "answer"]
    if variant == VARIANT_QA_WITH_TRIPLE:
        needed.append("triple")
    found: dict[str, str] = {}
    for line in text.splitlines():
        for name, pattern in _LABEL_RES.items():
            if name in found:
                continue
            m = pattern.match(line)
            if m and m.group(1).strip():
                found[name] = m.group(1).strip()
        if all(name in found for name in needed):
            break
    missing = [name for name in needed if name not in found]
    if missing:
        raise ResponseParseError(
            f"response is missing mandatory line(s): {', '.join(missing)}", raw=text
        )
    triple = None
    if "triple" in found:
        triple = parse_triple_text(found["triple"])
        if triple is None and variant == VARIANT_QA_WITH_TRIPLE:
            raise ResponseParseError(
                f"cannot parse triple line: {found['triple']!r}", raw=text
            )
    return ParsedResponse(
        question=found["question"], answer=found["answer"], triple=triple
    )


class ModelEndpoint(Protocol):
    def complete(self, prompt: str) -> str:
        """Produce a completion for the prompt."""


class StubEndpoint:
    """Deterministic endpoint wrapping a prompt -> text function."""

    def __init__(self, fn: Callable[[str], str]):
        self._fn = fn
        self.calls = 0

    def complete(self, prompt: str) -> str:
        self.calls += 1
        return self._fn(prompt)


def hash_stub(variant: str = VARIANT_QA_ONLY) -> StubEndpoint:
    """A built-in stub producing well-formed, prompt-determined output."""

    def respond(prompt: str) -> str:
        digest = hashlib.sha256(prompt.encode("utf-8")).hexdigest()
        rng = random.Random(digest)
        words = re.findall(r"[a-z]{4,}", prompt.lower()) or ["thing"]
        subject = rng.choice(words)
        obj = rng.choice(words)
        question = f"What is a {subject}?"
        answer = f"A {subject} is a kind of {obj}."
        triple = f"{subject}, is a, {obj}" if variant == VARIANT_QA_WITH_TRIPLE else None
        return format_response(question, answer, triple)

    return StubEndpoint(respond)


class HttpChatEndpoint:
    """Minimal chat-completions HTTP client with retry.

    Speaks the generic wire shape: POST ``{base_url}/chat/completions``
    with ``{model, messages, temperature, max_tokens}`` and reads
    ``choices[0].message.content``. The bearer token comes from an
    environment variable so secrets stay out of configs.
    """

    def __init__(
        self,
        base_url: str,
        model: str,
        api_key_env: str = "MODEL_API_KEY",
        temperature: float = 0.0,
        max_tokens: int = 512,
        timeout: float = 60.0,
        retries: int = 2,
        session: requests.Session | None = None,
    ):
        self.base_url = base_url.rstrip("/")
        self.model = model
        self.api_key = os.environ.get(api_key_env, "")
        self.temperature = temperature
        self.max_tokens = max_tokens
        self.timeout = timeout
        self.retries = retries
        self.session = session or requests.Session()

    def complete(self, prompt: str) -> str:
        payload = {
            "model": self.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": self.temperature,
            "max_tokens": self.max_tokens,
        }
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        last_error: Exception | None = None
        for attempt in range(self.retries + 1):
            try:
                resp = self.session.post(
                    f"{self.base_url}/chat/completions",
                    json=payload,
                    headers=headers,
                    timeout=self.timeout,
                )
                if resp.status_code >= 500:
                    raise EndpointError(f"server error {resp.status_code}")
                if resp.status_code != 200:
                    raise EndpointError(
                        f"endpoint returned {resp.status_code}: {resp.text[:200]}"
                    )
                body = resp.json()
                return body["choices"][0]["message"]["content"]
            except (requests.RequestException, EndpointError, KeyError, ValueError) as exc:
                last_error = exc
                if attempt < self.retries:
                    time.sleep(min(2**attempt, 8))
        raise EndpointError(f"completion failed after retries: {last_error}")


@dataclass(frozen=True)
class ReferenceQA:
    question: str
    answer: str
    triple_text: str | None = None

    @property
    def qa_text(self) -> str:
        return f"{self.question} {self.answer}"


@dataclass(frozen=True)
class BenchItem:
    story_id: str
    section_index: int
    section_text: str
    references: tuple[ReferenceQA, ...]


def items_from_export(records: Iterable[dict]) -> list[BenchItem]:
    """Group export records into one benchmark item per section."""
    grouped: dict[tuple[str, int], dict] = {}
    for record in records:
        key = (record["story_id"], record["section_index"])
        slot = grouped.setdefault(
            key, {"section_text": record["section_text"], "references": []}
        )
        triple = record.get("triple") or {}
        triple_text = None
        if triple:
            triple_text = (
                f"{triple['source'].replace('_', ' ')} {triple['relation_phrase']} "
                f"{triple['target'].replace('_', ' ')}"
            )
        slot["references"].append(
            ReferenceQA(record["question"], record["answer"], triple_text)
        )
    return [
        BenchItem(
            story_id=key[0],
            section_index=key[1],
            section_text=slot["section_text"],
            references=tuple(slot["references"]),
        )
        for key, slot in sorted(grouped.items())
    ]


def demos_from_export(records: Iterable[dict], variant: str) -> list[Demonstration]:
    """Turn export records into well-formed demonstrations."""
    demos = []
    for record in records:
        triple = record.get("triple") or {}
        triple_text = None
        if variant == VARIANT_QA_WITH_TRIPLE and triple:
            triple_text = (
                f"{triple['source'].replace('_', ' ')}, "
                f"{triple['relation_phrase']}, "
                f"{triple['target'].replace('_', ' ')}"
            )
        demos.append(
            Demonstration(
                story=record["section_text"],
                response=format_response(
                    record["question"], record["answer"], triple_text
                ),
            )
        )
    return demos


STATUS_OK = "ok"
STATUS_PARSE_FAILURE = "parse_failure"
STATUS_TRANSPORT_ERROR = "transport_error"


@dataclass
class BenchReport:
    variant: str
    strategy: str
    shots: int
    seed: int
    items: list[dict] = field(default_factory=list)
    aggregate: dict = field(default_factory=dict)

    def to_json_lines(self) -> str:
        """Per-item lines followed by one aggregate line; byte-stable."""
        lines = [
            json.dumps({"item": item}, sort_keys=True, ensure_ascii=False)
            for item in self.items
        ]
        lines.append(
            json.dumps({"aggregate": self.aggregate}, sort_keys=True, ensure_ascii=False)
        )
        return "\n".join(lines) + "\n"


def run_bench(
    items: Sequence[BenchItem],
    template: PromptTemplate,
    endpoint: ModelEndpoint,
    seed: int,
    demo_pool: Sequence[Demonstration] = (),
    max_failure_fraction: float = 0.5,
) -> BenchReport:
    """Run the benchmark over one section per item.

    Demonstrations are drawn from ``demo_pool`` under the seed. Endpoint
    failures are recorded per item without stopping the run, but once
    failed items (transport or parse) exceed ``max_failure_fraction`` of
    the planned total the run aborts with a partial report. Aggregates are
    computed over parse-successful items only, with the failure rate
    reported separately.
    """
    if not items:
        raise ValueError("no benchmark items")
    rng = random.Random(seed)
    demos: list[Demonstration] = []
    if template.strategy == STRATEGY_FEW_SHOT:
        if len(demo_pool) < template.shots:
            raise PromptError(
                f"demo pool has {len(demo_pool)} items, need {template.shots}"
            )
        demos = rng.sample(list(demo_pool), template.shots)

    report = BenchReport(
        variant=template.variant,
        strategy=template.strategy_label,
        shots=template.shots,
        seed=seed,
    )
    failures = 0
    aborted = False
    qa_scores: list[RougeScore] = []
    triple_f1s: list[float] = []
    parse_failures = 0
    transport_errors = 0

    for item in items:
        entry: dict = {
            "story_id": item.story_id,
            "section_index": item.section_index,
        }
        prompt = render_prompt(template, demos, item.section_text)
        try:
            raw = endpoint.complete(prompt)
        except Exception as exc:  # endpoint adapters raise their own types
            transport_errors += 1
            failures += 1
            entry.update({"status": STATUS_TRANSPORT_ERROR, "error": str(exc)})
            report.items.append(entry)
        else:
            try:
                parsed = parse_response(raw, template.variant)
            except ResponseParseError as exc:
                parse_failures += 1
                failures += 1
                entry.update(
                    {"status": STATUS_PARSE_FAILURE, "error": str(exc), "raw": raw}
                )
                report.items.append(entry)
            else:
                qa_refs = [ref.qa_text for ref in item.references]
                score = rouge_l_multi_ref(
                    f"{parsed.question} {parsed.answer}", qa_refs
                )
                entry.update(
                    {
                        "status": STATUS_OK,
                        "question": parsed.question,
                        "answer": parsed.answer,
                        "qa_f1": score.f1,
                    }
                )
                qa_scores.append(score)
                if parsed.triple is not None:
                    triple_refs = [
                        ref.triple_text
                        for ref in item.references
                        if ref.triple_text is not None
                    ]
                    if triple_refs:
                        triple_score = rouge_l_multi_ref(
                            parsed.triple.as_text(), triple_refs
                        )
                        entry["triple_text"] = parsed.triple.as_text()
                        entry["triple_f1"] = triple_score.f1
                        triple_f1s.append(triple_score.f1)
                report.items.append(entry)
        if failures > max_failure_fraction * len(items):
            aborted = True
            break

    n_parsed = len(qa_scores)
    report.aggregate = {
        "variant": template.variant,
        "strategy": template.strategy_label,
        "seed": seed,
        "n_items": len(items),
        "n_attempted": len(report.items),
        "n_parsed": n_parsed,
        "parse_failure_rate": parse_failures / len(items),
        "transport_error_rate": transport_errors / len(items),
        "mean_qa_f1": (sum(s.f1 for s in qa_scores) / n_parsed) if n_parsed else None,
        "mean_triple_f1": (sum(triple_f1s) / len(triple_f1s)) if triple_f1s else None,
        "aborted": aborted,
    }
    return report


def run_bench_repeated(
    items: Sequence[BenchItem],
    template: PromptTemplate,
    endpoint: ModelEndpoint,
    seed: int,
    demo_pool: Sequence[Demonstration] = (),
    repeats: int = 1,
) -> list[BenchReport]:
    """Repeat the run with per-repeat demo resampling (seed, seed+1, ...)."""
    if repeats < 1:
        raise ValueError("repeats must be >= 1")
    return [
        run_bench(items, template, endpoint, seed + r, demo_pool=demo_pool)
        for r in range(repeats)
    ]
