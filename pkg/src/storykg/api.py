"""HTTP service exposing annotation, lookup, and validation workflows.

Handlers are stateless over a shared immutable knowledge index and corpus
plus serialized-write stores, so concurrent clients are safe. Every
response carries the payload schema version header, and mutating routes
honor a client-supplied Idempotency-Key so retries are exactly-once.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass, field
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles

from .concepts import TierLexicon, extract_candidates
from .corpus import StorySection
from .gloss import GlossProvider
from .kgstore import KnowledgeIndex, Triple, normalize_concept
from .ranker import RankedTriple, RankingConfig, rank
from .records import RecordStore, export_record, summary_statistics
from .relations import relation_from_name
from .session import (
    Abandon,
    AnnotationSession,
    ChooseConcept,
    ChooseTriple,
    QAValidationError,
    StateError,
    StepBack,
    SubmitQA,
    TripleNotRecommendedError,
    advance,
)
from .validation import (
    ResultValidationError,
    ValidationResult,
    ValidationStore,
    ValidationTask,
    check_result,
)

SCHEMA_VERSION = "1"
SCHEMA_HEADER = "X-Schema-Version"

CODE_BAD_REQUEST = "bad_request"
CODE_NOT_FOUND = "not_found"
CODE_CONFLICT = "conflict"
CODE_STATE_ERROR = "state_error"
CODE_INTERNAL = "internal"

_HTTP_STATUS = {
    CODE_BAD_REQUEST: 400,
    CODE_NOT_FOUND: 404,
    CODE_CONFLICT: 409,
    CODE_STATE_ERROR: 409,
    CODE_INTERNAL: 500,
}


class ApiError(Exception):
    def __init__(self, code: str, message: str, detail: dict | None = None):
        super().__init__(message)
        self.code = code
        self.message = message
        self.detail = detail or {}

    def to_response(self) -> JSONResponse:
        return JSONResponse(
            status_code=_HTTP_STATUS[self.code],
            content={
                "error": {
                    "code": self.code,
                    "message": self.message,
                    "detail": self.detail,
                }
            },
        )


@dataclass
class ServiceContext:
    """Everything a running service needs, wired up front."""

    index: KnowledgeIndex
    sections: list[StorySection]
    lexicon: TierLexicon
    store: RecordStore
    gloss_provider: GlossProvider | None = None
    gloss_mode: str = "offline"
    validation_store: ValidationStore | None = None
    tasks: list[ValidationTask] = field(default_factory=list)
    split_map: dict[str, str] = field(default_factory=dict)
    ranking: RankingConfig = field(default_factory=RankingConfig)

    def __post_init__(self):
        self.sections_by_id = {s.section_id: s for s in self.sections}
        self._candidate_cache: dict[str, list] = {}
        self.sessions: dict[str, AnnotationSession] = {}
        self._session_serial = 0
        self._idempotency: dict[tuple[str, str], dict] = {}
        self._lock = threading.RLock()

    def candidates_for(self, section: StorySection) -> list:
        cached = self._candidate_cache.get(section.section_id)
        if cached is None:
            cached = extract_candidates(section.text, self.lexicon)
            self._candidate_cache[section.section_id] = cached
        return cached

    def recommend(self, concept: str) -> list[RankedTriple]:
        return rank(self.index.lookup(concept), self.ranking)

    def new_session_id(self) -> str:
        self._session_serial += 1
        return f"s{self._session_serial:06d}"


def _session_payload(session: AnnotationSession) -> dict:
    return session.to_dict()


def _task_payload(task: ValidationTask) -> dict:
    return task.to_dict()


def _triple_from_payload(payload: dict, recommended) -> Triple:
    try:
        kind = relation_from_name(str(payload["relation"]))
        source = str(payload["source"])
        target = str(payload["target"])
    except (KeyError, TypeError) as exc:
        raise ApiError(CODE_BAD_REQUEST, f"bad triple payload: {exc}") from exc
    if kind is None:
        raise ApiError(CODE_BAD_REQUEST, f"unknown relation: {payload.get('relation')!r}")
    for ranked in recommended or ():
        t = ranked.triple if isinstance(ranked, RankedTriple) else ranked
        if t.key() == (source, kind.uri_token, target):
            return t
    return Triple(source, kind, target)


def create_app(ctx: ServiceContext, static_dir: str | Path | None = None) -> FastAPI:
    app = FastAPI(title="storykg annotation service", docs_url=None, redoc_url=None)
    # the browser UI may be served from another origin; auth is out of scope
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
        expose_headers=[SCHEMA_HEADER],
    )

    @app.middleware("http")
    async def add_schema_header(request: Request, call_next):
        response = await call_next(request)
        response.headers[SCHEMA_HEADER] = SCHEMA_VERSION
        return response

    @app.exception_handler(ApiError)
    async def handle_api_error(request: Request, exc: ApiError):
        response = exc.to_response()
        response.headers[SCHEMA_HEADER] = SCHEMA_VERSION
        return response

    def idempotent(request: Request, mutate):
        """Run a mutating handler at most once per Idempotency-Key."""
        key = request.headers.get("Idempotency-Key")
        if key is None:
            return mutate()
        cache_key = (request.url.path, key)
        with ctx._lock:
            if cache_key in ctx._idempotency:
                return ctx._idempotency[cache_key]
            result = mutate()
            ctx._idempotency[cache_key] = result
            return result

    async def read_json(request: Request) -> dict:
        try:
            body = await request.json()
        except json.JSONDecodeError as exc:
            raise ApiError(CODE_BAD_REQUEST, f"invalid JSON body: {exc}") from exc
        if not isinstance(body, dict):
            raise ApiError(CODE_BAD_REQUEST, "request body must be a JSON object")
        return body

    def get_session(session_id: str) -> AnnotationSession:
        session = ctx.sessions.get(session_id)
        if session is None:
            raise ApiError(CODE_NOT_FOUND, f"no session {session_id!r}")
        return session

    def apply_event(session: AnnotationSession, event) -> AnnotationSession:
        try:
            return advance(session, event, recommend=ctx.recommend)
        except StateError as exc:
            raise ApiError(
                CODE_STATE_ERROR,
                str(exc),
                {"state": session.state.value, "event": type(event).__name__},
            ) from exc
        except TripleNotRecommendedError as exc:
            raise ApiError(CODE_BAD_REQUEST, str(exc)) from exc
        except QAValidationError as exc:
            raise ApiError(
                CODE_BAD_REQUEST, "QA validation failed", {"violations": exc.violations}
            ) from exc

    @app.get("/healthz")
    def healthz():
        return {"status": "ok", "sections": len(ctx.sections), "triples": len(ctx.index)}

    @app.get("/sections")
    def list_sections():
        return {
            "sections": [
                {
                    "section_id": s.section_id,
                    "story_id": s.story_id,
                    "section_index": s.section_index,
                    "token_count": s.token_count,
                }
                for s in ctx.sections
            ]
        }

    @app.get("/sections/{section_id}")
    def get_section(section_id: str):
        section = ctx.sections_by_id.get(section_id)
        if section is None:
            raise ApiError(CODE_NOT_FOUND, f"no section {section_id!r}")
        return {
            **section.to_dict(),
            "section_id": section.section_id,
            "candidates": [c.to_dict() for c in ctx.candidates_for(section)],
        }

    @app.get("/concepts/{word}/triples")
    def concept_triples(word: str, top_k: int | None = None):
        concept = normalize_concept(word)
        config = ctx.ranking if top_k is None else RankingConfig(top_k=top_k)
        ranked = rank(ctx.index.lookup(concept), config)
        return {"concept": concept, "triples": [r.to_dict() for r in ranked]}

    @app.get("/concepts/{word}/gloss")
    def concept_gloss(word: str):
        concept = normalize_concept(word)
        if ctx.gloss_provider is None:
            return {"concept": concept, "definitions": [], "source": "cache"}
        gloss = ctx.gloss_provider.fetch(concept, mode=ctx.gloss_mode)
        return gloss.to_dict()

    @app.post("/sessions")
    async def create_session(request: Request):
        body = await read_json(request)

        def mutate():
            section_id = body.get("section_id")
            annotator_id = body.get("annotator_id")
            if not section_id or not annotator_id:
                raise ApiError(
                    CODE_BAD_REQUEST, "section_id and annotator_id are required"
                )
            section = ctx.sections_by_id.get(section_id)
            if section is None:
                raise ApiError(CODE_NOT_FOUND, f"no section {section_id!r}")
            with ctx._lock:
                session_id = ctx.new_session_id()
            session = AnnotationSession(
                session_id=session_id,
                annotator_id=annotator_id,
                story_id=section.story_id,
                section_index=section.section_index,
                section_text=section.text,
            )
            ctx.sessions[session_id] = session
            return _session_payload(session)

        return idempotent(request, mutate)

    @app.get("/sessions/{session_id}")
    def show_session(session_id: str):
        return _session_payload(get_session(session_id))

    @app.post("/sessions/{session_id}/concept")
    async def choose_concept(session_id: str, request: Request):
        body = await read_json(request)

        def mutate():
            session = get_session(session_id)
            concept = body.get("concept")
            if not concept:
                raise ApiError(CODE_BAD_REQUEST, "concept is required")
            apply_event(session, ChooseConcept(concept))
            return _session_payload(session)

        return idempotent(request, mutate)

    @app.post("/sessions/{session_id}/triple")
    async def choose_triple(session_id: str, request: Request):
        body = await read_json(request)

        def mutate():
            session = get_session(session_id)
            triple = _triple_from_payload(body, session.recommended)
            apply_event(session, ChooseTriple(triple))
            return _session_payload(session)

        return idempotent(request, mutate)

    @app.post("/sessions/{session_id}/qa")
    async def submit_qa(session_id: str, request: Request):
        body = await read_json(request)

        def mutate():
            session = get_session(session_id)
            question = body.get("question", "")
            answer = body.get("answer", "")
            apply_event(session, SubmitQA(question, answer))
            record = ctx.store.save(session)
            payload = _session_payload(session)
            payload["record"] = record.to_dict()
            return payload

        return idempotent(request, mutate)

    @app.post("/sessions/{session_id}/back")
    async def step_back(session_id: str, request: Request):
        def mutate():
            session = get_session(session_id)
            apply_event(session, StepBack())
            return _session_payload(session)

        return idempotent(request, mutate)

    @app.post("/sessions/{session_id}/abandon")
    async def abandon(session_id: str, request: Request):
        def mutate():
            session = get_session(session_id)
            apply_event(session, Abandon())
            return _session_payload(session)

        return idempotent(request, mutate)

    @app.get("/validation/tasks")
    def validation_tasks(validator: str | None = None):
        done = set()
        if ctx.validation_store is not None:
            done = {task.task_id for task, _ in ctx.validation_store}
        tasks = [
            _task_payload(t)
            for t in ctx.tasks
            if t.task_id not in done
            and (validator is None or t.validator_id == validator)
        ]
        return {"tasks": tasks}

    @app.post("/validation/tasks/{task_id}/result")
    async def submit_result(task_id: str, request: Request):
        body = await read_json(request)

        def mutate():
            if ctx.validation_store is None:
                raise ApiError(CODE_INTERNAL, "no validation store configured")
            task = next((t for t in ctx.tasks if t.task_id == task_id), None)
            if task is None:
                raise ApiError(CODE_NOT_FOUND, f"no validation task {task_id!r}")
            try:
                top3 = tuple(
                    _triple_from_payload(p, task.recommended)
                    for p in body.get("top3", [])
                )
                result = ValidationResult(
                    task_id=task_id,
                    top3=top3,
                    validator_question=body.get("question", ""),
                    validator_answer_to_own=body.get("answer", ""),
                    validator_answer_to_original=body.get("answer_to_original", ""),
                )
                check_result(task, result)
                stored = ctx.validation_store.record_result(task, result)
            except ResultValidationError as exc:
                raise ApiError(CODE_BAD_REQUEST, str(exc)) from exc
            return {"result": stored.to_dict()}

        return idempotent(request, mutate)

    @app.get("/export")
    def export():
        records = []
        for record in ctx.store:
            split = record.split or ctx.split_map.get(record.story_id) or "train"
            records.append(export_record(record, split))
        return {"records": records}

    @app.get("/stats")
    def stats():
        records = []
        for record in ctx.store:
            split = record.split or ctx.split_map.get(record.story_id) or "train"
            records.append(export_record(record, split))
        return {"statistics": summary_statistics(records)}

    if static_dir is not None:
        app.mount("/", StaticFiles(directory=str(static_dir), html=True), name="ui")

    return app
