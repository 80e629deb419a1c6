"""HTTP review service: sessions, per-sentence checks, verdicts, exports.

A session pairs one reference document with one generated summary. All
mutations flow through an append-only per-session event log (replayed on
restart, compacted into snapshots), so annotation provenance survives both
process restarts and later re-analysis.
"""

from __future__ import annotations

import hashlib
import json
import os
import re
import threading
import time
import uuid
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse, PlainTextResponse

from .auditor import (
    AuditReport, DecodingConfig, EditSpan, FactCheckResult, PLAIN, THRESHOLDED,
    fact_check_sentence,
)
from .errors import (
    BackendUnavailable, ClaimcheckError, ContextOverflow, EmptyDocument,
    MalformedOutput, PayloadTooLarge, SessionNotFound, StaleEdit,
)
from .genbackend import Backend, build_backend
from .promptio import DEFAULT_INPUT_BUDGET, DEFAULT_OUTPUT_BUDGET, PromptTemplate
from .textmodel import ClaimContext, Document, split_sentences, tokenize_words


@dataclass
class ServiceConfig:
    backend_url: str = "echo:"
    tau: float = 0.0
    template_path: str | None = None
    persist_dir: str | None = None
    input_budget: int = DEFAULT_INPUT_BUDGET
    max_new_tokens: int = DEFAULT_OUTPUT_BUDGET
    max_payload_bytes: int = 1_000_000
    snapshot_every: int = 50
    host: str = "127.0.0.1"
    port: int = 8000

    @classmethod
    def from_file(cls, path) -> "ServiceConfig":
        with open(path, encoding="utf-8") as fh:
            payload = json.load(fh)
        cfg = cls(**payload)
        return cfg.with_env_overrides()

    def with_env_overrides(self) -> "ServiceConfig":
        url = os.environ.get("CLAIMCHECK_BACKEND_URL")
        if url:
            self.backend_url = url
        return self

    def template(self) -> PromptTemplate:
        if self.template_path:
            return PromptTemplate.from_file(self.template_path)
        return PromptTemplate()


@dataclass
class SentenceState:
    text: str
    checked_claim: str | None = None
    result: dict | None = None  # latest FactCheckResult payload
    accepted_edits: set[int] = field(default_factory=set)
    edit_verdicts: dict[int, str] = field(default_factory=dict)
    evidence_verdicts: dict[int, str] = field(default_factory=dict)
    new_evidence: set[int] = field(default_factory=set)
    sufficient: bool | None = None
    invalid: bool = False

    def to_payload(self) -> dict:
        return {
            "text": self.text,
            "checked_claim": self.checked_claim,
            "result": self.result,
            "accepted_edits": sorted(self.accepted_edits),
            "edit_verdicts": {str(k): v for k, v in sorted(self.edit_verdicts.items())},
            "evidence_verdicts": {
                str(k): v for k, v in sorted(self.evidence_verdicts.items())
            },
            "new_evidence": sorted(self.new_evidence),
            "sufficient": self.sufficient,
            "invalid": self.invalid,
        }

    @classmethod
    def from_payload(cls, payload: dict) -> "SentenceState":
        return cls(
            text=payload["text"],
            checked_claim=payload.get("checked_claim"),
            result=payload.get("result"),
            accepted_edits=set(payload.get("accepted_edits", ())),
            edit_verdicts={
                int(k): v for k, v in payload.get("edit_verdicts", {}).items()
            },
            evidence_verdicts={
                int(k): v for k, v in payload.get("evidence_verdicts", {}).items()
            },
            new_evidence=set(payload.get("new_evidence", ())),
            sufficient=payload.get("sufficient"),
            invalid=payload.get("invalid", False),
        )


@dataclass
class Session:
    session_id: str
    doc: Document
    sentences: list[SentenceState]
    created_at: float
    updated_at: float
    # cache of check results keyed by content hash (text, context, tau, template)
    cache: dict[str, dict] = field(default_factory=dict)

    def to_payload(self) -> dict:
        return {
            "session_id": self.session_id,
            "doc": self.doc.to_payload(),
            "sentences": [s.to_payload() for s in self.sentences],
            "created_at": self.created_at,
            "updated_at": self.updated_at,
            "cache": self.cache,
        }

    @classmethod
    def from_payload(cls, payload: dict) -> "Session":
        return cls(
            session_id=payload["session_id"],
            doc=Document.from_payload(payload["doc"]),
            sentences=[SentenceState.from_payload(s) for s in payload["sentences"]],
            created_at=payload["created_at"],
            updated_at=payload["updated_at"],
            cache=dict(payload.get("cache", {})),
        )


def cache_key(text: str, context: Sequence[str], tau: float, instruction: str) -> str:
    blob = json.dumps(
        [text, list(context), tau, instruction],
        ensure_ascii=False, separators=(",", ":"),
    )
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def splice_edits(claim: str, edits: Sequence, accepted: set[int]) -> str:
    """Apply the accepted subset of suggested edits to the checked claim."""
    words = tokenize_words(claim)
    text = claim
    for i in sorted(accepted, reverse=True):
        span = edits[i]
        if span.start < len(words.offsets):
            a = words.offsets[span.start][0]
        else:
            a = len(claim)
        b = words.offsets[span.end - 1][1] if span.end > span.start else a
        text = text[:a] + " ".join(span.replacement) + text[b:]
    return re.sub(r"\s+", " ", text).strip()


class SessionStore:
    """Event-sourced session storage with snapshot compaction."""

    def __init__(self, persist_dir: str | None = None, snapshot_every: int = 50):
        self._dir = Path(persist_dir) if persist_dir else None
        self._snapshot_every = snapshot_every
        self._sessions: dict[str, Session] = {}
        self._pending_events: dict[str, int] = {}
        self._locks: dict[str, threading.Lock] = {}
        self._registry_lock = threading.Lock()
        if self._dir:
            self._dir.mkdir(parents=True, exist_ok=True)
            self._load_all()

    def _log_path(self, session_id: str) -> Path:
        return self._dir / f"{session_id}.jsonl"

    def _snapshot_path(self, session_id: str) -> Path:
        return self._dir / f"{session_id}.snapshot.json"

    def _load_all(self):
        ids = set()
        for p in self._dir.glob("*.jsonl"):
            ids.add(p.stem)
        for p in self._dir.glob("*.snapshot.json"):
            ids.add(p.name[:-len(".snapshot.json")])
        for session_id in sorted(ids):
            self._load_one(session_id)

    def _load_one(self, session_id: str):
        session = None
        snap = self._snapshot_path(session_id)
        if snap.exists():
            with open(snap, encoding="utf-8") as fh:
                session = Session.from_payload(json.load(fh)["session"])
        log = self._log_path(session_id)
        pending = 0
        if log.exists():
            with open(log, encoding="utf-8") as fh:
                for line in fh:
                    line = line.strip()
                    if not line:
                        continue
                    event = json.loads(line)
                    session = _apply_event(session, event)
                    pending += 1
        if session is not None:
            self._sessions[session_id] = session
            self._pending_events[session_id] = pending

    def lock(self, session_id: str) -> threading.Lock:
        with self._registry_lock:
            return self._locks.setdefault(session_id, threading.Lock())

    def get(self, session_id: str) -> Session:
        session = self._sessions.get(session_id)
        if session is None:
            raise SessionNotFound(session_id)
        return session

    def ids(self) -> list[str]:
        return sorted(self._sessions)

    def commit(self, session_id: str, event: dict) -> Session:
        """Append one event, apply it, and compact when the log grows long."""
        event = dict(event)
        event.setdefault("ts", time.time())
        session = _apply_event(self._sessions.get(session_id), event)
        self._sessions[session_id] = session
        if self._dir:
            with open(self._log_path(session_id), "a", encoding="utf-8") as fh:
                fh.write(json.dumps(event, ensure_ascii=False) + "\n")
            count = self._pending_events.get(session_id, 0) + 1
            if count >= self._snapshot_every:
                self._compact(session_id)
                count = 0
            self._pending_events[session_id] = count
        return session

    def _compact(self, session_id: str):
        snap = self._snapshot_path(session_id)
        tmp = snap.with_suffix(".tmp")
        with open(tmp, "w", encoding="utf-8") as fh:
            json.dump({"session": self._sessions[session_id].to_payload()}, fh,
                      ensure_ascii=False)
        tmp.replace(snap)
        self._log_path(session_id).write_text("", encoding="utf-8")


def _apply_event(session: Session | None, event: dict) -> Session:
    kind = event["event"]
    if kind == "created":
        doc = Document.from_payload(event["doc"])
        return Session(
            session_id=event["session_id"],
            doc=doc,
            sentences=[SentenceState(text=t) for t in event["summary"]],
            created_at=event["ts"],
            updated_at=event["ts"],
        )
    if session is None:
        raise ValueError(f"event {kind!r} for a session that does not exist yet")

    session.updated_at = event["ts"]
    if kind == "checked":
        state = session.sentences[event["index"]]
        session.cache[event["key"]] = event["result"]
        state.result = event["result"]
        state.checked_claim = event["result"]["claim"]
        state.accepted_edits = set()
    elif kind == "edited":
        state = session.sentences[event["index"]]
        state.text = event["text"]
    elif kind == "verdict":
        _apply_verdict(session, event)
    else:
        raise ValueError(f"unknown event type {kind!r}")
    return session


def _apply_verdict(session: Session, event: dict):
    state = session.sentences[event["index"]]
    kind = event["kind"]
    if kind == "edit":
        idx = event["edit_index"]
        state.edit_verdicts[idx] = event["verdict"]
        if event["verdict"] == "accepted":
            state.accepted_edits.add(idx)
            state.text = event["text"]
    elif kind == "evidence":
        state.evidence_verdicts[event["evidence_id"]] = event["verdict"]
    elif kind == "new_evidence":
        if event.get("add", True):
            state.new_evidence.add(event["evidence_id"])
        else:
            state.new_evidence.discard(event["evidence_id"])
    elif kind == "sufficiency":
        state.sufficient = bool(event["verdict"])
    elif kind == "invalid":
        state.invalid = bool(event["verdict"])
        if state.invalid:
            state.edit_verdicts.clear()
            state.evidence_verdicts.clear()
            state.new_evidence.clear()
            state.sufficient = None
            state.accepted_edits.clear()
    else:
        raise ValueError(f"unknown verdict kind {kind!r}")


def _sentence_view(state: SentenceState, index: int) -> dict:
    return {
        "index": index,
        "text": state.text,
        "checked_claim": state.checked_claim,
        "result": state.result,
        "accepted_edits": sorted(state.accepted_edits),
        "edit_verdicts": [
            {"edit": k, "verdict": v} for k, v in sorted(state.edit_verdicts.items())
        ],
        "evidence_verdicts": [
            {"id": k, "verdict": v} for k, v in sorted(state.evidence_verdicts.items())
        ],
        "new_evidence": sorted(state.new_evidence),
        "sufficient": state.sufficient,
        "invalid": state.invalid,
    }


def session_view(session: Session) -> dict:
    return {
        "session_id": session.session_id,
        "doc": session.doc.to_payload(),
        "sentences": [
            _sentence_view(s, i) for i, s in enumerate(session.sentences)
        ],
        "created_at": session.created_at,
        "updated_at": session.updated_at,
    }


def annotation_lines(session: Session) -> list[dict]:
    lines = []
    for i, state in enumerate(session.sentences):
        if state.invalid:
            lines.append({
                "session_id": session.session_id,
                "index": i,
                "claim": state.checked_claim or state.text,
                "edit_verdicts": [],
                "evidence_verdicts": [],
                "corrected_revision": None,
                "new_evidence": [],
                "sufficient": None,
                "invalid": True,
            })
            continue
        has_verdicts = (
            state.edit_verdicts or state.evidence_verdicts
            or state.new_evidence or state.sufficient is not None
        )
        if not has_verdicts:
            continue
        evidence_ids = sorted(
            (state.result or {}).get("evidence", [])
        )
        lines.append({
            "session_id": session.session_id,
            "index": i,
            "claim": state.checked_claim or state.text,
            "edit_verdicts": [
                state.edit_verdicts[k] for k in sorted(state.edit_verdicts)
            ],
            "evidence_verdicts": [
                state.evidence_verdicts[e]
                for e in evidence_ids if e in state.evidence_verdicts
            ],
            "corrected_revision": (
                state.text if state.text != (state.checked_claim or state.text)
                or state.accepted_edits else None
            ),
            "new_evidence": sorted(state.new_evidence),
            "sufficient": state.sufficient,
            "invalid": False,
        })
    return lines


class CheckRunner:
    """Runs fact-check passes for the service, going through the cache."""

    def __init__(self, config: ServiceConfig, backend: Backend):
        self.config = config
        self.backend = backend
        self.template = config.template()

    def effective_tau(self, tau_override: float | None) -> float:
        return self.config.tau if tau_override is None else tau_override

    def key_for(self, session: Session, index: int, tau: float) -> str:
        context = [s.text for s in session.sentences[:index]]
        return cache_key(
            session.sentences[index].text, context, tau, self.template.instruction
        )

    def run(self, session: Session, index: int, tau: float) -> dict:
        state = session.sentences[index]
        context = tuple(s.text for s in session.sentences[:index])
        cfg = DecodingConfig(
            tau=tau, mode=THRESHOLDED if tau > 0 else PLAIN,
        )
        result = fact_check_sentence(
            session.doc,
            ClaimContext(state.text, context),
            cfg,
            self.backend,
            template=self.template,
            input_budget=self.config.input_budget,
            max_new_tokens=self.config.max_new_tokens,
            hard_truncate=True,
        )
        return result.to_payload()


def create_app(config: ServiceConfig | None = None, backend: Backend | None = None):
    config = config or ServiceConfig()
    backend = backend or build_backend(config.backend_url)
    store = SessionStore(config.persist_dir, config.snapshot_every)
    runner = CheckRunner(config, backend)

    app = FastAPI(title="claimcheck")
    app.state.store = store
    app.state.runner = runner

    def error_body(code: str, message: str, retriable: bool | None = None) -> dict:
        body = {"error": message, "code": code}
        if retriable is not None:
            body["retriable"] = retriable
        return body

    @app.exception_handler(ClaimcheckError)
    async def claimcheck_error(request: Request, exc: ClaimcheckError):
        if isinstance(exc, SessionNotFound):
            return JSONResponse(error_body("not_found", str(exc)), status_code=404)
        if isinstance(exc, StaleEdit):
            return JSONResponse(error_body("stale_edit", str(exc)), status_code=409)
        if isinstance(exc, PayloadTooLarge):
            return JSONResponse(error_body("payload_too_large", str(exc)), status_code=413)
        if isinstance(exc, BackendUnavailable):
            return JSONResponse(
                error_body("backend_unavailable", str(exc), retriable=True),
                status_code=502,
            )
        if isinstance(exc, (ContextOverflow, MalformedOutput)):
            return JSONResponse(
                error_body("backend_error", str(exc), retriable=False),
                status_code=502,
            )
        return JSONResponse(error_body("bad_request", str(exc)), status_code=400)

    @app.exception_handler(ValueError)
    async def value_error(request: Request, exc: ValueError):
        return JSONResponse(error_body("bad_request", str(exc)), status_code=400)

    def _get_session(session_id: str) -> Session:
        return store.get(session_id)

    def _sentence_state(session: Session, index: int) -> SentenceState:
        if not 0 <= index < len(session.sentences):
            raise SessionNotFound(
                f"sentence {index} not in session {session.session_id}"
            )
        return session.sentences[index]

    @app.post("/sessions", status_code=201)
    async def create_session(request: Request):
        raw = await request.body()
        if len(raw) > config.max_payload_bytes:
            raise PayloadTooLarge(
                f"payload of {len(raw)} bytes exceeds {config.max_payload_bytes}"
            )
        try:
            payload = json.loads(raw)
        except json.JSONDecodeError as exc:
            return JSONResponse(
                error_body("bad_request", f"invalid JSON: {exc}"), status_code=400
            )
        if not isinstance(payload, dict) or "doc" not in payload:
            return JSONResponse(
                error_body("bad_request", "body must be an object with a 'doc' field"),
                status_code=400,
            )
        try:
            doc = Document.from_payload(payload["doc"])
        except (EmptyDocument, ValueError, KeyError, TypeError) as exc:
            return JSONResponse(
                error_body("bad_request", f"bad document: {exc}"), status_code=400
            )
        summary = payload.get("summary", [])
        if isinstance(summary, str):
            summary = split_sentences(summary)
        summary = [s for s in (" ".join(t.split()) for t in summary) if s]

        session_id = uuid.uuid4().hex
        with store.lock(session_id):
            session = store.commit(session_id, {
                "event": "created",
                "session_id": session_id,
                "doc": doc.to_payload(),
                "summary": summary,
            })
        return JSONResponse(session_view(session), status_code=201)

    @app.get("/sessions/{session_id}")
    def get_session(session_id: str):
        return session_view(_get_session(session_id))

    def _check_one(session: Session, index: int, tau: float) -> tuple[dict, bool]:
        key = runner.key_for(session, index, tau)
        cached = session.cache.get(key)
        if cached is not None:
            return cached, True
        result = runner.run(session, index, tau)
        store.commit(session.session_id, {
            "event": "checked",
            "index": index,
            "key": key,
            "tau": tau,
            "result": result,
        })
        return result, False

    @app.post("/sessions/{session_id}/check/{index}")
    def check_sentence(session_id: str, index: int, body: dict | None = None):
        tau = runner.effective_tau((body or {}).get("tau"))
        with store.lock(session_id):
            session = _get_session(session_id)
            _sentence_state(session, index)
            result, was_cached = _check_one(session, index, tau)
        return {"index": index, "cached": was_cached, "result": result}

    @app.post("/sessions/{session_id}/check-all")
    def check_all(session_id: str, body: dict | None = None):
        tau = runner.effective_tau((body or {}).get("tau"))
        with store.lock(session_id):
            session = _get_session(session_id)
            n = len(session.sentences)
            results: list[dict | None] = [None] * n
            cached_flags = [False] * n
            missing = []
            for i in range(n):
                key = runner.key_for(session, i, tau)
                hit = session.cache.get(key)
                if hit is not None:
                    results[i] = hit
                    cached_flags[i] = True
                else:
                    missing.append(i)

            failed = []
            if missing:
                with ThreadPoolExecutor(max_workers=min(4, len(missing))) as pool:
                    futures = {
                        i: pool.submit(runner.run, session, i, tau) for i in missing
                    }
                for i, future in futures.items():
                    try:
                        results[i] = future.result()
                    except ClaimcheckError as exc:
                        failed.append({"index": i, "error": str(exc)})
                for i in missing:
                    if results[i] is not None:
                        store.commit(session_id, {
                            "event": "checked",
                            "index": i,
                            "key": runner.key_for(session, i, tau),
                            "tau": tau,
                            "result": results[i],
                        })

            report = None
            consistent = None
            if not failed:
                checked = [FactCheckResult.from_payload(r) for r in results]
                report = AuditReport.from_results(checked).to_json()
                consistent = report["consistent"]
        return {
            "results": results,
            "cached": cached_flags,
            "failed": sorted(failed, key=lambda f: f["index"]),
            "consistent": consistent,
            "report": report,
        }

    @app.post("/sessions/{session_id}/verdict")
    def post_verdict(session_id: str, body: dict):
        index = body.get("index")
        kind = body.get("kind")
        if not isinstance(index, int):
            raise ValueError("verdict body must carry an integer 'index'")
        with store.lock(session_id):
            session = _get_session(session_id)
            state = _sentence_state(session, index)
            event = {"event": "verdict", "index": index, "kind": kind}

            if kind in ("edit", "evidence"):
                if state.result is None:
                    raise StaleEdit(f"sentence {index} has no checked result")
                expected = splice_edits(
                    state.checked_claim,
                    [EditSpan.from_payload(e) for e in state.result["edits"]],
                    state.accepted_edits,
                )
                if state.text != expected:
                    raise StaleEdit(
                        f"sentence {index} changed since its last check"
                    )

            if kind == "edit":
                edit_index = body.get("edit_index")
                verdict = body.get("verdict")
                edits = state.result["edits"]
                if not isinstance(edit_index, int) or not 0 <= edit_index < len(edits):
                    raise ValueError(f"edit_index {edit_index!r} out of range")
                if verdict not in ("accepted", "rejected"):
                    raise ValueError("verdict must be 'accepted' or 'rejected'")
                event["edit_index"] = edit_index
                event["verdict"] = verdict
                if verdict == "accepted":
                    event["text"] = splice_edits(
                        state.checked_claim,
                        [EditSpan.from_payload(e) for e in edits],
                        state.accepted_edits | {edit_index},
                    )
            elif kind == "evidence":
                evidence_id = body.get("evidence_id")
                verdict = body.get("verdict")
                if evidence_id not in state.result["evidence"]:
                    raise ValueError(
                        f"evidence id {evidence_id!r} was not suggested for sentence {index}"
                    )
                if verdict not in ("relevant", "not_relevant"):
                    raise ValueError("verdict must be 'relevant' or 'not_relevant'")
                event["evidence_id"] = evidence_id
                event["verdict"] = verdict
            elif kind == "new_evidence":
                evidence_id = body.get("evidence_id")
                if evidence_id not in session.doc.sentence_ids:
                    raise ValueError(f"no document sentence with id {evidence_id!r}")
                event["evidence_id"] = evidence_id
                event["add"] = bool(body.get("add", True))
            elif kind in ("sufficiency", "invalid"):
                event["verdict"] = bool(body.get("verdict"))
            else:
                raise ValueError(f"unknown verdict kind {kind!r}")

            session = store.commit(session_id, event)
            state = session.sentences[index]
        return {"sentence": _sentence_view(state, index)}

    @app.put("/sessions/{session_id}/sentence/{index}")
    def edit_sentence(session_id: str, index: int, body: dict):
        text = body.get("text")
        if not isinstance(text, str) or not text.strip():
            raise ValueError("body must carry a non-empty 'text'")
        with store.lock(session_id):
            session = _get_session(session_id)
            _sentence_state(session, index)
            session = store.commit(session_id, {
                "event": "edited", "index": index, "text": " ".join(text.split()),
            })
        return {"sentence": _sentence_view(session.sentences[index], index)}

    @app.get("/sessions/{session_id}/annotations")
    def get_annotations(session_id: str):
        session = _get_session(session_id)
        lines = annotation_lines(session)
        body = "".join(json.dumps(line, ensure_ascii=False) + "\n" for line in lines)
        return PlainTextResponse(body, media_type="application/x-ndjson")

    @app.get("/sessions")
    def list_sessions():
        return {"sessions": store.ids()}

    return app
