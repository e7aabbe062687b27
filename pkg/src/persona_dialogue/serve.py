"""HTTP chat service over a trained checkpoint.

Sessions hold the live interaction state (knowledge representations, coverage,
turn summaries, style vector). Each user message encodes the turn, advances
the interaction recurrence once, aggregates the history, and decodes a reply;
the response exposes the post-turn coverage vector and the turn's
coverage-view attention weights so a UI can display knowledge usage.
"""

from __future__ import annotations

import json
import os
import threading
import uuid
from dataclasses import dataclass, field

import numpy as np
from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from . import decoder, encoder, interaction, model
from .autodiff import Var
from .interaction import KnowledgeState, TurnSummary
from .training import Checkpoint
from .vocab import tokenize


class ApiError(Exception):
    def __init__(self, status: int, code: str, message: str):
        super().__init__(message)
        self.status, self.code, self.message = status, code, message


@dataclass
class DecodeConfig:
    beam_size: int = 1
    max_len: int = 30


@dataclass
class ChatSession:
    """State of one live conversation against the loaded model."""

    session_id: str
    persona_a: list[str]
    persona_b: list[str]
    decode: DecodeConfig
    knowledge: np.ndarray          # [l_p, d] current knowledge representations
    coverage: np.ndarray           # [l_p]
    style: np.ndarray | None
    transcript: list[dict] = field(default_factory=list)
    summaries: list[tuple] = field(default_factory=list)
    last_attention: list[float] = field(default_factory=list)
    lock: threading.Lock = field(default_factory=threading.Lock)


class ChatService:
    """Session book-keeping plus the model plumbing behind the endpoints.

    Sessions live in memory; with ``transcript_dir`` set, every session also
    appends its transcript to ``<dir>/<session_id>.jsonl`` so state can be
    restored by replay after a restart (the model is deterministic, so
    replaying the user messages reproduces coverage and replies).
    """

    def __init__(self, checkpoint: Checkpoint, transcript_dir: str | None = None):
        self.checkpoint = checkpoint
        self.config = checkpoint.config.resolved()
        self.vocab = checkpoint.vocab
        self.params = checkpoint.params
        self.flags = self.config.flags()
        self.transcript_dir = transcript_dir
        if transcript_dir:
            os.makedirs(transcript_dir, exist_ok=True)
        self.sessions: dict[str, ChatSession] = {}
        self._registry_lock = threading.Lock()

    def _encode_sentences(self, texts: list[str]) -> list[list[int]]:
        ids = []
        for text in texts:
            toks = tokenize(text)[: self.config.k_max]
            if not toks:
                raise ApiError(400, "invalid_request", "sentence has no tokens")
            ids.append(self.vocab.encode(toks))
        return ids

    def create_session(self, persona_a: list[str], persona_b: list[str] | None,
                       decode: DecodeConfig) -> ChatSession:
        if not persona_a:
            raise ApiError(400, "invalid_request", "persona_a must be non-empty")
        if len(persona_a) > self.config.l_p_max:
            raise ApiError(400, "invalid_request",
                           f"persona_a exceeds the cap of {self.config.l_p_max} sentences")
        if decode.beam_size < 1 or decode.max_len < 1:
            raise ApiError(400, "invalid_request", "beam_size and max_len must be >= 1")
        persona_b = list(persona_b) if persona_b else list(persona_a)

        P = model.wrap_params(self.params)
        a_ids = self._encode_sentences(persona_a)
        h_a = encoder.encode_sentences(P, a_ids, P["emb"])
        style = None
        if not self.flags.no_style:
            b_ids = self._encode_sentences(persona_b)
            h_b = encoder.encode_sentences(P, b_ids, P["emb"])
            style = encoder.speaking_style(P, h_a, h_b).data
        session = ChatSession(
            session_id=uuid.uuid4().hex,
            persona_a=list(persona_a), persona_b=persona_b, decode=decode,
            knowledge=h_a.data, coverage=np.zeros(len(a_ids)), style=style)
        with self._registry_lock:
            self.sessions[session.session_id] = session
        return session

    def get_session(self, session_id: str) -> ChatSession:
        with self._registry_lock:
            session = self.sessions.get(session_id)
        if session is None:
            raise ApiError(404, "not_found", f"no session {session_id}")
        return session

    def delete_session(self, session_id: str) -> None:
        with self._registry_lock:
            if self.sessions.pop(session_id, None) is None:
                raise ApiError(404, "not_found", f"no session {session_id}")

    def post_message(self, session_id: str, text: str) -> dict:
        session = self.get_session(session_id)
        toks = tokenize(text)[: self.config.k_max]
        if not toks:
            raise ApiError(400, "invalid_request", "message has no tokens")
        with session.lock:
            P = model.wrap_params(self.params)
            turn = encoder.f_enc(P, self.vocab.encode(toks), P["emb"]).pooled
            state = KnowledgeState(semantic=Var(session.knowledge),
                                   coverage=Var(session.coverage))
            state, summary, weights = interaction.interaction_step(
                P, state, turn,
                no_knowledge_update=self.flags.no_knowledge_update,
                no_coverage=self.flags.no_coverage)
            session.knowledge = state.semantic.data
            session.coverage = state.coverage.data
            session.summaries.append((summary.raw.data, summary.fused.data))
            session.last_attention = weights.data.tolist()

            history = [TurnSummary(raw=Var(r), fused=Var(f))
                       for r, f in session.summaries]
            context_vec = interaction.aggregate_history(P, history)
            style = None if session.style is None else Var(session.style)
            if session.decode.beam_size == 1:
                ids = decoder.greedy_decode(P, P["emb"], context_vec, style,
                                            session.decode.max_len,
                                            no_style=self.flags.no_style)
            else:
                ids = decoder.beam_decode(P, P["emb"], context_vec, style,
                                          session.decode.beam_size,
                                          session.decode.max_len,
                                          no_style=self.flags.no_style)
            reply = self.vocab.decode_text(ids)
            session.transcript.append({"speaker": "user", "text": text})
            session.transcript.append({"speaker": "model", "text": reply})
            return {
                "reply": reply,
                "coverage": session.coverage.tolist(),
                "attention": session.last_attention,
            }

    def session_view(self, session: ChatSession) -> dict:
        with session.lock:
            return {
                "session_id": session.session_id,
                "persona_a": list(session.persona_a),
                "persona_b": list(session.persona_b),
                "transcript": [dict(t) for t in session.transcript],
                "coverage": session.coverage.tolist(),
                "attention": list(session.last_attention),
                "decode": {"beam_size": session.decode.beam_size,
                           "max_len": session.decode.max_len},
            }


class CreateSessionBody(BaseModel):
    persona_a: list[str]
    persona_b: list[str] | None = None
    beam_size: int = 1
    max_len: int = 30


class MessageBody(BaseModel):
    text: str


def create_app(checkpoint: Checkpoint | str, ui_dir: str | None = None) -> FastAPI:
    """Build the FastAPI app around one loaded checkpoint (object or path)."""
    if isinstance(checkpoint, str):
        checkpoint = Checkpoint.load(checkpoint)
    service = ChatService(checkpoint)
    app = FastAPI(title="persona-dialogue chat service")
    app.state.service = service

    @app.exception_handler(ApiError)
    async def handle_api_error(request: Request, exc: ApiError):
        return JSONResponse(status_code=exc.status,
                            content={"code": exc.code, "message": exc.message})

    @app.exception_handler(RequestValidationError)
    async def handle_validation(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400,
                            content={"code": "invalid_request", "message": str(exc)})

    @app.post("/sessions", status_code=201)
    def create_session(body: CreateSessionBody):
        session = service.create_session(
            body.persona_a, body.persona_b,
            DecodeConfig(beam_size=body.beam_size, max_len=body.max_len))
        return {"session_id": session.session_id,
                "coverage": session.coverage.tolist()}

    @app.post("/sessions/{session_id}/messages")
    def post_message(session_id: str, body: MessageBody):
        return service.post_message(session_id, body.text)

    @app.get("/sessions/{session_id}")
    def get_session(session_id: str):
        return service.session_view(service.get_session(session_id))

    @app.delete("/sessions/{session_id}", status_code=204)
    def delete_session(session_id: str):
        service.delete_session(session_id)

    if ui_dir:
        app.mount("/ui", StaticFiles(directory=ui_dir, html=True), name="ui")
    return app
