"""HTTP reference-game service: a human speaker reveals cells, a listener guesses.

Each session hides a uniformly sampled target program. The speaker posts
reveals; the service replies with the revealed cell, the listener's
current top guesses, and whether the top guess hit the target. The target
never appears in a response until the session is solved or given up,
unless the session was explicitly created in speaker role (the speaker
needs to see the pattern they are describing).

All payloads carry ``"v": 1``.
"""

from __future__ import annotations

import json
import threading
import time
import uuid
from dataclasses import dataclass, field

import numpy as np
from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from . import dsl
from .dsl import Utterance
from .listeners import LISTENER_IDS, ListenerModel, make_listener
from .neural import ListenerNet
from .space import ProgramSpace, box_space

SCHEMA_VERSION = 1


class CreateGameRequest(BaseModel):
    listener: str
    seed: int | None = None
    role: str = Field(default="listener", pattern="^(listener|speaker)$")


class RevealRequest(BaseModel):
    x: int = Field(ge=0, lt=dsl.GRID_SIZE)
    y: int = Field(ge=0, lt=dsl.GRID_SIZE)
    top_k: int = Field(default=5, ge=1, le=50)


@dataclass
class GameSession:
    id: str
    listener_id: str
    model: ListenerModel
    target: tuple[int, ...]
    target_index: int
    revealed: list[Utterance] = field(default_factory=list)
    status: str = "active"
    created_at: float = field(default_factory=time.time)
    last_access: float = field(default_factory=time.time)
    lock: threading.Lock = field(default_factory=threading.Lock)


class GameStore:
    """In-memory session registry with lazy idle expiry and an optional
    append-only journal for post-hoc inspection."""

    def __init__(self, idle_ttl: float = 3600.0, journal_path: str | None = None):
        self.idle_ttl = idle_ttl
        self.journal_path = journal_path
        self._sessions: dict[str, GameSession] = {}
        self._lock = threading.Lock()

    def add(self, session: GameSession) -> None:
        with self._lock:
            self._sessions[session.id] = session

    def get(self, session_id: str) -> GameSession:
        with self._lock:
            session = self._sessions.get(session_id)
            if session is not None and time.time() - session.last_access > self.idle_ttl:
                del self._sessions[session_id]
                session = None
        if session is None:
            raise HTTPException(status_code=404, detail={"reason": "unknown_session"})
        session.last_access = time.time()
        return session

    def journal(self, event: str, session: GameSession, **extra) -> None:
        if not self.journal_path:
            return
        record = {"event": event, "session": session.id, "t": time.time(), **extra}
        with self._lock:
            with open(self.journal_path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(record) + "\n")


def create_app(
    model_path: str | None = None,
    net: ListenerNet | None = None,
    journal_path: str | None = None,
    idle_ttl: float = 3600.0,
    budget: int = 50,
) -> FastAPI:
    """Build the service; the program space loads once at startup."""
    space: ProgramSpace = box_space()
    if net is None and model_path is not None:
        net = ListenerNet.load(model_path)
    store = GameStore(idle_ttl=idle_ttl, journal_path=journal_path)
    models: dict[str, ListenerModel] = {}

    app = FastAPI(title="gridsynth reference game", version=str(SCHEMA_VERSION))

    def model_for(listener_id: str) -> ListenerModel:
        if listener_id not in LISTENER_IDS:
            raise HTTPException(status_code=422, detail={"reason": "unknown_listener"})
        if listener_id.startswith("N") and net is None:
            raise HTTPException(status_code=409, detail={"reason": "no_model_loaded"})
        if listener_id not in models:
            models[listener_id] = make_listener(listener_id, net=net, budget=budget)
        return models[listener_id]

    def guesses_payload(session: GameSession, k: int) -> list[dict]:
        out = []
        for choices, score in session.model.guesses(session.revealed, k=k):
            idx = space.program_index(choices)
            out.append(
                {
                    "program": dsl.program_to_json(choices),
                    "grid": space.grid(idx).to_json(),
                    "score": float(score),
                }
            )
        return out

    @app.get("/healthz")
    def healthz() -> dict:
        return {"v": SCHEMA_VERSION, "status": "ok"}

    @app.post("/games", status_code=201)
    def create_game(req: CreateGameRequest) -> dict:
        model = model_for(req.listener)
        rng = np.random.default_rng(req.seed if req.seed is not None else None)
        target_index = int(rng.integers(0, space.n_programs))
        session = GameSession(
            id=uuid.uuid4().hex,
            listener_id=req.listener,
            model=model,
            target=space.choices_of(target_index),
            target_index=target_index,
        )
        store.add(session)
        store.journal("created", session, listener=req.listener, role=req.role)
        payload = {
            "v": SCHEMA_VERSION,
            "id": session.id,
            "grid_size": dsl.GRID_SIZE,
            "listener": req.listener,
        }
        if req.role == "speaker":
            payload["target"] = dsl.program_to_json(session.target)
            payload["target_grid"] = space.grid(target_index).to_json()
        return payload

    @app.get("/games/{session_id}")
    def game_summary(session_id: str) -> dict:
        session = store.get(session_id)
        return {
            "v": SCHEMA_VERSION,
            "id": session.id,
            "listener": session.listener_id,
            "status": session.status,
            "n_revealed": len(session.revealed),
            "created_at": session.created_at,
            "grid_size": dsl.GRID_SIZE,
        }

    @app.post("/games/{session_id}/reveals")
    def reveal(session_id: str, req: RevealRequest) -> dict:
        session = store.get(session_id)
        with session.lock:
            if session.status != "active":
                raise HTTPException(status_code=409, detail={"reason": "not_active"})
            if any(u.cell == (req.x, req.y) for u in session.revealed):
                raise HTTPException(status_code=422, detail={"reason": "duplicate_cell"})
            cell = space.grid(session.target_index).cell(req.x, req.y)
            if cell is None:
                raise HTTPException(status_code=422, detail={"reason": "empty_cell"})
            obj, colour = cell
            session.revealed.append(Utterance(req.x, req.y, obj, colour))
            guesses = guesses_payload(session, req.top_k)
            top = session.model.synthesize(session.revealed)
            # programs denoting the target's pattern count as a hit
            solved = top is not None and space.same_pattern(top, session.target)
            if solved:
                session.status = "solved"
            store.journal(
                "revealed", session, x=req.x, y=req.y, solved=solved,
                n_revealed=len(session.revealed),
            )
            return {
                "v": SCHEMA_VERSION,
                "cell": {"object": dsl.OBJECTS[obj], "colour": colour},
                "guesses": guesses,
                "solved": solved,
            }

    @app.post("/games/{session_id}/giveup")
    def give_up(session_id: str) -> dict:
        session = store.get(session_id)
        with session.lock:
            if session.status != "active":
                raise HTTPException(status_code=409, detail={"reason": "not_active"})
            session.status = "given_up"
            store.journal("gave_up", session)
            return {
                "v": SCHEMA_VERSION,
                "target": dsl.program_to_json(session.target),
                "grid": space.grid(session.target_index).to_json(),
            }

    @app.get("/games/{session_id}/export")
    def export_session(session_id: str) -> dict:
        session = store.get(session_id)
        if session.status == "active":
            # The target stays secret until the session is over.
            raise HTTPException(status_code=409, detail={"reason": "still_active"})
        source = "human_literal" if session.listener_id.endswith("0") else "human_pragmatic"
        return {
            "v": SCHEMA_VERSION,
            "target": dsl.program_to_json(session.target),
            "utterances": dsl.spec_to_json(session.revealed),
            "source": source,
        }

    return app


def main() -> None:  # pragma: no cover - thin launcher, exercised via the CLI
    import argparse

    import uvicorn

    parser = argparse.ArgumentParser(description="Run the reference-game service")
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8000)
    parser.add_argument("--model", default=None, help="listener-net checkpoint for N0/N1")
    parser.add_argument("--journal", default=None, help="append-only session journal path")
    args = parser.parse_args()
    uvicorn.run(create_app(model_path=args.model, journal_path=args.journal), host=args.host, port=args.port)


if __name__ == "__main__":  # pragma: no cover
    main()
