"""HTTP service exposing the interactive loop.

Generation and inpainting return job tickets immediately and complete on a
bounded worker pool; clients poll GET /jobs/{id}. Real diffusion backends
take tens of seconds per image, so the wire contract is asynchronous even
though the toy model finishes in milliseconds. One job per session may be
active at a time.

Error statuses: 400 malformed request, 404 unknown resource, 409 conflict
with an active job, 422 domain error with the engine error name echoed as
{"error": <name>}.
"""

from __future__ import annotations

import socket
import threading
import uuid
from concurrent.futures import ThreadPoolExecutor
from contextlib import asynccontextmanager
from datetime import datetime, timezone

import uvicorn
from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse, Response
from pydantic import BaseModel, Field

from .attention import AttentionAdjustment, validate
from .catalog import dissimilar, search, similar
from .engine import CharmEngine, EngineConfig
from .errors import BadConfig, CharmError, MissingArtifact, PortInUse, UnknownVersion
from .session import Version, diff
from .text import tokenize

NOT_FOUND = (UnknownVersion, MissingArtifact)


class AdjustmentBody(BaseModel):
    # wire form {"entries": {"<token index>": gamma}}; pydantic coerces the
    # string keys and rejects non-numeric ones as a schema violation
    entries: dict[int, float] = Field(default_factory=dict)


class GenerateBody(BaseModel):
    prompt: str
    seed: int = 0
    adjustment: AdjustmentBody | None = None
    trace: bool = True


class StrokeBody(BaseModel):
    x: float
    y: float
    r: float


class InpaintBody(BaseModel):
    version_id: int
    strokes: list[StrokeBody] = Field(default_factory=list)
    prompt: str | None = None
    seed: int = 0


class RefineBody(BaseModel):
    prompt: str


class JobRecord:
    def __init__(self, job_id: str, session_id: str):
        self.job_id = job_id
        self.session_id = session_id
        self.state = "queued"
        self.result_ref: str | None = None
        self.error: str | None = None
        self.history: list[dict] = []
        self._mark("queued")

    def _mark(self, state: str):
        self.state = state
        self.history.append(
            {"state": state, "at": datetime.now(timezone.utc).isoformat()}
        )

    def to_json(self) -> dict:
        return {
            "job_id": self.job_id,
            "state": self.state,
            "result_ref": self.result_ref,
            "error": self.error,
            "history": self.history,
        }


class JobManager:
    """Bounded worker pool with queue depth 1 per session."""

    def __init__(self, workers: int):
        self.executor = ThreadPoolExecutor(max_workers=max(1, workers))
        self.jobs: dict[str, JobRecord] = {}
        self.active: dict[str, str] = {}  # session_id -> job_id
        self.lock = threading.Lock()

    def submit(self, session_id: str, fn) -> JobRecord:
        with self.lock:
            active_id = self.active.get(session_id)
            if active_id and self.jobs[active_id].state in ("queued", "running"):
                raise _Conflict(f"session {session_id} already has job {active_id}")
            job = JobRecord(uuid.uuid4().hex, session_id)
            self.jobs[job.job_id] = job
            self.active[session_id] = job.job_id

        def run():
            with self.lock:
                job._mark("running")
            try:
                ref = fn()
            except Exception as exc:  # job failures surface via the ticket
                with self.lock:
                    job.error = f"{type(exc).__name__}: {exc}"
                    job._mark("failed")
            else:
                with self.lock:
                    job.result_ref = ref
                    job._mark("done")

        self.executor.submit(run)
        return job

    def get(self, job_id: str) -> JobRecord:
        if job_id not in self.jobs:
            raise UnknownVersion(f"no job {job_id}")
        return self.jobs[job_id]

    def shutdown(self):
        self.executor.shutdown(wait=True)


class _Conflict(Exception):
    pass


def create_app(engine: CharmEngine) -> FastAPI:
    manager = JobManager(engine.config.workers)

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        yield
        # Graceful shutdown: drain workers, then flush sessions to disk.
        manager.shutdown()
        engine.store.flush()

    app = FastAPI(title="charm", docs_url=None, redoc_url=None, lifespan=lifespan)
    app.state.engine = engine
    app.state.jobs = manager

    @app.exception_handler(RequestValidationError)
    async def malformed(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400, content={"error": "SchemaViolation"})

    @app.exception_handler(_Conflict)
    async def conflict(request: Request, exc: _Conflict):
        return JSONResponse(
            status_code=409, content={"error": "JobConflict", "detail": str(exc)}
        )

    @app.exception_handler(CharmError)
    async def domain_error(request: Request, exc: CharmError):
        status = 404 if isinstance(exc, NOT_FOUND) else 422
        return JSONResponse(
            status_code=status, content={"error": exc.name, "detail": str(exc)}
        )

    def version_json(session_id: str, version: Version) -> dict:
        doc = version.to_json()
        doc["ref"] = engine.version_ref(session_id, version.id)
        return doc

    @app.get("/healthz")
    def healthz():
        return {"status": "ok"}

    @app.post("/sessions")
    def create_session():
        return {"session_id": engine.store.create().id}

    @app.post("/sessions/{session_id}/refine")
    def refine_prompt(session_id: str, body: RefineBody):
        engine.store.get(session_id)
        suggestion = engine.refine_prompt(body.prompt)
        return {
            "refined": suggestion.refined,
            "appended": list(suggestion.appended),
            "source": suggestion.source,
        }

    @app.post("/sessions/{session_id}/generate")
    def generate(session_id: str, body: GenerateBody):
        engine.store.get(session_id)
        adjustment = AttentionAdjustment(
            entries=body.adjustment.entries if body.adjustment else {}
        )
        validate(adjustment, tokenize(body.prompt, engine.stopwords))

        def work():
            version = engine.generate_version(
                session_id,
                body.prompt,
                seed=body.seed,
                adjustment=adjustment,
                trace=body.trace,
            )
            return engine.version_ref(session_id, version.id)

        return manager.submit(session_id, work).to_json()

    @app.post("/sessions/{session_id}/inpaint")
    def inpaint_endpoint(session_id: str, body: InpaintBody):
        session = engine.store.get(session_id)
        session.get(body.version_id)  # 404 before queueing

        def work():
            version = engine.inpaint_version(
                session_id,
                body.version_id,
                strokes=[s.model_dump() for s in body.strokes],
                prompt=body.prompt,
                seed=body.seed,
            )
            return engine.version_ref(session_id, version.id)

        return manager.submit(session_id, work).to_json()

    @app.get("/jobs/{job_id}")
    def job_status(job_id: str):
        return manager.get(job_id).to_json()

    @app.get("/sessions/{session_id}/versions")
    def list_versions(session_id: str):
        session = engine.store.get(session_id)
        return {
            "session_id": session_id,
            "selected": session.selected,
            "versions": [version_json(session_id, v) for v in session.versions],
        }

    @app.get("/sessions/{session_id}/diff")
    def session_diff(session_id: str, a: int, b: int):
        session = engine.store.get(session_id)
        doc = diff(session, a, b)
        doc["images"] = [
            engine.version_ref(session_id, a),
            engine.version_ref(session_id, b),
        ]
        return doc

    @app.get("/versions/{ref}/image")
    def version_image(ref: str):
        session, version = engine.resolve_ref(ref)
        return Response(content=session.blob(version.image_ref), media_type="image/png")

    @app.get("/versions/{ref}/explanation")
    def version_explanation(ref: str):
        session, version = engine.resolve_ref(ref)
        if version.explanation is None:
            raise UnknownVersion(f"version {ref} was generated without a trace")
        return version.explanation

    @app.get("/versions/{ref}/heatmaps")
    def version_heatmaps(ref: str):
        session, version = engine.resolve_ref(ref)
        if version.explanation_ref is None:
            raise UnknownVersion(f"version {ref} was generated without a trace")
        return Response(
            content=session.blob(version.explanation_ref),
            media_type="application/octet-stream",
        )

    @app.get("/modifiers")
    def modifiers(query: str):
        records = search(engine.catalog, engine.corpus, query)
        return {
            "results": [
                {"id": r.id, "text": r.text, "image_path": r.image_path}
                for r in records
            ]
        }

    def entry_json(entry) -> dict:
        return {"phrase": entry.phrase, "n": entry.n, "frequency": entry.frequency}

    @app.get("/modifiers/similar")
    def modifiers_similar(phrase: str, k: int = 3):
        return {
            "results": [
                entry_json(e) for e in similar(engine.catalog, phrase, engine.encoder, k)
            ]
        }

    @app.get("/modifiers/dissimilar")
    def modifiers_dissimilar(phrase: str, k: int = 3):
        return {
            "results": [
                entry_json(e)
                for e in dissimilar(engine.catalog, phrase, engine.encoder, k)
            ]
        }

    return app


def serve(config: EngineConfig) -> None:
    """Bind the port, then run uvicorn until interrupted.

    Binding happens before the server starts so an occupied port surfaces
    as PortInUse instead of a late uvicorn crash.
    """
    try:
        engine = CharmEngine(config)
    except BadConfig:
        raise
    except CharmError as exc:
        raise BadConfig(f"cannot start service: {exc}") from exc
    app = create_app(engine)
    sock = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    try:
        sock.bind((config.host, config.port))
    except OSError as exc:
        sock.close()
        raise PortInUse(f"{config.host}:{config.port} is already bound") from exc
    server = uvicorn.Server(
        uvicorn.Config(app, log_level="warning", access_log=False)
    )
    server.run(sockets=[sock])
