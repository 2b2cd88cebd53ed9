"""HTTP adapter over the ServerCore; all bodies are UTF-8 JSON.

Endpoints are thin: resolve the bearer token, pack path/query values into the
payload, dispatch by route id. Handlers are synchronous on purpose so a
blocked long poll parks a worker thread, never the event loop.
"""

from __future__ import annotations

from fastapi import Body, FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from .core import ServerCore
from .errors import ServiceError

_STATUS = {
    "unauthorized": 401,
    "unknown_document": 404,
    "unknown_edit": 404,
    "unknown_thread": 404,
    "unknown_task": 404,
    "unknown_route": 404,
    "unknown_parent": 404,
    "unknown_anchor": 404,
    "unknown_target": 404,
    "stale_edit": 409,
    "already_resolved": 409,
    "already_done": 409,
    "thread_resolved": 409,
    "not_author": 403,
    "not_assignee": 403,
    "storage_failure": 500,
    "malformed_log": 500,
}


def _token(request: Request) -> str:
    auth = request.headers.get("authorization", "")
    if auth.lower().startswith("bearer "):
        return auth[7:].strip()
    return request.query_params.get("token", "")


def build_app(core: ServerCore) -> FastAPI:
    app = FastAPI(title="crowdscribe", docs_url=None, redoc_url=None)
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    app.state.core = core

    @app.exception_handler(ServiceError)
    def service_error(_request: Request, exc: ServiceError):
        status = _STATUS.get(exc.code, 400)
        return JSONResponse(status_code=status, content={"error": exc.code, "message": exc.message})

    @app.post("/sessions")
    def create_session(payload: dict = Body(...)):
        session = core.create_session(
            payload["actor_id"], payload["role"], payload.get("doc_id")
        )
        return {
            "token": session.token,
            "actor_id": session.actor_id,
            "role": session.role,
            "doc_id": session.doc_id,
        }

    @app.post("/documents")
    def create_document(request: Request, payload: dict = Body(...)):
        return core.handle("create_document", _token(request), payload)

    @app.get("/documents/{doc_id}")
    def get_document(doc_id: str, request: Request):
        return core.handle("get_document", _token(request), {"doc_id": doc_id})

    @app.post("/documents/{doc_id}/blocks")
    def dictate_block(doc_id: str, request: Request, payload: dict = Body(...)):
        payload = dict(payload, doc_id=doc_id)
        return core.handle("dictate_block", _token(request), payload)

    @app.post("/documents/{doc_id}/blocks/{block_id}/done")
    def set_block_done(doc_id: str, block_id: str, request: Request, payload: dict = Body(...)):
        payload = dict(payload, doc_id=doc_id, block_id=block_id)
        return core.handle("set_block_done", _token(request), payload)

    @app.post("/documents/{doc_id}/edits")
    def propose_edit(doc_id: str, request: Request, payload: dict = Body(...)):
        payload = dict(payload, doc_id=doc_id)
        return core.handle("propose_edit", _token(request), payload)

    @app.post("/documents/{doc_id}/edits/{edit_id}/review")
    def review_edit(doc_id: str, edit_id: str, request: Request, payload: dict = Body(...)):
        payload = dict(payload, doc_id=doc_id, edit_id=edit_id)
        return core.handle("review_edit", _token(request), payload)

    @app.get("/documents/{doc_id}/edits/{edit_id}/context")
    def edit_context(doc_id: str, edit_id: str, request: Request):
        return core.handle("get_edit_context", _token(request), {"doc_id": doc_id, "edit_id": edit_id})

    @app.get("/documents/{doc_id}/thumbnails")
    def thumbnails(doc_id: str, request: Request):
        return core.handle("get_thumbnails", _token(request), {"doc_id": doc_id})["pages"]

    @app.post("/documents/{doc_id}/threads")
    def open_thread(doc_id: str, request: Request, payload: dict = Body(...)):
        payload = dict(payload, doc_id=doc_id)
        return core.handle("open_thread", _token(request), payload)

    @app.post("/threads/{thread_id}/replies")
    def reply_thread(thread_id: str, request: Request, payload: dict = Body(...)):
        payload = dict(payload, thread_id=thread_id)
        return core.handle("reply_thread", _token(request), payload)

    @app.post("/threads/{thread_id}/resolve")
    def resolve_thread(thread_id: str, request: Request, payload: dict = Body(None)):
        return core.handle("resolve_thread", _token(request), {"thread_id": thread_id})

    @app.get("/documents/{doc_id}/tasks/next")
    def next_task(doc_id: str, request: Request, claim: str | None = None):
        out = core.handle("next_task", _token(request), {"doc_id": doc_id, "claim": claim})
        return out["task"] or {}

    @app.post("/tasks/{task_id}/skip")
    def skip_task(task_id: str, request: Request, payload: dict = Body(None)):
        return core.handle("skip_task", _token(request), {"task_id": task_id})

    @app.post("/tasks/{task_id}/done")
    def complete_task(task_id: str, request: Request, payload: dict = Body(None)):
        return core.handle("complete_task", _token(request), {"task_id": task_id})

    @app.post("/tasks/{task_id}/reopen")
    def reopen_task(task_id: str, request: Request, payload: dict = Body(None)):
        return core.handle("reopen_task", _token(request), {"task_id": task_id})

    @app.get("/documents/{doc_id}/events")
    def poll_events(doc_id: str, request: Request, since: int = 0, wait: int = 0):
        out = core.handle("poll_events", _token(request), {"doc_id": doc_id, "since": since, "wait": wait})
        return out["events"]

    @app.get("/documents/{doc_id}/metrics")
    def metrics(doc_id: str, request: Request):
        return core.handle("get_metrics", _token(request), {"doc_id": doc_id})

    return app
