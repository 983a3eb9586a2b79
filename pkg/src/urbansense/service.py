"""HTTP query/curation service over a running Engine.

All endpoints live under /v1 and speak JSON. Query parameters are strictly
validated: any unknown parameter is a 400, never silently ignored. The
stream endpoint emits server-sent events and resumes from ?since=; a
consumer that falls more than STREAM_BUFFER events behind after its initial
catch-up is disconnected instead of buffered without bound.
"""

from __future__ import annotations

import asyncio
import json
from contextlib import asynccontextmanager
from typing import Optional

from fastapi import APIRouter, FastAPI, Request
from fastapi.responses import JSONResponse, Response, StreamingResponse

from .runtime import CurationError, Engine

STREAM_POLL_S = 0.05


class BadRequest(Exception):
    def __init__(self, message: str):
        super().__init__(message)
        self.message = message


def _check_params(request: Request, allowed: set[str]):
    unknown = set(request.query_params.keys()) - allowed
    if unknown:
        raise BadRequest(f"unknown query parameters: {sorted(unknown)}")


def _get_float(request: Request, name: str, default: Optional[float] = None, required: bool = False) -> Optional[float]:
    raw = request.query_params.get(name)
    if raw is None:
        if required:
            raise BadRequest(f"missing required parameter {name!r}")
        return default
    try:
        return float(raw)
    except ValueError:
        raise BadRequest(f"parameter {name!r} must be a number") from None


def _get_int(request: Request, name: str, default: int) -> int:
    raw = request.query_params.get(name)
    if raw is None:
        return default
    try:
        return int(raw)
    except ValueError:
        raise BadRequest(f"parameter {name!r} must be an integer") from None


async def _json_body(request: Request) -> dict:
    try:
        body = await request.json()
    except Exception:
        raise BadRequest("request body must be valid JSON") from None
    if not isinstance(body, dict):
        raise BadRequest("request body must be a JSON object")
    return body


def create_app(engine: Engine) -> FastAPI:
    @asynccontextmanager
    async def lifespan(app: FastAPI):
        yield
        engine.close()

    app = FastAPI(
        title="urbansense",
        docs_url=None,
        redoc_url=None,
        openapi_url=None,
        lifespan=lifespan,
    )
    router = APIRouter(prefix="/v1")

    @app.exception_handler(BadRequest)
    async def _bad_request(request: Request, exc: BadRequest):
        return JSONResponse(status_code=400, content={"error": exc.message})

    @app.exception_handler(CurationError)
    async def _curation_error(request: Request, exc: CurationError):
        return JSONResponse(status_code=exc.status, content={"error": str(exc)})

    @app.exception_handler(404)
    async def _not_found(request: Request, exc):
        return JSONResponse(status_code=404, content={"error": "not found"})

    @app.exception_handler(405)
    async def _bad_method(request: Request, exc):
        return JSONResponse(status_code=405, content={"error": "method not allowed"})

    # -- analytics reads ------------------------------------------------------

    @router.get("/surface")
    async def get_surface(request: Request):
        _check_params(request, {"window_start"})
        ws = _get_float(request, "window_start")
        return engine.surface(ws)

    @router.get("/alerts")
    async def get_alerts(request: Request):
        _check_params(request, {"since_seq"})
        since = _get_int(request, "since_seq", 0)
        return {"alerts": engine.alerts_since(since), "latest_seq": engine.seq}

    @router.get("/topics/emerging")
    async def get_emerging(request: Request):
        _check_params(request, set())
        return {"topics": engine.emerging()}

    @router.get("/snapshot")
    async def get_snapshot(request: Request):
        _check_params(request, {"window_start"})
        ws = _get_float(request, "window_start")
        return engine.snapshot(ws)

    @router.get("/guidance")
    async def get_guidance(request: Request):
        _check_params(request, {"lat", "lon", "radius_m", "sectors"})
        lat = _get_float(request, "lat", required=True)
        lon = _get_float(request, "lon", required=True)
        radius_m = _get_float(request, "radius_m", 500.0)
        sectors = _get_int(request, "sectors", 8)
        if not -90 <= lat <= 90 or not -180 <= lon <= 180:
            raise BadRequest("lat/lon out of range")
        if radius_m <= 0:
            raise BadRequest("radius_m must be positive")
        if sectors < 4:
            raise BadRequest("sectors must be at least 4")
        return engine.guidance(lat, lon, radius_m, sectors)

    # -- watch topics ---------------------------------------------------------

    @router.get("/watch-topics")
    async def list_watch_topics(request: Request):
        _check_params(request, set())
        return {"watch_topics": engine.list_watch_topics()}

    @router.post("/watch-topics", status_code=201)
    async def create_watch_topic(request: Request):
        _check_params(request, set())
        body = await _json_body(request)
        return engine.create_watch_topic(body)

    @router.get("/watch-topics/{topic_id}")
    async def get_watch_topic(topic_id: str, request: Request):
        _check_params(request, set())
        return engine.get_watch_topic(topic_id)

    @router.delete("/watch-topics/{topic_id}", status_code=204)
    async def delete_watch_topic(topic_id: str, request: Request):
        _check_params(request, set())
        engine.delete_watch_topic(topic_id)
        return Response(status_code=204)

    # -- products -------------------------------------------------------------

    @router.get("/products")
    async def list_products(request: Request):
        _check_params(request, set())
        return {"products": engine.list_products()}

    @router.post("/products", status_code=201)
    async def create_product(request: Request):
        _check_params(request, set())
        body = await _json_body(request)
        return engine.create_product(body)

    @router.get("/products/{product_id}/feed")
    async def product_feed(product_id: str, request: Request):
        _check_params(request, {"since"})
        since = _get_int(request, "since", 0)
        return {"events": engine.product_feed(product_id, since), "latest_seq": engine.seq}

    # -- tracked users --------------------------------------------------------

    @router.get("/tracked-users")
    async def get_tracked(request: Request):
        _check_params(request, set())
        return engine.tracked_users()

    @router.put("/tracked-users")
    async def put_tracked(request: Request):
        _check_params(request, set())
        body = await _json_body(request)
        tracked = body.get("tracked")
        if not isinstance(tracked, list) or not all(isinstance(a, str) for a in tracked):
            raise BadRequest("body must be {\"tracked\": [author, ...]}")
        unknown = set(body) - {"tracked"}
        if unknown:
            raise BadRequest(f"unknown fields: {sorted(unknown)}")
        return engine.set_tracked_users(tracked)

    # -- stream ---------------------------------------------------------------

    @router.get("/stream")
    async def stream(request: Request):
        _check_params(request, {"since"})
        since = _get_int(request, "since", 0)
        buffer_limit = engine.config.stream_buffer

        # Client disconnects cancel the generator via the response's own
        # disconnect listener; polling request state here would double-read
        # the receive channel.
        async def gen():
            cursor = since
            caught_up = False
            while True:
                events = engine.events_since(cursor)
                if caught_up and len(events) > buffer_limit:
                    yield ": lagged beyond buffer, disconnecting\n\n"
                    return
                for ev in events:
                    cursor = ev.seq
                    data = json.dumps(ev.payload, ensure_ascii=False, sort_keys=True)
                    yield f"id: {ev.seq}\nevent: {ev.kind}\ndata: {data}\n\n"
                if not events:
                    caught_up = True
                await asyncio.sleep(STREAM_POLL_S)

        return StreamingResponse(gen(), media_type="text/event-stream")

    # -- health ---------------------------------------------------------------

    async def healthz(request: Request):
        _check_params(request, set())
        return JSONResponse(
            {"status": "ok", "applied": len(engine.state.messages), "seq": engine.seq}
        )

    router.add_api_route("/healthz", healthz, methods=["GET"])
    app.add_api_route("/healthz", healthz, methods=["GET"])

    app.include_router(router)
    return app


def serve(engine: Engine, host: str = "127.0.0.1", port: int = 8000):
    """Run the service until interrupted; drains in-flight requests on stop."""
    import uvicorn

    app = create_app(engine)
    uvicorn.run(app, host=host, port=port, log_level="warning")
