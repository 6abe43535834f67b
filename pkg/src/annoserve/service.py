"""HTTP ingestion and administration service.

Endpoints (all bodies canonical JSON):

    POST /api/v1/annotations        ingest one submission payload
    GET  /api/v1/categories         category config, UI fields included
    POST /api/v1/qc/{image_ref}     record a review verdict
    GET  /api/v1/snapshot           COCO export (?approved_only=true|false)
    GET  /api/v1/stats              dataset + per-annotator statistics
    GET  /api/v1/health             liveness; 503 when replay failed

When a token is configured, every endpoint except health requires
"Authorization: Bearer <token>". If the store fails integrity checks at
startup the app still serves, answering 503 everywhere, so operators
can see what is wrong through /health instead of a dead port.
"""

from __future__ import annotations

import base64
import binascii
import contextlib
import hmac
import json
import logging
import math
from dataclasses import dataclass
from typing import Any, Optional

from starlette.applications import Starlette
from starlette.middleware import Middleware
from starlette.middleware.cors import CORSMiddleware
from starlette.requests import Request
from starlette.responses import Response
from starlette.routing import Route

from . import __version__
from .canonical import canonical_bytes, parse_rfc3339, rfc3339_now
from .coco import category_config_json, serialize_dataset
from .config import ServerConfig
from .errors import (
    ConfigError,
    IntegrityError,
    InvalidImageError,
    NotFoundError,
    Violation,
    errors_only,
)
from .geometry import Polygon, validate_polygon
from .snapshot import build_snapshot
from .stats import compute_annotator_stats, compute_dataset_stats
from .storage import AnnotationDraft, QcEvent, Store, Verdict, make_submission, png_dimensions
from .urlmeta import parse_url

log = logging.getLogger(__name__)


def json_response(doc: Any, status: int = 200) -> Response:
    return Response(canonical_bytes(doc), status_code=status, media_type="application/json")


def violation_response(violations: list[Violation]) -> Response:
    return json_response({"violations": [v.to_json() for v in violations]}, status=400)


def _bad(code: str, message: str) -> Violation:
    return Violation(code, message)


@dataclass
class PreparedSubmission:
    annotator_id: str
    captured_at: str
    page_url: str
    png: bytes
    width: int
    height: int
    drafts: list[AnnotationDraft]


def validate_payload(doc: Any, category_names: frozenset[str]) -> tuple[list[Violation], Optional[PreparedSubmission]]:
    """Check a submission payload; returns all violations found plus the
    decoded pieces when there are none."""
    if not isinstance(doc, dict):
        return [_bad("bad-payload", "request body must be a JSON object")], None
    violations: list[Violation] = []

    annotator_id = doc.get("annotator_id")
    if not isinstance(annotator_id, str) or not annotator_id:
        violations.append(_bad("bad-annotator", "annotator_id must be a non-empty string"))

    captured_at = doc.get("captured_at")
    if not isinstance(captured_at, str):
        violations.append(_bad("bad-timestamp", "captured_at must be an RFC 3339 string"))
    else:
        try:
            parse_rfc3339(captured_at)
        except ValueError as exc:
            violations.append(_bad("bad-timestamp", f"captured_at: {exc}"))

    page_url = doc.get("page_url")
    if not isinstance(page_url, str):
        violations.append(_bad("bad-page-url", "page_url must be a string"))

    viewport = doc.get("viewport")
    vw = vh = dpr = None
    if not isinstance(viewport, dict):
        violations.append(_bad("bad-viewport", "viewport must be an object"))
    else:
        vw, vh = viewport.get("width"), viewport.get("height")
        dpr = viewport.get("device_pixel_ratio")
        if not all(isinstance(v, int) and not isinstance(v, bool) and v > 0 for v in (vw, vh)):
            violations.append(_bad("bad-viewport", "viewport width/height must be positive integers"))
            vw = vh = None
        if not isinstance(dpr, (int, float)) or isinstance(dpr, bool) or not math.isfinite(dpr) or dpr <= 0:
            violations.append(_bad("bad-viewport", "device_pixel_ratio must be a positive real"))
            dpr = None

    png = None
    width = height = None
    image = doc.get("image")
    if not isinstance(image, str):
        violations.append(_bad("image-not-base64", "image must be a base64 string"))
    else:
        try:
            png = base64.b64decode(image, validate=True)
        except binascii.Error as exc:
            violations.append(_bad("image-not-base64", f"image does not decode: {exc}"))
        if png is not None:
            try:
                width, height = png_dimensions(png)
            except InvalidImageError as exc:
                violations.append(_bad("image-not-png", str(exc)))
                png = None
    if width is not None and vw is not None and dpr is not None:
        if abs(width - vw * dpr) > 1 or abs(height - vh * dpr) > 1:
            violations.append(
                _bad(
                    "image-dimension-mismatch",
                    f"image is {width}x{height} but viewport {vw}x{vh} at dpr {dpr} "
                    f"implies {vw * dpr:g}x{vh * dpr:g}",
                )
            )

    annotations = doc.get("annotations")
    drafts: list[AnnotationDraft] = []
    if not isinstance(annotations, list) or not annotations:
        violations.append(_bad("no-annotations", "annotations must be a non-empty list"))
        annotations = []
    for i, item in enumerate(annotations):
        where = f"annotations[{i}]"
        if not isinstance(item, dict):
            violations.append(_bad("bad-annotation", f"{where} must be an object"))
            continue
        name = item.get("category_name")
        if not isinstance(name, str) or not name:
            violations.append(_bad("bad-annotation", f"{where}: category_name must be a non-empty string"))
            name = None
        elif name not in category_names:
            violations.append(_bad("unknown-category", f"{where}: category {name!r} is not configured"))
        attrs = item.get("attributes", {})
        if not isinstance(attrs, dict) or not all(
            isinstance(k, str) and isinstance(v, str) for k, v in attrs.items()
        ):
            violations.append(_bad("bad-annotation", f"{where}: attributes must map strings to strings"))
            attrs = {}
        points = item.get("polygon")
        if (
            not isinstance(points, list)
            or len(points) < 3
            or not all(
                isinstance(p, (list, tuple))
                and len(p) == 2
                and all(isinstance(c, (int, float)) and not isinstance(c, bool) for c in p)
                for p in points
            )
        ):
            violations.append(_bad("bad-annotation", f"{where}: polygon must be a list of >= 3 [x, y] pairs"))
            continue
        vertices = [(float(x), float(y)) for x, y in points]
        if width is not None:
            for v in errors_only(validate_polygon(vertices, width, height)):
                violations.append(Violation(v.code, f"{where}: {v.message}", v.severity))
        if name is not None:
            try:
                drafts.append(AnnotationDraft(name, Polygon.from_pairs(vertices), attrs))
            except ValueError as exc:
                violations.append(_bad("bad-annotation", f"{where}: {exc}"))

    if violations:
        return violations, None
    return [], PreparedSubmission(
        annotator_id=annotator_id,
        captured_at=captured_at,
        page_url=page_url,
        png=png,
        width=width,
        height=height,
        drafts=drafts,
    )


class _Holder:
    """Mutable app state: the store, or the reason it is unavailable."""

    def __init__(self, store: Optional[Store], error: Optional[str]):
        self.store = store
        self.error = error

    def close(self) -> None:
        if self.store is not None:
            self.store.close()


def create_app(config: ServerConfig, store: Optional[Store] = None) -> Starlette:
    if store is None:
        try:
            store = Store.open(config.data_dir)
            error = None
        except IntegrityError as exc:
            log.error("store replay failed, serving degraded: %s", exc)
            store, error = None, str(exc)
    else:
        error = None
    holder = _Holder(store, error)
    category_names = frozenset(cat.name for cat in config.categories)

    def authorized(request: Request) -> bool:
        if config.token is None:
            return True
        header = request.headers.get("authorization", "")
        return hmac.compare_digest(header, f"Bearer {config.token}")

    def gate(request: Request) -> Optional[Response]:
        if not authorized(request):
            return json_response({"error": "unauthorized"}, status=401)
        if holder.store is None:
            return json_response({"error": "storage unavailable"}, status=503)
        return None

    async def submit(request: Request) -> Response:
        denied = gate(request)
        if denied is not None:
            return denied
        declared = request.headers.get("content-length")
        if declared and declared.isdigit() and int(declared) > config.max_payload_bytes:
            return json_response(
                {"error": "payload too large", "max_payload_bytes": config.max_payload_bytes}, status=413
            )
        body = await request.body()
        if len(body) > config.max_payload_bytes:
            return json_response(
                {"error": "payload too large", "max_payload_bytes": config.max_payload_bytes}, status=413
            )
        try:
            doc = json.loads(body)
        except ValueError as exc:
            return violation_response([_bad("bad-payload", f"body is not JSON: {exc}")])
        violations, prepared = validate_payload(doc, category_names)
        if violations:
            return violation_response(violations)

        geo = parse_url(prepared.page_url, config.registry)
        try:
            image_ref = holder.store.put_blob(prepared.png)
            rec = make_submission(
                annotator_id=prepared.annotator_id,
                captured_at=prepared.captured_at,
                page_url=prepared.page_url,
                image_ref=image_ref,
                image_width=prepared.width,
                image_height=prepared.height,
                drafts=prepared.drafts,
                geo=geo,
                received_at=rfc3339_now(),
            )
            receipt = holder.store.append_submission(rec)
        except (OSError, IntegrityError) as exc:
            log.error("storage failure during ingest: %s", exc)
            return json_response({"error": f"storage failure: {exc}"}, status=500)
        return json_response(
            {
                "submission_id": receipt.submission_id,
                "duplicate": receipt.duplicate,
                "geo_attached": geo is not None,
            },
            status=200 if receipt.duplicate else 201,
        )

    async def categories(request: Request) -> Response:
        if not authorized(request):
            return json_response({"error": "unauthorized"}, status=401)
        return json_response([category_config_json(cat) for cat in config.categories])

    async def qc(request: Request) -> Response:
        denied = gate(request)
        if denied is not None:
            return denied
        image_ref = request.path_params["image_ref"]
        try:
            doc = json.loads(await request.body())
        except ValueError as exc:
            return violation_response([_bad("bad-payload", f"body is not JSON: {exc}")])
        if not isinstance(doc, dict):
            return violation_response([_bad("bad-payload", "request body must be a JSON object")])
        reviewer = doc.get("reviewer")
        if not isinstance(reviewer, str) or not reviewer:
            return violation_response([_bad("missing-reviewer", "reviewer must be a non-empty string")])
        reason = doc.get("reason")
        if reason is not None and not isinstance(reason, str):
            return violation_response([_bad("bad-reason", "reason must be a string when present")])
        try:
            event = QcEvent(
                image_ref=image_ref,
                verdict=doc.get("verdict"),
                reviewer=reviewer,
                at=rfc3339_now(),
                reason=reason,
            )
        except ValueError as exc:
            return violation_response([_bad("bad-verdict", str(exc))])
        try:
            effective = holder.store.append_qc(event)
        except NotFoundError as exc:
            return json_response({"error": str(exc)}, status=404)
        return json_response({"image_ref": image_ref, "effective_verdict": effective.value})

    async def snapshot(request: Request) -> Response:
        denied = gate(request)
        if denied is not None:
            return denied
        flag = request.query_params.get("approved_only", "false")
        if flag not in ("true", "false"):
            return violation_response([_bad("bad-query", "approved_only must be true or false")])
        try:
            ds = build_snapshot(holder.store.state, config.categories, approved_only=flag == "true")
            return Response(serialize_dataset(ds), media_type="application/json")
        except ConfigError as exc:
            return json_response({"error": str(exc)}, status=500)

    async def stats(request: Request) -> Response:
        denied = gate(request)
        if denied is not None:
            return denied
        flag = request.query_params.get("approved_only", "true")
        if flag not in ("true", "false"):
            return violation_response([_bad("bad-query", "approved_only must be true or false")])
        state = holder.store.state
        dataset = compute_dataset_stats(state, config.categories, approved_only=flag == "true")
        rows, footer = compute_annotator_stats(state)
        return json_response(
            {
                "dataset": dataset.to_json(),
                "annotators": [r.to_json() for r in rows],
                "footer": footer.to_json(),
            }
        )

    async def health(request: Request) -> Response:
        if holder.store is None:
            return json_response(
                {"status": "unavailable", "version": __version__, "error": holder.error}, status=503
            )
        return json_response({"status": "ok", "version": __version__})

    routes = [
        Route("/api/v1/annotations", submit, methods=["POST"]),
        Route("/api/v1/categories", categories, methods=["GET"]),
        Route("/api/v1/qc/{image_ref}", qc, methods=["POST"]),
        Route("/api/v1/snapshot", snapshot, methods=["GET"]),
        Route("/api/v1/stats", stats, methods=["GET"]),
        Route("/api/v1/health", health, methods=["GET"]),
    ]
    middleware = [
        Middleware(
            CORSMiddleware,
            allow_origins=list(config.allowed_origins),
            allow_methods=["*"],
            allow_headers=["*"],
        )
    ]
    @contextlib.asynccontextmanager
    async def lifespan(_app):
        try:
            yield
        finally:
            holder.close()

    app = Starlette(routes=routes, middleware=middleware, lifespan=lifespan)
    app.state.holder = holder
    app.state.config = config
    return app
