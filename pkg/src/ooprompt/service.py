"""HTTP facade over a workspace, preserving the one-writer discipline.

Every endpoint answers with exactly one envelope: {"ok": true, "data": ...} or
{"ok": false, "error": {code, message, details}}. Mutating endpoints require
the caller's object_version and reject stale writes with 409. Pure reads are
byte-compatible with the CLI's ``--json`` output.
"""

from __future__ import annotations

import logging
from typing import Any, Mapping

from fastapi import FastAPI, Request, Response
from fastapi.middleware.cors import CORSMiddleware

from .analysis import build_static_report
from .deployment import enumerate_variants, render
from .errors import (
    NeverExisted,
    OOPromptError,
    PreconditionViolation,
    ProviderError,
    StaleVersion,
    UnknownDefault,
    UnknownObject,
    UnknownProperty,
    UnknownProposal,
    UnknownRun,
    UnknownTemplate,
    UnknownVersion,
)
from .evaluation import Criterion, run_comparison
from .mapping import Mapper
from .model import PropertySpec
from .versioning import diff_snapshots
from .wire import canonical_dumps, envelope_error, envelope_ok
from .workspace import Workspace

logger = logging.getLogger(__name__)

_FORMATS = {"nl": "natural_language", "natural_language": "natural_language",
            "json": "json", "hybrid": "hybrid"}

_NOT_FOUND = (UnknownObject, UnknownProperty, UnknownTemplate, UnknownVersion,
              UnknownProposal, UnknownRun, UnknownDefault, NeverExisted)


def _status_for(exc: OOPromptError) -> int:
    if isinstance(exc, _NOT_FOUND):
        return 404
    if isinstance(exc, StaleVersion):
        return 409
    if isinstance(exc, ProviderError):
        return 502
    return 400


def _json_response(payload: Any, status: int = 200) -> Response:
    return Response(
        content=canonical_dumps(payload) + "\n",
        status_code=status,
        media_type="application/json",
    )


def _ok(data: Any) -> Response:
    return _json_response(envelope_ok(data))


def _require(body: Mapping[str, Any], key: str) -> Any:
    if key not in body:
        raise PreconditionViolation(f"missing required field {key!r}", field=key)
    return body[key]


def _version_of(body: Mapping[str, Any]) -> int:
    version = _require(body, "object_version")
    if not isinstance(version, int):
        raise PreconditionViolation("object_version must be an integer")
    return version


def _fmt(name: str) -> str:
    if name not in _FORMATS:
        raise PreconditionViolation(f"unknown format {name!r}")
    return _FORMATS[name]


async def _body(request: Request) -> dict[str, Any]:
    if not await request.body():
        return {}
    try:
        doc = await request.json()
    except ValueError as exc:
        raise PreconditionViolation(f"request body is not JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise PreconditionViolation("request body must be a JSON object")
    return doc


def create_app(ws: Workspace) -> FastAPI:
    app = FastAPI(title="ooprompt service", docs_url=None, redoc_url=None)
    origins = ws.config.get("cors_origins", ["*"])
    app.add_middleware(
        CORSMiddleware,
        allow_origins=origins,
        allow_methods=["*"],
        allow_headers=["*"],
    )
    token = ws.config.get("auth_token")

    @app.middleware("http")
    async def _auth(request: Request, call_next):
        if token and request.url.path != "/healthz":
            supplied = request.headers.get("authorization", "")
            if supplied != f"Bearer {token}":
                exc = OOPromptError("missing or invalid bearer token")
                exc.code = "unauthorized"
                return _json_response(envelope_error(exc), 401)
        return await call_next(request)

    @app.exception_handler(OOPromptError)
    async def _domain_error(_request: Request, exc: OOPromptError) -> Response:
        return _json_response(envelope_error(exc), _status_for(exc))

    @app.get("/healthz")
    async def healthz() -> Response:
        return _json_response({"ok": True})

    # --- objects ---

    @app.get("/objects")
    async def list_objects() -> Response:
        return _ok(ws.list_objects())

    @app.post("/objects")
    async def create_object(request: Request) -> Response:
        body = await _body(request)
        obj = ws.create_object(
            str(_require(body, "title")), list(body.get("template_refs", [])),
        )
        return _ok(obj.to_dict())

    @app.get("/objects/{object_id}")
    async def get_object(object_id: str) -> Response:
        return _ok(ws.get_object(object_id).to_dict())

    @app.patch("/objects/{object_id}")
    async def patch_object(object_id: str, request: Request) -> Response:
        body = await _body(request)
        ws.require_version(object_id, _version_of(body))
        obj = ws.update_object(object_id, body.get("title"), body.get("notes"))
        return _ok(obj.to_dict())

    @app.delete("/objects/{object_id}")
    async def delete_object(object_id: str, object_version: int) -> Response:
        ws.require_version(object_id, object_version)
        ws.delete_object(object_id)
        return _ok({"deleted": object_id})

    @app.post("/objects/{object_id}/properties")
    async def add_property(object_id: str, request: Request) -> Response:
        body = await _body(request)
        ws.require_version(object_id, _version_of(body))
        spec = PropertySpec.from_dict(_require(body, "spec"))
        return _ok(ws.add_property(object_id, spec).to_dict())

    @app.patch("/objects/{object_id}/properties/{prop_id}")
    async def patch_property(object_id: str, prop_id: str, request: Request) -> Response:
        body = await _body(request)
        ws.require_version(object_id, _version_of(body))
        obj = ws.update_property(object_id, prop_id, _require(body, "patch"))
        return _ok(obj.to_dict())

    @app.delete("/objects/{object_id}/properties/{prop_id}")
    async def delete_property(object_id: str, prop_id: str,
                              object_version: int) -> Response:
        ws.require_version(object_id, object_version)
        return _ok(ws.remove_property(object_id, prop_id).to_dict())

    @app.post("/objects/{object_id}/nest/{prop_id}")
    async def nest(object_id: str, prop_id: str, request: Request) -> Response:
        body = await _body(request)
        ws.require_version(object_id, _version_of(body))
        parent, child = ws.nest_child(object_id, prop_id)
        return _ok({"parent": parent.to_dict(), "child": child.to_dict()})

    @app.post("/objects/{object_id}/promote/{prop_id}")
    async def promote(object_id: str, prop_id: str, request: Request) -> Response:
        body = await _body(request)
        ws.require_version(object_id, _version_of(body))
        return _ok(ws.promote_child(object_id, prop_id).to_dict())

    @app.post("/objects/{object_id}/reorder")
    async def reorder(object_id: str, request: Request) -> Response:
        body = await _body(request)
        ws.require_version(object_id, _version_of(body))
        obj = ws.reorder_properties(object_id, list(_require(body, "permutation")))
        return _ok(obj.to_dict())

    # --- assistants ---

    @app.post("/assist/extract")
    async def assist_extract(request: Request) -> Response:
        body = await _body(request)
        raw_text = str(_require(body, "raw_text")).strip()
        if body.get("object_id"):
            obj = ws.get_object(body["object_id"])
        else:
            title = body.get("title") or (raw_text.splitlines()[0][:60]
                                          if raw_text else "Untitled")
            obj = ws.create_object(title)
            if raw_text != title:
                obj = ws.update_object(obj.id, notes=raw_text)
        proposal = ws.mapper().extract_properties(raw_text, obj)
        return _ok({"object": obj.to_dict(), "proposal": proposal.to_dict()})

    @app.post("/assist/suggest")
    async def assist_suggest(request: Request) -> Response:
        body = await _body(request)
        obj = ws.get_object(str(_require(body, "object_id")))
        return _ok(ws.mapper().suggest_implicit_properties(obj).to_dict())

    @app.post("/assist/relations")
    async def assist_relations(request: Request) -> Response:
        body = await _body(request)
        obj = ws.get_object(str(_require(body, "object_id")))
        return _ok(ws.mapper().detect_relations(obj).to_dict())

    @app.post("/assist/candidates")
    async def assist_candidates(request: Request) -> Response:
        body = await _body(request)
        obj = ws.get_object(str(_require(body, "object_id")))
        prop_id = str(_require(body, "prop_id"))
        return _ok(ws.mapper().generate_candidates(obj, prop_id).to_dict())

    @app.post("/assist/examples")
    async def assist_examples(request: Request) -> Response:
        body = await _body(request)
        obj = ws.get_object(str(_require(body, "object_id")))
        prop_id = str(_require(body, "prop_id"))
        return _ok(ws.mapper().generate_examples(obj, prop_id).to_dict())

    @app.post("/assist/feedback")
    async def assist_feedback(request: Request) -> Response:
        body = await _body(request)
        obj = ws.get_object(str(_require(body, "object_id")))
        feedback = str(_require(body, "feedback"))
        return _ok(ws.mapper().apply_holistic_feedback(obj, feedback).to_dict())

    # --- proposals ---

    @app.get("/proposals")
    async def list_proposals(object_id: str | None = None) -> Response:
        return _ok([p.to_dict() for p in ws.list_proposals(object_id)])

    @app.get("/proposals/{proposal_id}")
    async def get_proposal(proposal_id: str) -> Response:
        return _ok(ws.get_proposal(proposal_id).to_dict())

    @app.post("/proposals/{proposal_id}/apply")
    async def apply_proposal(proposal_id: str, request: Request) -> Response:
        body = await _body(request)
        proposal = ws.get_proposal(proposal_id)
        ws.require_version(proposal.object_id, _version_of(body))
        items = body.get("items")
        obj, proposal, errors = ws.apply_proposal(
            proposal_id, [int(i) for i in items] if items is not None else None,
        )
        return _ok({
            "object": obj.to_dict() if obj is not None else None,
            "proposal": proposal.to_dict(),
            "item_errors": errors,
        })

    @app.post("/proposals/{proposal_id}/dismiss")
    async def dismiss_proposal(proposal_id: str, request: Request) -> Response:
        body = await _body(request)
        items = body.get("items")
        proposal = ws.dismiss_proposal(
            proposal_id, [int(i) for i in items] if items is not None else None,
        )
        return _ok(proposal.to_dict())

    # --- analysis, rendering ---

    @app.post("/objects/{object_id}/analyze")
    async def analyze(object_id: str, request: Request) -> Response:
        body = await _body(request)
        obj = ws.get_object(object_id)
        artifact = render(obj, _fmt(body.get("format", "nl")), ws.objects)
        report = build_static_report(
            obj, ws.templates, artifact,
            gateway=ws.gateway(), mapper=Mapper(ws.gateway()),
            objects=ws.objects, blocklist=ws.blocklist(),
        )
        return _ok(report.to_dict())

    @app.post("/objects/{object_id}/render")
    async def render_object(object_id: str, format: str = "nl",
                            variants: int | None = None,
                            emphasis: bool = False) -> Response:
        obj = ws.get_object(object_id)
        if variants is None:
            artifacts = [render(obj, _fmt(format), ws.objects, emphasis)]
        else:
            artifacts = enumerate_variants(obj, variants, _fmt(format),
                                           ws.objects, emphasis)
        return _ok({"artifacts": [a.to_dict() for a in artifacts]})

    # --- history ---

    @app.get("/objects/{object_id}/history")
    async def object_history(object_id: str) -> Response:
        ws.get_object(object_id)
        records = ws.history.records(object_id)
        return _ok([
            {"version": r.version, "changelog": r.changelog, "timestamp": r.timestamp}
            for r in records
        ])

    @app.get("/objects/{object_id}/diff")
    async def object_diff(object_id: str, a: int, b: int) -> Response:
        ws.get_object(object_id)
        snap_a = ws.history.get(object_id, a).snapshot
        snap_b = ws.history.get(object_id, b).snapshot
        return _ok(diff_snapshots(snap_a, snap_b))

    @app.post("/objects/{object_id}/restore/{version}")
    async def restore(object_id: str, version: int, request: Request) -> Response:
        body = await _body(request)
        ws.require_version(object_id, _version_of(body))
        return _ok(ws.restore(object_id, version).to_dict())

    # --- templates ---

    @app.get("/templates")
    async def list_templates() -> Response:
        return _ok([t.to_dict() for t in ws.templates.all()])

    @app.post("/templates/search")
    async def search_templates(request: Request) -> Response:
        body = await _body(request)
        query = str(_require(body, "query"))
        by = body.get("by", "output_type")
        gateway = ws.gateway() if by == "example" else None
        return _ok([t.to_dict() for t in ws.templates.search(query, by, gateway)])

    # --- evaluation ---

    @app.post("/eval/runs")
    async def create_run(request: Request) -> Response:
        body = await _body(request)
        obj = ws.get_object(str(_require(body, "object_id")))
        artifacts = enumerate_variants(
            obj, int(body.get("variants", 8)),
            _fmt(body.get("format", "hybrid")), ws.objects,
        )
        if len(artifacts) < 2:
            raise PreconditionViolation(
                "comparison needs at least two variants; add candidates first",
            )
        if body.get("criteria"):
            criteria = [Criterion.from_dict(c) for c in body["criteria"]]
        else:
            criteria = ws.criteria()
        models = list(body.get("models") or ["default"])
        with ws.writer():
            run_id = ws.next_id("run")
        report, outputs = run_comparison(ws.gateway(), run_id, artifacts,
                                         criteria, models)
        ws.save_run(report, outputs)
        return _ok(report.to_dict())

    @app.get("/eval/runs/{run_id}")
    async def get_run(run_id: str) -> Response:
        return _ok(ws.load_run(run_id).to_dict())

    return app
