"""HTTP query service over an immutable loaded index."""

from __future__ import annotations

import json

from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from .errors import EmptyInput, EmptyQuery, PartPyrError, SchemeMismatch
from .features import ExtractionParams, VARIANTS
from .geometry import (
    normalize,
    raw_input_from_dict,
    sketch_to_dict,
    strokes_as_parts,
    zones_to_parts,
)
from .index_store import RetrievalIndex
from .matching import knn
from .regions import SCHEMES, build_layout


def create_app(
    index: RetrievalIndex,
    view_docs,
    params: ExtractionParams = ExtractionParams(),
) -> FastAPI:
    app = FastAPI(title="partpyr", version="0.1.0")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    layout = build_layout(index.scheme, index.canvas_side)
    views_by_key = {(d.model_id, d.view_id): d for d in view_docs}
    views_by_model: dict[str, list[int]] = {}
    for d in view_docs:
        views_by_model.setdefault(d.model_id, []).append(d.view_id)

    @app.get("/api/health")
    def health():
        return {"status": "ok", "records": len(index.records), "scheme": index.scheme}

    @app.get("/api/schemes")
    def schemes():
        return {"schemes": list(SCHEMES), "active": index.scheme}

    @app.get("/api/models/{model_id}/views/{view_id}")
    def model_view(model_id: str, view_id: int):
        doc = views_by_key.get((model_id, view_id))
        if doc is None:
            return JSONResponse(
                {"error": f"no view {view_id} for model {model_id}"}, status_code=404
            )
        body = sketch_to_dict(doc)
        body["all_view_ids"] = sorted(views_by_model.get(model_id, []))
        return body

    @app.post("/api/query")
    async def query(request: Request):
        try:
            body = json.loads(await request.body())
        except json.JSONDecodeError:
            return JSONResponse({"error": "malformed JSON body"}, status_code=400)
        if not isinstance(body, dict) or not body.get("strokes"):
            return JSONResponse(
                {"error": "body must contain non-empty 'strokes'"}, status_code=400
            )
        mode = body.get("mode", "full")
        if mode not in ("full", "incomplete"):
            return JSONResponse({"error": f"unknown mode {mode!r}"}, status_code=400)
        k = int(body.get("k", 20))
        if body.get("scheme") and body["scheme"] != index.scheme:
            return JSONResponse(
                {"error": f"index scheme is {index.scheme}, not {body['scheme']}"},
                status_code=409,
            )
        try:
            raw = raw_input_from_dict(body)
            if raw.zone_strokes:
                sketch = zones_to_parts(raw, index.canvas_side)
            else:
                sketch = strokes_as_parts(raw, index.canvas_side)
            bbox = raw.bbox if mode == "incomplete" else None
            norm = normalize(sketch, mode=mode, user_bbox=bbox)
            feat = VARIANTS[index.variant](norm, layout, params)
            results = knn(feat, index, k=k, mode=mode)
        except EmptyQuery as exc:
            return JSONResponse({"error": str(exc)}, status_code=422)
        except SchemeMismatch as exc:
            return JSONResponse({"error": str(exc)}, status_code=409)
        except (EmptyInput, ValueError, PartPyrError) as exc:
            return JSONResponse({"error": str(exc)}, status_code=400)
        return {
            "mode": mode,
            "parts": [
                {"id": p.id, "strokes": [s.points.tolist() for s in p.strokes]}
                for p in sketch.parts
            ],
            "results": [
                {
                    "model_id": r.model_id,
                    "best_view_id": r.best_view_id,
                    "distance": r.distance,
                }
                for r in results
            ],
        }

    return app
