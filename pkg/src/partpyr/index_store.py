"""Index construction, persistence, and the synthetic dataset generator."""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DuplicateRecord, SchemeMismatch
from .features import (
    ExtractionParams,
    PyramidFeature,
    VARIANTS,
    extract_full,
)
from .geometry import (
    DEFAULT_CANVAS,
    SegmentedSketch,
    SemanticPart,
    Stroke,
    normalize,
)
from .regions import build_layout

INDEX_VERSION = 1


@dataclass(frozen=True)
class IndexRecord:
    model_id: str
    view_id: int
    category: str
    feature: PyramidFeature


@dataclass(frozen=True)
class RetrievalIndex:
    scheme: str
    canvas_side: float
    variant: str
    fingerprint: str
    records: tuple[IndexRecord, ...]

    def categories(self) -> dict[str, int]:
        """category -> number of distinct models."""
        seen: dict[str, set] = {}
        for r in self.records:
            seen.setdefault(r.category, set()).add(r.model_id)
        return {c: len(ms) for c, ms in seen.items()}


def params_fingerprint(scheme: str, variant: str, params: ExtractionParams) -> str:
    payload = json.dumps(
        {"scheme": scheme, "variant": variant, "params": params.fingerprint()},
        sort_keys=True,
    )
    return hashlib.sha256(payload.encode()).hexdigest()[:16]


def build_index(
    view_docs,
    scheme: str,
    variant: str = "FULL",
    params: ExtractionParams = ExtractionParams(),
) -> RetrievalIndex:
    """Normalize and extract every view document into an index."""
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}")
    extractor = VARIANTS[variant]
    canvas_sides = {d.canvas_side for d in view_docs}
    if len(canvas_sides) > 1:
        raise ValueError(f"mixed canvas sizes in view docs: {sorted(canvas_sides)}")
    canvas = canvas_sides.pop() if canvas_sides else float(DEFAULT_CANVAS)
    layout = build_layout(scheme, canvas)
    seen = set()
    records = []
    for doc in view_docs:
        key = (doc.model_id, doc.view_id)
        if key in seen:
            raise DuplicateRecord(f"duplicate (model, view) {key}")
        seen.add(key)
        feat = extractor(normalize(doc), layout, params)
        records.append(
            IndexRecord(
                model_id=doc.model_id,
                view_id=doc.view_id,
                category=doc.category,
                feature=feat,
            )
        )
    return RetrievalIndex(
        scheme=scheme,
        canvas_side=canvas,
        variant=variant,
        fingerprint=params_fingerprint(scheme, variant, params),
        records=tuple(records),
    )


# ---------------------------------------------------------------------------
# persistence: <base>.meta.json + <base>.f32


def save_index(index: RetrievalIndex, base: str | Path) -> None:
    base = Path(base)
    payload = bytearray()
    recs = []
    offset = 0
    for r in index.records:
        vals = r.feature.values.astype("<f4").tobytes()
        recs.append(
            {
                "model_id": r.model_id,
                "view_id": r.view_id,
                "category": r.category,
                "reliability": r.feature.reliability.tolist(),
                "empty_flags": [bool(f) for f in r.feature.empty_flags],
                "offset": offset,
                "length": r.feature.total_len,
            }
        )
        payload.extend(vals)
        offset += r.feature.total_len
    meta = {
        "version": INDEX_VERSION,
        "scheme": index.scheme,
        "canvas": index.canvas_side,
        "variant": index.variant,
        "fingerprint": index.fingerprint,
        "records": recs,
    }
    base.parent.mkdir(parents=True, exist_ok=True)
    with open(f"{base}.meta.json", "w") as fh:
        json.dump(meta, fh, sort_keys=True)
    with open(f"{base}.f32", "wb") as fh:
        fh.write(bytes(payload))


def load_index(base: str | Path) -> RetrievalIndex:
    base = Path(base)
    meta = json.load(open(f"{base}.meta.json"))
    flat = np.fromfile(f"{base}.f32", dtype="<f4").astype(np.float64)
    layout = build_layout(meta["scheme"], meta["canvas"])
    block_lens = [r.grid * r.grid * 6 for r in layout.regions]
    records = []
    for r in meta["records"]:
        vals = flat[r["offset"] : r["offset"] + r["length"]]
        blocks, off = [], 0
        for n in block_lens:
            blocks.append(vals[off : off + n].copy())
            off += n
        feat = PyramidFeature(
            scheme=meta["scheme"],
            canvas_side=float(meta["canvas"]),
            blocks=tuple(blocks),
            reliability=np.asarray(r["reliability"], dtype=np.float64),
            empty_flags=np.asarray(r["empty_flags"], dtype=bool),
        )
        records.append(
            IndexRecord(
                model_id=r["model_id"],
                view_id=r["view_id"],
                category=r["category"],
                feature=feat,
            )
        )
    return RetrievalIndex(
        scheme=meta["scheme"],
        canvas_side=float(meta["canvas"]),
        variant=meta["variant"],
        fingerprint=meta["fingerprint"],
        records=tuple(records),
    )


def check_fingerprint(index: RetrievalIndex, params: ExtractionParams) -> None:
    expected = params_fingerprint(index.scheme, index.variant, params)
    if expected != index.fingerprint:
        raise SchemeMismatch(
            "extraction parameters do not match the index fingerprint"
        )


# ---------------------------------------------------------------------------
# synthetic dataset generator


@dataclass(frozen=True)
class SynthSpec:
    n_categories: int = 19
    models_per_category: int = 20
    views_per_model: int = 42
    queries_per_category: int = 3
    canvas_side: float = float(DEFAULT_CANVAS)
    model_jitter_px: float = 4.0
    view_jitter_px: float = 3.0
    view_rotation_deg: float = 4.0
    query_jitter_px: float = 8.0
    scale_range: tuple[float, float] = (0.9, 1.1)
    scrambled_distractors: bool = False
    seed: int = 0


def _rect_polyline(cx, cy, w, h):
    x0, y0, x1, y1 = cx - w / 2, cy - h / 2, cx + w / 2, cy + h / 2
    return np.array([[x0, y0], [x1, y0], [x1, y1], [x0, y1], [x0, y0]])


def _ellipse_polyline(cx, cy, w, h, n=24):
    t = np.linspace(0, 2 * math.pi, n + 1)
    return np.column_stack([cx + (w / 2) * np.cos(t), cy + (h / 2) * np.sin(t)])


@dataclass(frozen=True)
class PartTemplate:
    shape: str  # rect | ellipse
    cx: float
    cy: float
    w: float
    h: float

    def polyline(self) -> np.ndarray:
        if self.shape == "rect":
            return _rect_polyline(self.cx, self.cy, self.w, self.h)
        return _ellipse_polyline(self.cx, self.cy, self.w, self.h)


def _category_template(rng: np.random.Generator, canvas: float) -> list[PartTemplate]:
    """3-6 primitive parts placed in distinct cells of the 3x3 canvas grid."""
    cell = canvas / 3.0
    n_parts = int(rng.integers(3, 7))
    cells = rng.choice(9, size=n_parts, replace=False)
    parts = []
    for c in cells:
        ci, cj = int(c) % 3, int(c) // 3
        cx = (ci + 0.5) * cell + rng.uniform(-0.1, 0.1) * cell
        cy = (cj + 0.5) * cell + rng.uniform(-0.1, 0.1) * cell
        # parts stay well inside their cell so local windows (canvas/4) see
        # one part at a time and pyramid cells capture whole parts; the size
        # spread keeps parts visually distinct so permuting them actually
        # changes the arrangement
        w = rng.uniform(0.3, 0.5) * cell
        h = rng.uniform(0.3, 0.5) * cell
        shape = "rect" if rng.random() < 0.5 else "ellipse"
        parts.append(PartTemplate(shape, cx, cy, w, h))
    return parts


def _instantiate(
    template: list[PartTemplate],
    rng: np.random.Generator,
    jitter: float,
    scale_range,
    rotation_deg: float,
    canvas: float,
) -> list[SemanticPart]:
    parts = []
    # fixed magnitude, random sign: every view is a genuinely off-pose look
    # rather than occasionally reproducing the canonical pose
    theta = math.radians(rotation_deg) * rng.choice((-1.0, 1.0)) if rotation_deg else 0.0
    c, s = math.cos(theta), math.sin(theta)
    center = np.array([canvas / 2, canvas / 2])
    for i, pt in enumerate(template):
        sc = rng.uniform(*scale_range)
        dx, dy = rng.normal(0, jitter, size=2)
        poly = pt.polyline()
        ctr = np.array([pt.cx, pt.cy])
        poly = (poly - ctr) * sc + ctr + np.array([dx, dy])
        if theta:
            rel = poly - center
            poly = np.column_stack(
                [rel[:, 0] * c - rel[:, 1] * s, rel[:, 0] * s + rel[:, 1] * c]
            ) + center
        poly = np.clip(poly, 0.0, canvas)
        parts.append(SemanticPart(i, (Stroke(0, poly),)))
    return parts


def _scramble(template: list[PartTemplate], rng: np.random.Generator) -> list[PartTemplate]:
    """Permute part centers while keeping each part's local geometry."""
    n = len(template)
    perm = rng.permutation(n)
    if np.array_equal(perm, np.arange(n)):
        perm = np.roll(perm, 1)
    centers = [(template[int(j)].cx, template[int(j)].cy) for j in perm]
    return [
        PartTemplate(p.shape, cx, cy, p.w, p.h)
        for p, (cx, cy) in zip(template, centers)
    ]


@dataclass(frozen=True)
class SynthDataset:
    view_docs: tuple[SegmentedSketch, ...]
    query_docs: tuple[SegmentedSketch, ...]


def _model_template(
    template: list[PartTemplate], spec: SynthSpec, ci: int, mi: int
) -> list[PartTemplate]:
    """Model mi of category ci: the category template with its own fixed
    per-part offsets and scales, reproducible from the spec seed alone."""
    rng = np.random.default_rng(spec.seed * 100003 + ci * 1009 + mi)
    return [
        PartTemplate(
            p.shape,
            p.cx + rng.normal(0, spec.model_jitter_px),
            p.cy + rng.normal(0, spec.model_jitter_px),
            p.w * rng.uniform(*spec.scale_range),
            p.h * rng.uniform(*spec.scale_range),
        )
        for p in template
    ]


def generate_synthetic(spec: SynthSpec) -> SynthDataset:
    """Deterministic desk-scale dataset of part-arranged primitive shapes.

    Each category is a fixed arrangement of parts; models jitter the
    arrangement, views add more jitter plus a small rotation, queries use
    heavier jitter. Optional scrambled distractors reuse a category's part
    shapes at permuted positions (locally similar, globally different).
    """
    rng = np.random.default_rng(spec.seed)
    canvas = spec.canvas_side
    views, queries = [], []
    for ci in range(spec.n_categories):
        cat = f"cat{ci:02d}"
        template = _category_template(rng, canvas)
        for mi in range(spec.models_per_category):
            model_id = f"{cat}_m{mi:02d}"
            model_rng = np.random.default_rng(spec.seed * 100003 + ci * 1009 + mi + 7000017)
            model_template = _model_template(template, spec, ci, mi)
            for vi in range(spec.views_per_model):
                parts = _instantiate(
                    model_template,
                    model_rng,
                    spec.view_jitter_px,
                    (1.0, 1.0),
                    spec.view_rotation_deg,
                    canvas,
                )
                views.append(
                    SegmentedSketch(
                        parts=tuple(parts),
                        canvas_side=canvas,
                        category=cat,
                        model_id=model_id,
                        view_id=vi,
                        provenance="model_view",
                    )
                )
            if spec.scrambled_distractors:
                # distractors keep each part's local geometry (same shapes,
                # same view jitter process, but never rotated) while permuting
                # part placement: locally excellent, globally wrong matches
                scr_template = _scramble(model_template, model_rng)
                for vi in range(spec.views_per_model):
                    parts = _instantiate(
                        scr_template,
                        model_rng,
                        spec.view_jitter_px,
                        (1.0, 1.0),
                        0.0,
                        canvas,
                    )
                    views.append(
                        SegmentedSketch(
                            parts=tuple(parts),
                            canvas_side=canvas,
                            category=f"{cat}__scrambled",
                            model_id=f"{model_id}__scrambled",
                            view_id=vi,
                            provenance="model_view",
                        )
                    )
        for qi in range(spec.queries_per_category):
            # each query imitates one concrete model (round-robin over the
            # category's models) so it has a definite ground-truth target
            mi = qi % spec.models_per_category
            q_rng = np.random.default_rng(spec.seed * 999983 + ci * 7919 + qi)
            q_template = _model_template(template, spec, ci, mi)
            parts = _instantiate(
                q_template,
                q_rng,
                spec.query_jitter_px,
                spec.scale_range,
                0.0,
                canvas,
            )
            queries.append(
                SegmentedSketch(
                    parts=tuple(parts),
                    canvas_side=canvas,
                    category=cat,
                    model_id=f"{cat}_m{mi:02d}",
                    provenance="query",
                )
            )
    return SynthDataset(view_docs=tuple(views), query_docs=tuple(queries))


def drop_parts(
    sketch: SegmentedSketch, drop_fraction: float, rng: np.random.Generator
) -> SegmentedSketch:
    """Remove a fraction of parts (at least one kept) for partial queries."""
    n = len(sketch.parts)
    n_drop = min(n - 1, max(1, int(round(drop_fraction * n))))
    drop = set(rng.choice(n, size=n_drop, replace=False).tolist())
    kept = tuple(p for i, p in enumerate(sketch.parts) if i not in drop)
    return SegmentedSketch(
        parts=kept,
        canvas_side=sketch.canvas_side,
        category=sketch.category,
        model_id=sketch.model_id,
        view_id=sketch.view_id,
        provenance=sketch.provenance,
    )
