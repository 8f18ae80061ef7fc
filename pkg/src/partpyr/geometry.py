"""Core geometric data model: strokes, semantic parts, sketches.

Covers canvas normalization, analytic polyline clipping against rectangles,
zone-based grouping of raw strokes into parts, and the JSON document format
shared by query sketches and database model views.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np
from shapely.geometry import LineString, LinearRing, Polygon

from .errors import DegenerateInput, EmptyInput, InvalidZone

DEFAULT_CANVAS = 320


def _as_points(points) -> np.ndarray:
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValueError("points must be an (N, 2) array")
    return pts


def _collapse_duplicates(pts: np.ndarray) -> np.ndarray:
    if len(pts) < 2:
        return pts
    keep = np.ones(len(pts), dtype=bool)
    keep[1:] = np.any(pts[1:] != pts[:-1], axis=1)
    return pts[keep]


@dataclass(frozen=True)
class Stroke:
    id: int
    points: np.ndarray

    def __post_init__(self):
        pts = _collapse_duplicates(_as_points(self.points))
        if len(pts) < 2:
            raise ValueError(f"stroke {self.id}: needs >= 2 distinct points")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def length(self) -> float:
        return float(np.sum(np.linalg.norm(np.diff(self.points, axis=0), axis=1)))

    def bbox(self) -> tuple[float, float, float, float]:
        mn = self.points.min(axis=0)
        mx = self.points.max(axis=0)
        return (mn[0], mn[1], mx[0], mx[1])

    def transformed(self, scale: float, tx: float, ty: float) -> "Stroke":
        return Stroke(self.id, self.points * scale + np.array([tx, ty]))


@dataclass(frozen=True)
class SemanticPart:
    id: int
    strokes: tuple[Stroke, ...]

    def __post_init__(self):
        if not self.strokes:
            raise ValueError(f"part {self.id}: needs >= 1 stroke")
        object.__setattr__(self, "strokes", tuple(self.strokes))

    def bbox(self) -> tuple[float, float, float, float]:
        boxes = [s.bbox() for s in self.strokes]
        return (
            min(b[0] for b in boxes),
            min(b[1] for b in boxes),
            max(b[2] for b in boxes),
            max(b[3] for b in boxes),
        )

    @property
    def size(self) -> float:
        """Longer side of the part's bounding box."""
        x0, y0, x1, y1 = self.bbox()
        return max(x1 - x0, y1 - y0)

    @property
    def total_length(self) -> float:
        return sum(s.length for s in self.strokes)

    def transformed(self, scale: float, tx: float, ty: float) -> "SemanticPart":
        return SemanticPart(self.id, tuple(s.transformed(scale, tx, ty) for s in self.strokes))


@dataclass(frozen=True)
class SegmentedSketch:
    parts: tuple[SemanticPart, ...]
    canvas_side: float = DEFAULT_CANVAS
    category: Optional[str] = None
    model_id: Optional[str] = None
    view_id: Optional[int] = None
    provenance: str = "query"  # query | model_view

    def __post_init__(self):
        object.__setattr__(self, "parts", tuple(self.parts))

    def bbox(self) -> tuple[float, float, float, float]:
        if not self.parts:
            raise EmptyInput("sketch has no parts")
        boxes = [p.bbox() for p in self.parts]
        return (
            min(b[0] for b in boxes),
            min(b[1] for b in boxes),
            max(b[2] for b in boxes),
            max(b[3] for b in boxes),
        )

    def all_strokes(self) -> list[Stroke]:
        return [s for p in self.parts for s in p.strokes]


@dataclass(frozen=True)
class RawInput:
    sketch_strokes: tuple[Stroke, ...]
    zone_strokes: tuple[Stroke, ...] = ()
    bbox: Optional[tuple[float, float, float, float]] = None

    def __post_init__(self):
        object.__setattr__(self, "sketch_strokes", tuple(self.sketch_strokes))
        object.__setattr__(self, "zone_strokes", tuple(self.zone_strokes))


# ---------------------------------------------------------------------------
# clipping


def segment_length_in_rect(p0, p1, rect) -> float:
    """Length of the portion of segment p0-p1 inside an axis-aligned rect.

    Liang-Barsky parametric clipping; degenerate segments contribute 0.
    """
    x0, y0, x1, y1 = rect
    d = (p1[0] - p0[0], p1[1] - p0[1])
    seg_len = (d[0] * d[0] + d[1] * d[1]) ** 0.5
    if seg_len == 0.0:
        return 0.0
    t0, t1 = 0.0, 1.0
    for p, q in (
        (-d[0], p0[0] - x0),
        (d[0], x1 - p0[0]),
        (-d[1], p0[1] - y0),
        (d[1], y1 - p0[1]),
    ):
        if p == 0.0:
            if q < 0.0:
                return 0.0
            continue
        r = q / p
        if p < 0.0:
            if r > t1:
                return 0.0
            if r > t0:
                t0 = r
        else:
            if r < t0:
                return 0.0
            if r < t1:
                t1 = r
    return (t1 - t0) * seg_len


def clip_length(stroke: Stroke, rect) -> float:
    """Total arc length of a stroke's polyline restricted to a rectangle."""
    x0, y0, x1, y1 = rect
    if x1 <= x0 or y1 <= y0:
        raise DegenerateInput("rectangle must have positive area")
    pts = stroke.points
    return sum(
        segment_length_in_rect(pts[i], pts[i + 1], rect) for i in range(len(pts) - 1)
    )


def length_in_polygon(stroke: Stroke, polygon: Polygon) -> float:
    """Arc length of the stroke inside a simple polygon (shapely overlay)."""
    line = LineString(stroke.points)
    return float(line.intersection(polygon).length)


# ---------------------------------------------------------------------------
# normalization


def normalization_transform(bbox, canvas_side: float) -> tuple[float, float, float]:
    """Uniform scale + translation mapping bbox into the canvas square.

    The longer bbox side maps onto the full canvas side; the shorter axis is
    centered. Returns (scale, tx, ty).
    """
    x0, y0, x1, y1 = bbox
    w, h = x1 - x0, y1 - y0
    longer = max(w, h)
    if longer <= 0:
        raise DegenerateInput("bounding box has zero area")
    s = canvas_side / longer
    tx = -x0 * s + (canvas_side - w * s) / 2.0 if w < h else -x0 * s
    ty = -y0 * s + (canvas_side - h * s) / 2.0 if h < w else -y0 * s
    # square bbox: both axes map exactly
    if w == h:
        tx, ty = -x0 * s, -y0 * s
    return s, tx, ty


def normalize(
    sketch: SegmentedSketch,
    mode: str = "full",
    user_bbox=None,
) -> SegmentedSketch:
    """Scale + translate the sketch so its bounding box fills the canvas.

    In incomplete mode the user-supplied bbox (defaulting to the sketch bbox)
    defines the frame instead, so partial sketches keep their position.
    """
    if not sketch.parts:
        raise EmptyInput("cannot normalize an empty sketch")
    if mode == "incomplete" and user_bbox is not None:
        x0, y0, x1, y1 = user_bbox
        if x1 <= x0 or y1 <= y0:
            raise DegenerateInput("user bbox has zero area")
        box = (x0, y0, x1, y1)
    else:
        box = sketch.bbox()
    s, tx, ty = normalization_transform(box, sketch.canvas_side)
    # snap to identity so re-normalizing an already-normalized sketch is a
    # no-op (exact idempotence despite float rounding)
    if abs(s - 1.0) < 1e-12 and abs(tx) < 1e-9 and abs(ty) < 1e-9:
        return sketch
    return SegmentedSketch(
        parts=tuple(p.transformed(s, tx, ty) for p in sketch.parts),
        canvas_side=sketch.canvas_side,
        category=sketch.category,
        model_id=sketch.model_id,
        view_id=sketch.view_id,
        provenance=sketch.provenance,
    )


# ---------------------------------------------------------------------------
# raw input -> parts


def _zone_polygon(stroke: Stroke) -> Polygon:
    ring = LinearRing(np.vstack([stroke.points, stroke.points[:1]]))
    if not ring.is_simple:
        raise InvalidZone(f"zone stroke {stroke.id} self-intersects")
    return Polygon(ring)


def zones_to_parts(raw: RawInput, canvas_side: float = DEFAULT_CANVAS) -> SegmentedSketch:
    """Group raw sketch strokes into semantic parts via closed zone curves.

    Each stroke joins the smallest-area zone containing strictly more than
    half of its arc length; strokes in no zone form the background part.
    """
    if not raw.sketch_strokes:
        raise EmptyInput("no sketch strokes")
    zones = [(zs.id, _zone_polygon(zs)) for zs in raw.zone_strokes]
    zones.sort(key=lambda z: z[1].area)  # smallest first, so nesting resolves
    groups: dict[object, list[Stroke]] = {}
    for stroke in raw.sketch_strokes:
        target = "background"
        for zid, poly in zones:
            if length_in_polygon(stroke, poly) > 0.5 * stroke.length:
                target = zid
                break
        groups.setdefault(target, []).append(stroke)

    parts = []
    next_id = 0
    for zid, _ in zones:
        if zid in groups:
            parts.append(SemanticPart(next_id, tuple(groups[zid])))
            next_id += 1
    if "background" in groups:
        parts.append(SemanticPart(next_id, tuple(groups["background"])))
    return SegmentedSketch(parts=tuple(parts), canvas_side=canvas_side)


def strokes_as_parts(raw: RawInput, canvas_side: float = DEFAULT_CANVAS) -> SegmentedSketch:
    """One part per stroke, in drawing order (the no-segmentation fallback)."""
    if not raw.sketch_strokes:
        raise EmptyInput("no sketch strokes")
    parts = tuple(
        SemanticPart(i, (s,)) for i, s in enumerate(raw.sketch_strokes)
    )
    return SegmentedSketch(parts=parts, canvas_side=canvas_side)


# ---------------------------------------------------------------------------
# document format


def sketch_to_dict(sketch: SegmentedSketch) -> dict:
    doc = {
        "canvas": sketch.canvas_side,
        "parts": [
            {"id": p.id, "strokes": [s.points.tolist() for s in p.strokes]}
            for p in sketch.parts
        ],
    }
    if sketch.category is not None:
        doc["category"] = sketch.category
    if sketch.model_id is not None:
        doc["model_id"] = sketch.model_id
    if sketch.view_id is not None:
        doc["view_id"] = sketch.view_id
    return doc


def sketch_from_dict(doc: dict, provenance: str = "query") -> SegmentedSketch:
    parts = []
    for p in doc["parts"]:
        strokes = tuple(Stroke(i, pts) for i, pts in enumerate(p["strokes"]))
        parts.append(SemanticPart(int(p["id"]), strokes))
    return SegmentedSketch(
        parts=tuple(parts),
        canvas_side=float(doc.get("canvas", DEFAULT_CANVAS)),
        category=doc.get("category"),
        model_id=doc.get("model_id"),
        view_id=doc.get("view_id"),
        provenance=provenance,
    )


def raw_input_from_dict(doc: dict) -> RawInput:
    strokes = tuple(Stroke(i, pts) for i, pts in enumerate(doc["strokes"]))
    zones = tuple(
        Stroke(i, pts) for i, pts in enumerate(doc.get("zones") or [])
    )
    bbox = tuple(doc["bbox"]) if doc.get("bbox") else None
    return RawInput(sketch_strokes=strokes, zone_strokes=zones, bbox=bbox)


def load_sketches(path) -> list[SegmentedSketch]:
    """Read sketch documents from a .json file or .jsonl lines file."""
    text = open(path).read().strip()
    if not text:
        return []
    if text.startswith("["):
        return [sketch_from_dict(d) for d in json.loads(text)]
    return [sketch_from_dict(json.loads(line)) for line in text.splitlines() if line.strip()]


def save_sketches(sketches: Iterable[SegmentedSketch], path) -> None:
    with open(path, "w") as fh:
        for sk in sketches:
            fh.write(json.dumps(sketch_to_dict(sk)) + "\n")
