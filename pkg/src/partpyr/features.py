"""Assembly of the full pyramid descriptor and its ablation variants."""

from __future__ import annotations

import base64
from dataclasses import dataclass, field, replace

import cv2
import numpy as np

from .errors import EmptyInput
from .gaborbank import (
    DEFAULT_RASTER_SIDE,
    GaborParams,
    GroupImage,
    block_length,
    image_block,
    rasterize_group,
    region_feature,
)
from .geometry import RawInput, SegmentedSketch, normalize, strokes_as_parts
from .regions import (
    DEFAULT_BETA,
    DEFAULT_SIGMA_FRACTION,
    PartPyramid,
    RegionLayout,
    assign,
    assignment_likelihood,
    build_layout,
)


@dataclass(frozen=True)
class ExtractionParams:
    gabor: GaborParams = GaborParams()
    beta: float = DEFAULT_BETA
    sigma_fraction: float = DEFAULT_SIGMA_FRACTION
    raster_side: int = DEFAULT_RASTER_SIDE
    normalize_blocks: bool = True
    empty_reliability: float = 1.0

    def fingerprint(self) -> dict:
        return {
            "gabor": self.gabor.fingerprint(),
            "beta": self.beta,
            "sigma_fraction": self.sigma_fraction,
            "raster_side": self.raster_side,
            "normalize_blocks": self.normalize_blocks,
            "empty_reliability": self.empty_reliability,
        }


@dataclass(frozen=True)
class PyramidFeature:
    scheme: str
    canvas_side: float
    blocks: tuple[np.ndarray, ...]
    reliability: np.ndarray  # per region, in [0, 1]
    empty_flags: np.ndarray  # per region, True iff block is all-zero

    @property
    def total_len(self) -> int:
        return int(sum(len(b) for b in self.blocks))

    @property
    def values(self) -> np.ndarray:
        return np.concatenate(self.blocks)


def feature_length(scheme: str, params: ExtractionParams = ExtractionParams()) -> int:
    layout = build_layout(scheme)
    return sum(block_length(r.grid, params.gabor) for r in layout.regions)


def _feature_from_groups(
    layout: RegionLayout,
    groups: list[list],
    reliability: list[float | None],
    params: ExtractionParams,
) -> PyramidFeature:
    blocks, rel, empty = [], [], []
    for region, parts in zip(layout.regions, groups):
        if parts:
            img = rasterize_group(parts, params.raster_side)
            block = region_feature(img, params.gabor, region.grid, params.normalize_blocks)
        else:
            block = region_feature(None, params.gabor, region.grid)
        blocks.append(block)
        empty.append(not parts)
        r = reliability[region.id]
        rel.append(params.empty_reliability if r is None else r)
    return PyramidFeature(
        scheme=layout.scheme,
        canvas_side=layout.canvas_side,
        blocks=tuple(blocks),
        reliability=np.array(rel, dtype=np.float64),
        empty_flags=np.array(empty, dtype=bool),
    )


def _groups_from_pyramid(sketch: SegmentedSketch, pyramid: PartPyramid) -> list[list]:
    by_id = {p.id: p for p in sketch.parts}
    return [
        [by_id[a.part_id] for a in region_assignments]
        for region_assignments in pyramid.assignments
    ]


def extract_full(
    sketch: SegmentedSketch,
    layout: RegionLayout,
    params: ExtractionParams = ExtractionParams(),
) -> PyramidFeature:
    """OUR-FULL: threshold assignment, one Gabor block per region group."""
    if not sketch.parts:
        raise EmptyInput("empty sketch")
    pyramid = assign(sketch, layout, params.beta, params.sigma_fraction)
    groups = _groups_from_pyramid(sketch, pyramid)
    return _feature_from_groups(layout, groups, list(pyramid.reliability), params)


def extract_nog(
    sketch: SegmentedSketch,
    layout: RegionLayout,
    params: ExtractionParams = ExtractionParams(),
) -> PyramidFeature:
    """OUR-NOG: each part joins only its argmax-likelihood region.

    Ties break toward the lower level, then the smaller region id.
    """
    if not sketch.parts:
        raise EmptyInput("empty sketch")
    groups: list[list] = [[] for _ in layout.regions]
    chosen: list[list[tuple]] = [[] for _ in layout.regions]
    for part in sketch.parts:
        best = None
        for region in layout.regions:
            p = assignment_likelihood(part, region, params.beta, params.sigma_fraction)
            key = (-p, region.level, region.id)
            if best is None or key < best[0]:
                best = (key, region.id, p)
        _, rid, p = best
        groups[rid].append(part)
        chosen[rid].append((part, p))
    reliability: list[float | None] = []
    for entries in chosen:
        if not entries:
            reliability.append(None)
            continue
        total = sum(p.total_length for p, _ in entries)
        reliability.append(sum((p.total_length / total) * pv for p, pv in entries))
    return _feature_from_groups(layout, groups, reliability, params)


def rasterize_canvas(sketch: SegmentedSketch, raster_side: int | None = None) -> np.ndarray:
    """Whole-canvas binary raster (canvas coordinates, no re-centering)."""
    side = int(raster_side or round(sketch.canvas_side))
    scale = side / sketch.canvas_side
    img = np.zeros((side, side), dtype=np.uint8)
    for stroke in (s for p in sketch.parts for s in p.strokes):
        pts = np.round(stroke.points * scale).astype(np.int32)
        cv2.polylines(img, [pts], isClosed=False, color=1, thickness=2)
    return img


def _resquare_patch(patch: np.ndarray, raster_side: int) -> np.ndarray:
    h, w = patch.shape
    side = max(h, w)
    sq = np.zeros((side, side), dtype=patch.dtype)
    oy, ox = (side - h) // 2, (side - w) // 2
    sq[oy : oy + h, ox : ox + w] = patch
    resized = cv2.resize(sq, (raster_side, raster_side), interpolation=cv2.INTER_NEAREST)
    return (resized > 0).astype(np.uint8)


def extract_pix(
    sketch: SegmentedSketch,
    layout: RegionLayout,
    params: ExtractionParams = ExtractionParams(),
) -> PyramidFeature:
    """OUR-PIX: segmentation discarded; each region's pixel patch is the part."""
    canvas = rasterize_canvas(sketch)
    side = canvas.shape[0]
    scale = side / layout.canvas_side
    blocks, empty = [], []
    for region in layout.regions:
        x0, y0, x1, y1 = region.rect
        patch = canvas[
            int(round(y0 * scale)) : int(round(y1 * scale)),
            int(round(x0 * scale)) : int(round(x1 * scale)),
        ]
        if patch.any():
            sq = _resquare_patch(patch, params.raster_side)
            block = image_block(sq, params.gabor, region.grid, params.normalize_blocks)
            blocks.append(block)
            empty.append(False)
        else:
            blocks.append(region_feature(None, params.gabor, region.grid))
            empty.append(True)
    return PyramidFeature(
        scheme=layout.scheme,
        canvas_side=layout.canvas_side,
        blocks=tuple(blocks),
        reliability=np.ones(len(layout.regions), dtype=np.float64),
        empty_flags=np.array(empty, dtype=bool),
    )


def extract_stk(
    raw: RawInput,
    layout: RegionLayout,
    params: ExtractionParams = ExtractionParams(),
) -> PyramidFeature:
    """OUR-STK: one part per stroke, then the full pipeline."""
    sketch = strokes_as_parts(raw, canvas_side=layout.canvas_side)
    return extract_full(normalize(sketch), layout, params)


VARIANTS = {
    "FULL": extract_full,
    "NOG": extract_nog,
    "PIX": extract_pix,
}


# ---------------------------------------------------------------------------
# serialization (JSON-lines with base64 float32 payload)


def feature_to_dict(feat: PyramidFeature, meta: dict | None = None) -> dict:
    doc = dict(meta or {})
    doc.update(
        {
            "scheme": feat.scheme,
            "canvas": feat.canvas_side,
            "reliability": feat.reliability.tolist(),
            "empty_flags": [bool(f) for f in feat.empty_flags],
            "block_lens": [len(b) for b in feat.blocks],
            "values_b64": base64.b64encode(
                feat.values.astype("<f4").tobytes()
            ).decode("ascii"),
        }
    )
    return doc


def feature_from_dict(doc: dict) -> PyramidFeature:
    flat = np.frombuffer(
        base64.b64decode(doc["values_b64"]), dtype="<f4"
    ).astype(np.float64)
    blocks, off = [], 0
    for n in doc["block_lens"]:
        blocks.append(flat[off : off + n].copy())
        off += n
    return PyramidFeature(
        scheme=doc["scheme"],
        canvas_side=float(doc["canvas"]),
        blocks=tuple(blocks),
        reliability=np.asarray(doc["reliability"], dtype=np.float64),
        empty_flags=np.asarray(doc["empty_flags"], dtype=bool),
    )
