"""Region-layout schemes and part-to-region assignment.

A layout is a fixed set of possibly-overlapping rectangles over the canvas,
organized in scale levels. Parts are assigned to regions by the likelihood
p = W_s * W_l (size penalty times inclusion ratio), thresholded at 0.5, and
each populated region gets a length-weighted reliability score.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import UnknownScheme
from .geometry import SegmentedSketch, SemanticPart, clip_length

SCHEMES = ("4R_NO", "4R_O", "6R_O", "4LV", "2LV")
DEFAULT_SCHEME = "6R_O"

ASSIGN_THRESHOLD = 0.5
DEFAULT_BETA = 0.85
DEFAULT_SIGMA_FRACTION = 0.3


@dataclass(frozen=True)
class Region:
    id: int
    level: float  # 1 = finest; 2.5 = the extra 4LV level
    rect: tuple[float, float, float, float]
    importance: float
    grid: int

    @property
    def longer_side(self) -> float:
        x0, y0, x1, y1 = self.rect
        return max(x1 - x0, y1 - y0)


@dataclass(frozen=True)
class RegionLayout:
    scheme: str
    canvas_side: float
    regions: tuple[Region, ...]

    @property
    def top_region_index(self) -> int:
        # the single full-canvas region is always last
        return len(self.regions) - 1

    def describe(self) -> list[dict]:
        return [
            {
                "id": r.id,
                "level": r.level,
                "rect": list(r.rect),
                "m": r.importance,
                "grid": r.grid,
            }
            for r in self.regions
        ]


def build_layout(scheme: str, canvas_side: float = 320.0) -> RegionLayout:
    """Deterministic region geometry for one of the named schemes.

    L = canvas/3. Level 1 is always the 3x3 grid of LxL cells; level 3 the
    full canvas. Level-2 composition and the extra 4LV level vary by scheme.
    """
    if scheme not in SCHEMES:
        raise UnknownScheme(f"unknown scheme {scheme!r}; expected one of {SCHEMES}")
    L = canvas_side / 3.0
    area_unit = L * L
    rects: list[tuple[float, tuple, int]] = []  # (level, rect, grid)

    for j in range(3):
        for i in range(3):
            rects.append((1, (i * L, j * L, (i + 1) * L, (j + 1) * L), 2))

    if scheme in ("4R_O", "6R_O"):
        for oy in (0.0, L):
            for ox in (0.0, L):
                rects.append((2, (ox, oy, ox + 2 * L, oy + 2 * L), 4))
        if scheme == "6R_O":
            for ox in (0.0, L):
                rects.append((2, (ox, L / 2, ox + 2 * L, L / 2 + 2 * L), 4))
    elif scheme in ("4R_NO", "4LV"):
        for oy in (0.0, 1.5 * L):
            for ox in (0.0, 1.5 * L):
                rects.append((2, (ox, oy, ox + 1.5 * L, oy + 1.5 * L), 4))
    # 2LV: no level 2 at all

    if scheme == "4LV":
        for oy in (0.0, L):
            rects.append((2.5, (0.0, oy, 3 * L, oy + 2 * L), 5))
        for ox in (0.0, L):
            rects.append((2.5, (ox, 0.0, ox + 2 * L, 3 * L), 5))

    rects.append((3, (0.0, 0.0, 3 * L, 3 * L), 6))

    regions = []
    for rid, (level, rect, grid) in enumerate(rects):
        area = (rect[2] - rect[0]) * (rect[3] - rect[1])
        m = round(area / area_unit, 10)
        regions.append(Region(id=rid, level=level, rect=rect, importance=m, grid=grid))
    return RegionLayout(scheme=scheme, canvas_side=canvas_side, regions=tuple(regions))


def size_penalty(size: float, region_longer_side: float, beta: float, sigma: float) -> float:
    """W_s: 1 while the part fits comfortably, then a shifted Gaussian falloff
    clamped to 0 once the part outgrows the region."""
    knee = beta * region_longer_side
    if size <= knee:
        return 1.0
    v = 1.1 * math.exp(-((size - knee) ** 2) / (sigma**2)) - 0.1
    return max(0.0, v)


def inclusion_weight(part: SemanticPart, rect) -> float:
    """W_l: fraction of the part's total stroke length lying inside rect."""
    total = part.total_length
    inside = sum(clip_length(s, rect) for s in part.strokes)
    return inside / total


def assignment_likelihood(
    part: SemanticPart,
    region: Region,
    beta: float = DEFAULT_BETA,
    sigma_fraction: float = DEFAULT_SIGMA_FRACTION,
) -> float:
    sigma = sigma_fraction * region.longer_side
    return size_penalty(part.size, region.longer_side, beta, sigma) * inclusion_weight(
        part, region.rect
    )


@dataclass(frozen=True)
class Assignment:
    part_id: int
    p: float
    fallback: bool = False


@dataclass(frozen=True)
class PartPyramid:
    layout: RegionLayout
    # per region index: tuple of Assignment
    assignments: tuple[tuple[Assignment, ...], ...]
    # per region index: reliability c(R); None for empty regions
    reliability: tuple[float | None, ...]

    def part_ids(self, region_index: int) -> list[int]:
        return [a.part_id for a in self.assignments[region_index]]


def _reliability(assigned: list[tuple[SemanticPart, Assignment]]) -> float:
    total = sum(p.total_length for p, _ in assigned)
    return sum((p.total_length / total) * a.p for p, a in assigned)


def assign(
    sketch: SegmentedSketch,
    layout: RegionLayout,
    beta: float = DEFAULT_BETA,
    sigma_fraction: float = DEFAULT_SIGMA_FRACTION,
) -> PartPyramid:
    """Assign every part to every region where p = W_s*W_l clears 0.5.

    A part that clears the threshold nowhere is force-assigned to the
    full-canvas region (flagged), so every part lands somewhere.
    """
    per_region: list[list[tuple[SemanticPart, Assignment]]] = [
        [] for _ in layout.regions
    ]
    top = layout.top_region_index
    for part in sketch.parts:
        placed = False
        p_top = 0.0
        for ri, region in enumerate(layout.regions):
            p = assignment_likelihood(part, region, beta, sigma_fraction)
            if ri == top:
                p_top = p
            if p >= ASSIGN_THRESHOLD:
                per_region[ri].append((part, Assignment(part.id, p)))
                placed = True
        if not placed:
            per_region[top].append((part, Assignment(part.id, p_top, fallback=True)))

    reliability = tuple(
        _reliability(group) if group else None for group in per_region
    )
    assignments = tuple(tuple(a for _, a in group) for group in per_region)
    return PartPyramid(layout=layout, assignments=assignments, reliability=reliability)
