"""Weighted pyramid-feature distance and K-nearest-neighbor ranking."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import EmptyIndex, EmptyQuery, SchemeMismatch
from .features import PyramidFeature
from .regions import build_layout


@dataclass(frozen=True)
class RankedResult:
    model_id: str
    best_view_id: int
    distance: float
    per_view_distances: tuple[tuple[int, float], ...] = ()


@lru_cache(maxsize=32)
def _scheme_importances(scheme: str, canvas_side: float) -> np.ndarray:
    layout = build_layout(scheme, canvas_side)
    m = np.array([r.importance for r in layout.regions], dtype=np.float64)
    m.setflags(write=False)
    return m


def _importances(feat: PyramidFeature) -> np.ndarray:
    return _scheme_importances(feat.scheme, feat.canvas_side)


def weighted_distance(
    importances: np.ndarray,
    rel_x: np.ndarray,
    rel_y: np.ndarray,
    block_distances: np.ndarray,
    include: np.ndarray | None = None,
) -> float:
    """Core weighted sum: w'_i = m_i * sqrt(cx_i * cy_i), normalized over the
    included regions, dotted with the per-region block distances."""
    m = np.asarray(importances, dtype=np.float64)
    rel = np.sqrt(np.asarray(rel_x) * np.asarray(rel_y))
    d = np.asarray(block_distances, dtype=np.float64)
    if include is not None:
        keep = np.asarray(include, dtype=bool)
        if not keep.any():
            raise EmptyQuery("no regions left to compare")
        m, rel, d = m[keep], rel[keep], d[keep]
    w = m * rel
    w = w / w.sum()
    return float(np.dot(w, d))


def distance(x: PyramidFeature, y: PyramidFeature, mode: str = "full") -> float:
    """Sum of per-region block distances, weighted by importance times the
    geometric mean of the two reliabilities, weights normalized to 1.

    Incomplete mode drops the query's (x's) empty regions before
    normalization, so a partial sketch is scored only where it has content.
    """
    if x.scheme != y.scheme or x.total_len != y.total_len:
        raise SchemeMismatch(
            f"cannot compare {x.scheme}/{x.total_len} with {y.scheme}/{y.total_len}"
        )
    m = _importances(x)
    rel = np.sqrt(x.reliability * y.reliability)
    block_d = np.array(
        [np.linalg.norm(bx - by) for bx, by in zip(x.blocks, y.blocks)]
    )
    include = ~x.empty_flags if mode == "incomplete" else None
    if include is not None and not include.any():
        raise EmptyQuery("incomplete query has no non-empty regions")
    return weighted_distance(m, x.reliability, y.reliability, block_d, include)


def pairwise_distances(
    xs: list[PyramidFeature],
    ys: list[PyramidFeature],
    mode: str = "full",
) -> np.ndarray:
    """All-pairs distance matrix, equivalent to distance() but vectorized.

    Per-region Gram products give the block L2 distances; the reliability
    weights are outer products, masked per query row in incomplete mode.
    """
    if not xs or not ys:
        raise EmptyIndex("empty feature lists")
    ref = xs[0]
    for f in list(xs) + list(ys):
        if f.scheme != ref.scheme or f.total_len != ref.total_len:
            raise SchemeMismatch("mixed schemes in pairwise_distances")
    m = _importances(ref)
    n_regions = len(m)
    sx = np.sqrt(np.array([f.reliability for f in xs]))  # (Nx, R)
    sy = np.sqrt(np.array([f.reliability for f in ys]))
    keep_x = (
        ~np.array([f.empty_flags for f in xs])
        if mode == "incomplete"
        else np.ones((len(xs), n_regions), dtype=bool)
    )
    if mode == "incomplete" and not keep_x.any(axis=1).all():
        raise EmptyQuery("an incomplete query has no non-empty regions")
    num = np.zeros((len(xs), len(ys)))
    den = np.zeros((len(xs), len(ys)))
    for r in range(n_regions):
        X = np.array([f.blocks[r] for f in xs])
        Y = np.array([f.blocks[r] for f in ys])
        nx = (X**2).sum(axis=1)
        ny = (Y**2).sum(axis=1)
        d2 = np.maximum(nx[:, None] + ny[None, :] - 2.0 * (X @ Y.T), 0.0)
        d = np.sqrt(d2)
        w = m[r] * (sx[:, r, None] * sy[None, :, r]) * keep_x[:, r, None]
        num += w * d
        den += w
    return num / den


def knn(
    query: PyramidFeature,
    index,
    k: int = 20,
    mode: str = "full",
    exclude_model_id: str | None = None,
) -> list[RankedResult]:
    """Exhaustive scan over all views; per model, keep the best view.

    Ties are broken by model_id so ranking order is deterministic.
    """
    if not index.records:
        raise EmptyIndex("index has no records")
    if k < 1:
        raise ValueError("k must be >= 1")
    per_model: dict[str, list[tuple[int, float]]] = {}
    for rec in index.records:
        if exclude_model_id is not None and rec.model_id == exclude_model_id:
            continue
        d = distance(query, rec.feature, mode=mode)
        per_model.setdefault(rec.model_id, []).append((rec.view_id, d))
    results = []
    for model_id, views in per_model.items():
        best_view, best_d = min(views, key=lambda vd: (vd[1], vd[0]))
        results.append(
            RankedResult(
                model_id=model_id,
                best_view_id=best_view,
                distance=best_d,
                per_view_distances=tuple(views),
            )
        )
    results.sort(key=lambda r: (r.distance, r.model_id))
    return results[:k]
