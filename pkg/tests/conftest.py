import numpy as np
import pytest

from partpyr.geometry import SegmentedSketch, SemanticPart, Stroke


def make_stroke(points, sid=0):
    return Stroke(sid, np.asarray(points, dtype=float))


def make_part(strokes, pid=0):
    return SemanticPart(pid, tuple(strokes))


def single_part_sketch(points, canvas=320.0, **kw):
    return SegmentedSketch(
        parts=(make_part([make_stroke(points)]),), canvas_side=canvas, **kw
    )


def random_polyline(rng, n_points=8, lo=-50.0, hi=370.0):
    return make_stroke(rng.uniform(lo, hi, size=(n_points, 2)))


def mc_clip_length_oracle(stroke, rect, n=10_000):
    """Dense-sampling estimate of arc length inside a rectangle."""
    pts = stroke.points
    seg = np.diff(pts, axis=0)
    seg_len = np.linalg.norm(seg, axis=1)
    total = seg_len.sum()
    cum = np.concatenate([[0.0], np.cumsum(seg_len)])
    t = (np.arange(n) + 0.5) / n * total
    idx = np.clip(np.searchsorted(cum, t) - 1, 0, len(seg) - 1)
    frac = np.where(seg_len[idx] > 0, (t - cum[idx]) / seg_len[idx], 0.0)
    samples = pts[idx] + seg[idx] * frac[:, None]
    x0, y0, x1, y1 = rect
    inside = (
        (samples[:, 0] >= x0)
        & (samples[:, 0] <= x1)
        & (samples[:, 1] >= y0)
        & (samples[:, 1] <= y1)
    )
    return inside.mean() * total


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
