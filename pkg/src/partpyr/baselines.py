"""Comparison methods: GF (global Gabor feature) and BOW (bag of visual
words over local Gabor descriptors), sharing the engine's filter bank."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import fftconvolve

from .errors import EmptyInput, InsufficientData, VocabMissing
from .features import rasterize_canvas
from .gaborbank import (
    DEFAULT_RASTER_SIDE,
    GaborParams,
    _cached_bank,
    image_block,
    pool_grid,
    rasterize_group,
)
from .geometry import SegmentedSketch

GF_GRID = 6
BOW_GRID = 4
DEFAULT_N_SAMPLES = 500
DEFAULT_K = 50


def extract_gf(
    sketch: SegmentedSketch,
    params: GaborParams = GaborParams(),
    raster_side: int = DEFAULT_RASTER_SIDE,
) -> np.ndarray:
    """Whole sketch as a single group, pooled on the 6x6 top-level grid."""
    if not sketch.parts:
        raise EmptyInput("empty sketch")
    img = rasterize_group(list(sketch.parts), raster_side)
    return image_block(img.pixels, params, GF_GRID)


# ---------------------------------------------------------------------------
# local descriptor sampling


def sample_points(sketch: SegmentedSketch, n_samples: int) -> np.ndarray:
    """n points spaced uniformly along the sketch's total arc length."""
    segs = []
    for stroke in sketch.all_strokes():
        pts = stroke.points
        d = np.linalg.norm(np.diff(pts, axis=0), axis=1)
        segs.append((pts, d))
    total = sum(d.sum() for _, d in segs)
    if total == 0:
        raise EmptyInput("sketch has zero stroke length")
    targets = (np.arange(n_samples) + 0.5) / n_samples * total
    out = np.empty((n_samples, 2))
    acc = 0.0
    ti = 0
    for pts, d in segs:
        for i, seg_len in enumerate(d):
            while ti < n_samples and targets[ti] <= acc + seg_len:
                t = (targets[ti] - acc) / seg_len if seg_len > 0 else 0.0
                out[ti] = pts[i] * (1 - t) + pts[i + 1] * t
                ti += 1
            acc += seg_len
    while ti < n_samples:  # float slack at the very end
        out[ti] = segs[-1][0][-1]
        ti += 1
    return out


def local_descriptors(
    sketch: SegmentedSketch,
    params: GaborParams = GaborParams(),
    n_samples: int = DEFAULT_N_SAMPLES,
    window_fraction: float = 0.25,
) -> np.ndarray:
    """Local Gabor blocks around points sampled along the strokes.

    The whole canvas raster is convolved once per orientation; each sample
    pools its window from the shared response maps (4x4 grid, length 96).
    """
    canvas = rasterize_canvas(sketch)
    side = canvas.shape[0]
    win = int(round(window_fraction * side))
    half = win // 2
    img = canvas.astype(np.float64)
    responses = [
        np.abs(fftconvolve(img, kern, mode="same")) for kern in _cached_bank(params)
    ]
    pad = [np.pad(r, half) for r in responses]
    pts = sample_points(sketch, n_samples) * (side / sketch.canvas_side)
    descs = np.empty((n_samples, BOW_GRID * BOW_GRID * len(responses)))
    for i, (px, py) in enumerate(pts):
        cx = int(np.clip(round(px), 0, side - 1)) + half
        cy = int(np.clip(round(py), 0, side - 1)) + half
        vec = np.concatenate(
            [
                pool_grid(r[cy - half : cy + half, cx - half : cx + half], BOW_GRID)
                for r in pad
            ]
        )
        n = np.linalg.norm(vec)
        descs[i] = vec / n if n > 0 else vec
    return descs


# ---------------------------------------------------------------------------
# vocabulary


@dataclass(frozen=True)
class BowVocabulary:
    centroids: np.ndarray  # (k, d)
    inertia_history: tuple[float, ...]
    seed: int

    @property
    def k(self) -> int:
        return len(self.centroids)


def _kmeanspp_init(data: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = len(data)
    centers = [data[rng.integers(n)]]
    d2 = np.full(n, np.inf)
    for _ in range(k - 1):
        d2 = np.minimum(d2, ((data - centers[-1]) ** 2).sum(axis=1))
        total = d2.sum()
        if total == 0:
            centers.append(data[rng.integers(n)])
            continue
        centers.append(data[rng.choice(n, p=d2 / total)])
    return np.array(centers)


def train_vocab(
    local_features: np.ndarray,
    k: int = DEFAULT_K,
    seed: int = 0,
    max_iter: int = 100,
    tol: float = 1e-4,
) -> BowVocabulary:
    """Lloyd's k-means with k-means++ seeding, deterministic for a seed."""
    data = np.asarray(local_features, dtype=np.float64)
    if len(data) < k:
        raise InsufficientData(f"need >= {k} samples, got {len(data)}")
    rng = np.random.default_rng(seed)
    centers = _kmeanspp_init(data, k, rng)
    history = []
    prev = None
    for _ in range(max_iter):
        d2 = ((data[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        labels = d2.argmin(axis=1)
        inertia = float(d2[np.arange(len(data)), labels].sum())
        history.append(inertia)
        for j in range(k):
            mask = labels == j
            if mask.any():
                centers[j] = data[mask].mean(axis=0)
        if prev is not None and prev > 0 and (prev - inertia) / prev < tol:
            break
        prev = inertia
    return BowVocabulary(centroids=centers, inertia_history=tuple(history), seed=seed)


def extract_bow(
    sketch: SegmentedSketch,
    vocab: BowVocabulary | None,
    params: GaborParams = GaborParams(),
    n_samples: int = DEFAULT_N_SAMPLES,
) -> np.ndarray:
    """L1-normalized histogram of nearest-codeword counts."""
    if vocab is None:
        raise VocabMissing("BOW requires a trained vocabulary")
    descs = local_descriptors(sketch, params, n_samples)
    d2 = ((descs[:, None, :] - vocab.centroids[None, :, :]) ** 2).sum(axis=2)
    labels = d2.argmin(axis=1)
    hist = np.bincount(labels, minlength=vocab.k).astype(np.float64)
    return hist / hist.sum()


def save_vocab(vocab: BowVocabulary, base) -> None:
    import json

    meta = {
        "k": vocab.k,
        "dim": int(vocab.centroids.shape[1]),
        "seed": vocab.seed,
        "inertia_history": list(vocab.inertia_history),
    }
    with open(f"{base}.meta.json", "w") as fh:
        json.dump(meta, fh, sort_keys=True)
    vocab.centroids.astype("<f4").tofile(f"{base}.f32")


def load_vocab(base) -> BowVocabulary:
    import json

    meta = json.load(open(f"{base}.meta.json"))
    centroids = np.fromfile(f"{base}.f32", dtype="<f4").astype(np.float64)
    centroids = centroids.reshape(meta["k"], meta["dim"])
    return BowVocabulary(
        centroids=centroids,
        inertia_history=tuple(meta["inertia_history"]),
        seed=meta["seed"],
    )
