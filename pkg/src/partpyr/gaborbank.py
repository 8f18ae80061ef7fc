"""Gabor filter bank and grid-pooled feature blocks for part groups.

A group of parts is rendered into a binary bounding-square raster, convolved
with a 6-orientation Gabor bank, and each response magnitude is averaged over
a coarse grid; the per-orientation grids concatenate into one block.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import cv2
import numpy as np
from scipy.signal import fftconvolve

from .errors import EmptyGroup
from .geometry import SemanticPart

DEFAULT_RASTER_SIDE = 128
RASTER_MARGIN = 4
STROKE_WIDTH = 2

ORIENTATIONS = tuple(k * math.pi / 6 for k in (0, 1, 2, 3, 4, 5))


@dataclass(frozen=True)
class GaborParams:
    omega0: float = 0.1
    sigma_x: float = 3.0
    sigma_y: float = 9.0
    orientations: tuple[float, ...] = ORIENTATIONS

    def fingerprint(self) -> dict:
        return {
            "omega0": self.omega0,
            "sigma_x": self.sigma_x,
            "sigma_y": self.sigma_y,
            "orientations": list(self.orientations),
        }


@dataclass(frozen=True)
class GroupImage:
    pixels: np.ndarray  # square uint8 raster, values {0, 1}
    source_bbox: tuple[float, float, float, float]


def gabor_kernel(theta: float, params: GaborParams) -> np.ndarray:
    """Spatial Gabor kernel: oriented Gaussian envelope times a cosine
    carrier along the rotated x-axis, DC-removed."""
    half = int(math.ceil(4 * max(params.sigma_x, params.sigma_y)))
    ax = np.arange(-half, half + 1, dtype=np.float64)
    x, y = np.meshgrid(ax, ax)
    xr = x * math.cos(theta) + y * math.sin(theta)
    yr = -x * math.sin(theta) + y * math.cos(theta)
    env = np.exp(-(xr**2 / (2 * params.sigma_x**2) + yr**2 / (2 * params.sigma_y**2)))
    k = env * np.cos(2 * math.pi * params.omega0 * xr)
    return k - k.mean()


def filter_bank(params: GaborParams) -> list[np.ndarray]:
    return [gabor_kernel(t, params) for t in params.orientations]


@lru_cache(maxsize=8)
def _cached_bank(params: GaborParams) -> tuple[np.ndarray, ...]:
    return tuple(filter_bank(params))


def group_bbox(parts: Sequence[SemanticPart]) -> tuple[float, float, float, float]:
    boxes = [p.bbox() for p in parts]
    return (
        min(b[0] for b in boxes),
        min(b[1] for b in boxes),
        max(b[2] for b in boxes),
        max(b[3] for b in boxes),
    )


def rasterize_group(
    parts: Sequence[SemanticPart], raster_side: int = DEFAULT_RASTER_SIDE
) -> GroupImage:
    """Draw the group's strokes into a binary bounding-square raster.

    The union bbox is expanded to a square around its center, then mapped to
    the raster minus a fixed margin, so the result depends only on geometry
    relative to the group (translation-invariant).
    """
    if not parts:
        raise EmptyGroup("cannot rasterize an empty group")
    if raster_side < 16:
        raise ValueError("raster_side must be >= 16")
    x0, y0, x1, y1 = group_bbox(parts)
    side = max(x1 - x0, y1 - y0)
    cx, cy = (x0 + x1) / 2.0, (y0 + y1) / 2.0
    inner = raster_side - 2 * RASTER_MARGIN
    if side == 0.0:
        scale = 1.0  # point-like group: draw at center
    else:
        scale = inner / side
    img = np.zeros((raster_side, raster_side), dtype=np.uint8)
    half = raster_side / 2.0
    for part in parts:
        for stroke in part.strokes:
            pts = (stroke.points - np.array([cx, cy])) * scale + half
            ipts = np.round(pts).astype(np.int32)
            cv2.polylines(img, [ipts], isClosed=False, color=1, thickness=STROKE_WIDTH)
    return GroupImage(pixels=img, source_bbox=(x0, y0, x1, y1))


def block_length(grid: int, params: GaborParams) -> int:
    return grid * grid * len(params.orientations)


def pool_grid(response: np.ndarray, grid: int) -> np.ndarray:
    """Average |response| over a grid x grid uniform partition."""
    side = response.shape[0]
    edges = np.linspace(0, side, grid + 1).round().astype(int)
    out = np.empty(grid * grid, dtype=np.float64)
    k = 0
    for gy in range(grid):
        for gx in range(grid):
            cell = response[edges[gy] : edges[gy + 1], edges[gx] : edges[gx + 1]]
            out[k] = np.abs(cell).mean()
            k += 1
    return out


def image_block(
    pixels: np.ndarray,
    params: GaborParams,
    grid: int,
    normalize: bool = True,
) -> np.ndarray:
    """Gabor-convolve a raster and pool into a grid^2 * n_orientations block."""
    img = pixels.astype(np.float64)
    vals = []
    for kernel in _cached_bank(params):
        resp = fftconvolve(img, kernel, mode="same")
        vals.append(pool_grid(resp, grid))
    block = np.concatenate(vals)
    if normalize:
        n = np.linalg.norm(block)
        if n > 0:
            block = block / n
    return block


def region_feature(
    image: GroupImage | None,
    params: GaborParams,
    grid: int,
    normalize: bool = True,
) -> np.ndarray:
    """Feature block for one region; empty regions yield an all-zero block."""
    if image is None:
        return np.zeros(block_length(grid, params), dtype=np.float64)
    return image_block(image.pixels, params, grid, normalize=normalize)
