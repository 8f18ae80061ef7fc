"""Sketch-based shape retrieval with a part-level spatial pyramid descriptor."""

from .geometry import (
    RawInput,
    SegmentedSketch,
    SemanticPart,
    Stroke,
    normalize,
    strokes_as_parts,
    zones_to_parts,
)
from .regions import build_layout
from .features import ExtractionParams, PyramidFeature, extract_full
from .matching import distance, knn
from .index_store import RetrievalIndex, build_index, generate_synthetic, load_index, save_index

__version__ = "0.1.0"
