"""Retrieval metrics (PR, TO, FT, mAP) and the experiment harness."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .baselines import (
    BowVocabulary,
    extract_bow,
    extract_gf,
    local_descriptors,
    train_vocab,
)
from .errors import MissingCategory
from .features import ExtractionParams, VARIANTS
from .geometry import RawInput, SegmentedSketch, normalize, strokes_as_parts
from .index_store import RetrievalIndex, SynthSpec, build_index, drop_parts, generate_synthetic
from .matching import knn
from .regions import build_layout

RECALL_GRID = np.linspace(0.0, 1.0, 101)


@dataclass(frozen=True)
class QueryRanking:
    query_category: str
    # ranked best-first over models: (model_id, category)
    ranked: tuple[tuple[str, str], ...]


@dataclass
class EvalReport:
    method: str
    scheme: str
    to: float
    ft: float
    map: float
    pr_curve: list[tuple[float, float]]  # (recall, precision)

    def summary(self) -> dict:
        return {
            "method": self.method,
            "scheme": self.scheme,
            "TO": self.to,
            "FT": self.ft,
            "mAP": self.map,
        }


def average_precision(relevance: list[bool]) -> float:
    """AP over a full ranking: mean precision at each relevant hit."""
    n_rel = sum(relevance)
    if n_rel == 0:
        return 0.0
    hits = 0
    total = 0.0
    for rank, rel in enumerate(relevance, start=1):
        if rel:
            hits += 1
            total += hits / rank
    return total / n_rel


def _interp_precision(relevance: list[bool]) -> np.ndarray:
    """Interpolated precision of one ranking at the fixed recall grid."""
    n_rel = sum(relevance)
    if n_rel == 0:
        return np.zeros_like(RECALL_GRID)
    hits = 0
    recalls, precisions = [], []
    for rank, rel in enumerate(relevance, start=1):
        if rel:
            hits += 1
            recalls.append(hits / n_rel)
            precisions.append(hits / rank)
    recalls = np.array(recalls)
    precisions = np.array(precisions)
    out = np.zeros_like(RECALL_GRID)
    for i, r in enumerate(RECALL_GRID):
        mask = recalls >= r - 1e-12
        out[i] = precisions[mask].max() if mask.any() else 0.0
    return out


def compute_metrics(
    rankings: list[QueryRanking], method: str = "", scheme: str = ""
) -> EvalReport:
    if not rankings:
        raise ValueError("no rankings to evaluate")
    tos, fts, aps = [], [], []
    pr = np.zeros_like(RECALL_GRID)
    for qr in rankings:
        relevance = [cat == qr.query_category for _, cat in qr.ranked]
        n_rel = sum(relevance)
        if n_rel == 0:
            raise MissingCategory(
                f"query category {qr.query_category!r} has no relevant models"
            )
        tos.append(1.0 if relevance[0] else 0.0)
        fts.append(sum(relevance[:n_rel]) / n_rel)
        aps.append(average_precision(relevance))
        pr += _interp_precision(relevance)
    pr /= len(rankings)
    return EvalReport(
        method=method,
        scheme=scheme,
        to=float(np.mean(tos)),
        ft=float(np.mean(fts)),
        map=float(np.mean(aps)),
        pr_curve=[(float(r), float(p)) for r, p in zip(RECALL_GRID, pr)],
    )


# ---------------------------------------------------------------------------
# ranking helpers


def rank_with_index(
    index: RetrievalIndex,
    query_feature,
    mode: str = "full",
) -> QueryRanking | list[tuple[str, str]]:
    n_models = len({r.model_id for r in index.records})
    results = knn(query_feature, index, k=n_models, mode=mode)
    cat_of = {r.model_id: r.category for r in index.records}
    return [(r.model_id, cat_of[r.model_id]) for r in results]


def rank_with_vectors(
    view_vecs: list[tuple[str, str, np.ndarray]],  # (model_id, category, vec)
    query_vec: np.ndarray,
) -> list[tuple[str, str]]:
    best: dict[str, float] = {}
    cat_of: dict[str, str] = {}
    for model_id, cat, vec in view_vecs:
        d = float(np.linalg.norm(query_vec - vec))
        if model_id not in best or d < best[model_id]:
            best[model_id] = d
        cat_of[model_id] = cat
    order = sorted(best.items(), key=lambda kv: (kv[1], kv[0]))
    return [(mid, cat_of[mid]) for mid, _ in order]


# ---------------------------------------------------------------------------
# experiment harness


@dataclass
class ExperimentConfig:
    methods: tuple[str, ...] = ("FULL", "BOW", "GF")
    schemes: tuple[str, ...] = ("6R_O",)
    mode: str = "full"  # full | incomplete
    synth: SynthSpec = field(default_factory=SynthSpec)
    params: ExtractionParams = field(default_factory=ExtractionParams)
    drop_fraction_range: tuple[float, float] = (0.3, 0.6)
    bow_k: int = 50
    bow_train_views: int = 40
    bow_train_samples_per_view: int = 60
    seed: int = 0

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        cfg = cls()
        if "methods" in d:
            cfg.methods = tuple(d["methods"])
        if "schemes" in d:
            cfg.schemes = tuple(d["schemes"])
        if "mode" in d:
            cfg.mode = d["mode"]
        if "seed" in d:
            cfg.seed = int(d["seed"])
        if "synth" in d:
            cfg.synth = SynthSpec(**d["synth"])
        if "bow_k" in d:
            cfg.bow_k = int(d["bow_k"])
        if "drop_fraction_range" in d:
            cfg.drop_fraction_range = tuple(d["drop_fraction_range"])
        return cfg


def _query_to_raw(sketch: SegmentedSketch) -> RawInput:
    return RawInput(sketch_strokes=tuple(sketch.all_strokes()))


def prepare_queries(
    query_docs,
    mode: str,
    drop_fraction_range,
    rng: np.random.Generator,
) -> list[SegmentedSketch]:
    """Normalize queries; in incomplete mode, drop parts first and keep the
    original canvas frame as the user bounding box."""
    out = []
    for q in query_docs:
        if mode == "incomplete":
            frac = rng.uniform(*drop_fraction_range)
            partial = drop_parts(q, frac, rng)
            bbox = (0.0, 0.0, q.canvas_side, q.canvas_side)
            out.append(normalize(partial, mode="incomplete", user_bbox=bbox))
        else:
            out.append(normalize(q))
    return out


def _train_bow_vocab(view_docs, cfg: ExperimentConfig) -> BowVocabulary:
    rng = np.random.default_rng(cfg.seed)
    n = min(cfg.bow_train_views, len(view_docs))
    pick = rng.choice(len(view_docs), size=n, replace=False)
    samples = []
    for i in pick:
        descs = local_descriptors(
            normalize(view_docs[int(i)]),
            cfg.params.gabor,
            n_samples=cfg.bow_train_samples_per_view,
        )
        samples.append(descs)
    return train_vocab(np.vstack(samples), k=cfg.bow_k, seed=cfg.seed)


def run_experiment(cfg: ExperimentConfig, out_dir: str | Path | None = None) -> list[EvalReport]:
    """Build indices per method/scheme, rank every query, report metrics."""
    data = generate_synthetic(cfg.synth)
    rng = np.random.default_rng(cfg.seed + 1)
    queries = prepare_queries(data.query_docs, cfg.mode, cfg.drop_fraction_range, rng)
    dist_mode = "incomplete" if cfg.mode == "incomplete" else "full"

    vocab = _train_bow_vocab(data.view_docs, cfg) if "BOW" in cfg.methods else None

    reports = []
    for method in cfg.methods:
        schemes = cfg.schemes if method in ("FULL", "NOG", "PIX", "STK") else ("-",)
        for scheme in schemes:
            rankings = []
            if method in ("FULL", "NOG", "PIX"):
                index = build_index(data.view_docs, scheme, method, cfg.params)
                layout = build_layout(scheme, cfg.synth.canvas_side)
                extractor = VARIANTS[method]
                for q, qdoc in zip(queries, data.query_docs):
                    feat = extractor(q, layout, cfg.params)
                    ranked = rank_with_index(index, feat, mode=dist_mode)
                    rankings.append(QueryRanking(qdoc.category, tuple(ranked)))
            elif method == "STK":
                index = build_index(data.view_docs, scheme, "FULL", cfg.params)
                layout = build_layout(scheme, cfg.synth.canvas_side)
                for q, qdoc in zip(queries, data.query_docs):
                    stk = strokes_as_parts(_query_to_raw(q), canvas_side=q.canvas_side)
                    feat = VARIANTS["FULL"](stk, layout, cfg.params)
                    ranked = rank_with_index(index, feat, mode=dist_mode)
                    rankings.append(QueryRanking(qdoc.category, tuple(ranked)))
            elif method == "GF":
                vecs = [
                    (d.model_id, d.category, extract_gf(normalize(d), cfg.params.gabor))
                    for d in data.view_docs
                ]
                for q, qdoc in zip(queries, data.query_docs):
                    ranked = rank_with_vectors(vecs, extract_gf(q, cfg.params.gabor))
                    rankings.append(QueryRanking(qdoc.category, tuple(ranked)))
            elif method == "BOW":
                vecs = [
                    (
                        d.model_id,
                        d.category,
                        extract_bow(normalize(d), vocab, cfg.params.gabor),
                    )
                    for d in data.view_docs
                ]
                for q, qdoc in zip(queries, data.query_docs):
                    ranked = rank_with_vectors(
                        vecs, extract_bow(q, vocab, cfg.params.gabor)
                    )
                    rankings.append(QueryRanking(qdoc.category, tuple(ranked)))
            else:
                raise ValueError(f"unknown method {method!r}")
            label = method if scheme == "-" else f"{method}_{scheme}"
            reports.append(compute_metrics(rankings, method=label, scheme=scheme))

    if out_dir is not None:
        write_reports(reports, out_dir)
    return reports


def write_reports(reports: list[EvalReport], out_dir: str | Path) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "report.json", "w") as fh:
        json.dump(
            [{**r.summary(), "pr_curve": r.pr_curve} for r in reports], fh, indent=2
        )
    with open(out / "summary.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["method", "TO", "FT", "mAP"])
        for r in reports:
            w.writerow([r.method, f"{r.to:.6f}", f"{r.ft:.6f}", f"{r.map:.6f}"])
    for r in reports:
        with open(out / f"pr_curve_{r.method}.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["recall", "precision"])
            for rec, prec in r.pr_curve:
                w.writerow([f"{rec:.4f}", f"{prec:.6f}"])
