"""Command-line surface for the retrieval engine."""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from . import evaluation
from .errors import PartPyrError
from .features import ExtractionParams, VARIANTS
from .geometry import (
    load_sketches,
    normalize,
    raw_input_from_dict,
    save_sketches,
    sketch_from_dict,
    strokes_as_parts,
    zones_to_parts,
)
from .index_store import (
    SynthSpec,
    build_index,
    generate_synthetic,
    load_index,
    save_index,
)
from .matching import knn
from .regions import SCHEMES, build_layout


def _dump(obj, pretty: bool) -> None:
    click.echo(json.dumps(obj, indent=2 if pretty else None))


@click.group()
@click.option("--scheme", default="6R_O", type=click.Choice(SCHEMES), show_default=True)
@click.option("--config", type=click.Path(exists=True), default=None)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--pretty", is_flag=True, help="Human-readable JSON output.")
@click.pass_context
def main(ctx, scheme, config, seed, pretty):
    """Part-pyramid sketch retrieval engine."""
    ctx.ensure_object(dict)
    ctx.obj.update(scheme=scheme, config=config, seed=seed, pretty=pretty)


@main.group()
def dataset():
    """Dataset generation and conversion."""


@dataset.command("synth")
@click.option("--out", required=True, type=click.Path())
@click.option("--categories", default=19, show_default=True)
@click.option("--models", default=5, show_default=True)
@click.option("--views", default=8, show_default=True)
@click.option("--queries", default=3, show_default=True)
@click.option("--scrambled", is_flag=True)
@click.pass_context
def dataset_synth(ctx, out, categories, models, views, queries, scrambled):
    """Generate a deterministic synthetic dataset."""
    spec = SynthSpec(
        n_categories=categories,
        models_per_category=models,
        views_per_model=views,
        queries_per_category=queries,
        scrambled_distractors=scrambled,
        seed=ctx.obj["seed"],
    )
    data = generate_synthetic(spec)
    base = Path(out)
    (base / "views").mkdir(parents=True, exist_ok=True)
    (base / "queries").mkdir(parents=True, exist_ok=True)
    save_sketches(data.view_docs, base / "views" / "views.jsonl")
    save_sketches(data.query_docs, base / "queries" / "queries.jsonl")
    _dump(
        {"views": len(data.view_docs), "queries": len(data.query_docs), "out": str(base)},
        ctx.obj["pretty"],
    )


@main.group("index")
def index_group():
    """Index construction and inspection."""


@index_group.command("build")
@click.option("--views", "views_path", required=True, type=click.Path(exists=True))
@click.option("--out", required=True, type=click.Path())
@click.option("--variant", default="FULL", type=click.Choice(sorted(VARIANTS)), show_default=True)
@click.pass_context
def index_build(ctx, views_path, out, variant):
    """Extract features for all view documents and persist the index."""
    docs = load_sketches(views_path)
    try:
        idx = build_index(docs, ctx.obj["scheme"], variant)
    except PartPyrError as exc:
        raise click.ClickException(str(exc))
    save_index(idx, out)
    _dump(
        {"records": len(idx.records), "scheme": idx.scheme, "out": str(out)},
        ctx.obj["pretty"],
    )


def _sketch_from_file(path, canvas_side):
    doc = json.loads(open(path).read())
    if "parts" in doc:
        return sketch_from_dict(doc), None
    raw = raw_input_from_dict(doc)
    if raw.zone_strokes:
        return zones_to_parts(raw, canvas_side), raw.bbox
    return strokes_as_parts(raw, canvas_side), raw.bbox


@main.command()
@click.option("--index", "index_base", required=True)
@click.option("--sketch", "sketch_path", required=True, type=click.Path(exists=True))
@click.option("--k", default=20, show_default=True)
@click.option("--mode", default="full", type=click.Choice(["full", "incomplete"]), show_default=True)
@click.option("--csv", "as_csv", is_flag=True, help="CSV output for the eval harness.")
@click.pass_context
def query(ctx, index_base, sketch_path, k, mode, as_csv):
    """Rank index models against a query sketch document."""
    try:
        idx = load_index(index_base)
        sketch, bbox = _sketch_from_file(sketch_path, idx.canvas_side)
        norm = normalize(sketch, mode=mode, user_bbox=bbox)
        layout = build_layout(idx.scheme, idx.canvas_side)
        feat = VARIANTS[idx.variant](norm, layout, ExtractionParams())
        results = knn(feat, idx, k=k, mode=mode)
    except PartPyrError as exc:
        raise click.ClickException(str(exc))
    if as_csv:
        click.echo("model_id,best_view_id,distance")
        for r in results:
            click.echo(f"{r.model_id},{r.best_view_id},{r.distance:.9f}")
    else:
        _dump(
            [
                {
                    "model_id": r.model_id,
                    "best_view_id": r.best_view_id,
                    "distance": r.distance,
                }
                for r in results
            ],
            ctx.obj["pretty"],
        )


@main.group("eval")
def eval_group():
    """Evaluation experiments."""


@eval_group.command("run")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--out", required=True, type=click.Path())
@click.pass_context
def eval_run(ctx, config_path, out):
    """Run an experiment config and write report + PR-curve data files."""
    cfg = evaluation.ExperimentConfig.from_dict(json.loads(open(config_path).read()))
    try:
        reports = evaluation.run_experiment(cfg, out_dir=out)
    except PartPyrError as exc:
        raise click.ClickException(str(exc))
    _dump([r.summary() for r in reports], ctx.obj["pretty"])


@main.command("layout")
@click.argument("action", type=click.Choice(["describe"]))
@click.option("--scheme", "scheme_opt", default=None, type=click.Choice(SCHEMES))
@click.pass_context
def layout_cmd(ctx, action, scheme_opt):
    """Describe a region scheme's geometry as JSON."""
    scheme = scheme_opt or ctx.obj["scheme"]
    try:
        layout = build_layout(scheme)
    except PartPyrError as exc:
        raise click.ClickException(str(exc))
    _dump(layout.describe(), ctx.obj["pretty"])


@main.command()
@click.option("--index", "index_base", required=True)
@click.option("--views", "views_path", required=True, type=click.Path(exists=True))
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8040, show_default=True)
@click.pass_context
def serve(ctx, index_base, views_path, host, port):
    """Serve the HTTP query API against a loaded index."""
    import uvicorn

    from .service import create_app

    idx = load_index(index_base)
    views = load_sketches(views_path)
    app = create_app(idx, views)
    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":
    main()
