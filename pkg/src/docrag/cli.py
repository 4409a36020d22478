"""Command-line surface: ingest, index build/query, query, eval, bench, serve."""
from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from .config import PipelineConfig
from .errors import DocragError
from .ingest import ChunkingParams, ImageFilterConfig, ingest_package, write_ingest_outputs
from .ingest.package import load_chunks
from .pipeline import (
    Backends,
    QaEngine,
    build_snapshot,
    build_tokenizer,
    load_eval_records,
    reindex,
)
from .sparse import load_index, retrieve, save_index
from .tokenization import tokenize


def _fail(message: str) -> None:
    click.echo(f"error: {message}", err=True)
    sys.exit(1)


def _load_config(path: str | None) -> PipelineConfig:
    return PipelineConfig.from_file(path) if path else PipelineConfig().validate()


@click.group()
def main() -> None:
    """Retrieval-augmented QA over documentation corpora."""


@main.command()
@click.option("--src", required=True, help="Package directory or zip archive.")
@click.option("--out", required=True, help="Output directory for the chunk store.")
@click.option("--chunk-size", default=1024, show_default=True)
@click.option("--chunk-overlap", default=200, show_default=True)
@click.option("--image-rules", default=None, help="Image filter rules file (YAML/JSON).")
@click.option("--workers", default=1, show_default=True)
def ingest(src, out, chunk_size, chunk_overlap, image_rules, workers) -> None:
    """Parse a documentation package into a chunk store."""
    try:
        rules = ImageFilterConfig.from_file(image_rules) if image_rules else None
        result = ingest_package(
            src,
            ChunkingParams(chunk_size=chunk_size, chunk_overlap=chunk_overlap),
            rules,
            workers=workers,
        )
        write_ingest_outputs(result, out)
    except DocragError as exc:
        _fail(str(exc))
    click.echo(
        f"ingested {len(result.documents)} documents into {len(result.chunks)} chunks "
        f"({len(result.warnings)} warnings) -> {out}"
    )


@main.group()
def index() -> None:
    """Build or query retrieval index snapshots."""


@index.command("build")
@click.option("--chunks", "chunks_file", required=True, help="chunks.jsonl from ingest.")
@click.option("--out", required=True, help="Snapshot output directory.")
@click.option("--k1", default=1.5, show_default=True)
@click.option("--b", default=0.75, show_default=True)
@click.option("--config", "config_path", default=None, help="Pipeline config file.")
def index_build(chunks_file, out, k1, b, config_path) -> None:
    """Build the route indexes configured in the pipeline config."""
    try:
        from dataclasses import replace

        cfg = replace(_load_config(config_path), k1=k1, b=b)
        chunks = load_chunks(chunks_file)
        if not chunks:
            _fail(f"no chunks found in {chunks_file}")
        build_snapshot(chunks, cfg, Path(out))
    except DocragError as exc:
        _fail(str(exc))
    click.echo(f"built index snapshot for {len(chunks)} chunks -> {out}")


@index.command("query")
@click.option("--index", "index_dir", required=True, help="sparse_chunk snapshot dir.")
@click.option("--q", "question", required=True)
@click.option("--top-k", default=192, show_default=True)
@click.option("--config", "config_path", default=None)
def index_query(index_dir, question, top_k, config_path) -> None:
    """Query one BM25 snapshot directly (no reranking or generation)."""
    try:
        cfg = _load_config(config_path)
        bm25 = load_index(index_dir)
        tokens = tokenize(question, build_tokenizer(cfg))
        hits = retrieve(bm25, tokens, top_k)
    except DocragError as exc:
        _fail(str(exc))
    for hit in hits:
        click.echo(f"{hit.rank:4d}  {hit.score:10.4f}  {hit.chunk_id}")
    if not hits:
        click.echo("no hits")


def _engine_from_options(config_path: str | None, index_dir: str | None) -> QaEngine:
    cfg = _load_config(config_path)
    backends = Backends.from_env(cfg)
    if index_dir:
        return QaEngine.from_snapshot(index_dir, cfg, backends)
    _fail("--index is required (build one with `docrag ingest` + `docrag index build`)")
    raise AssertionError  # unreachable


@main.command()
@click.option("--config", "config_path", default=None)
@click.option("--index", "index_dir", default=None, help="Corpus snapshot directory.")
@click.option("--q", "question", required=True)
@click.option("--json", "as_json", is_flag=True, default=False)
def query(config_path, index_dir, question, as_json) -> None:
    """Run one question through the full pipeline."""
    try:
        engine = _engine_from_options(config_path, index_dir)
        result = engine.run_query(question)
    except DocragError as exc:
        _fail(str(exc))
    if as_json:
        click.echo(json.dumps(result.to_dict(), ensure_ascii=False, indent=2))
        return
    click.echo(result.answer)
    click.echo("")
    click.echo("sources:")
    click.echo(f"{'rank':>4}  {'score':>10}  {'route':<6} {'path'}")
    for ctx in result.contexts:
        click.echo(
            f"{ctx.rank:>4}  {ctx.score:>10.4f}  {ctx.route:<6} "
            f"{ctx.knowledge_path or ctx.file_path}"
        )
    timings = ", ".join(f"{k}={v:.1f}ms" for k, v in result.timings_ms.items())
    click.echo(f"timings: {timings}")


@main.command("eval")
@click.option("--config", "config_path", default=None)
@click.option("--index", "index_dir", default=None)
@click.option("--qa", "qa_file", required=True, help="JSONL eval records.")
def eval_cmd(config_path, index_dir, qa_file) -> None:
    """Evaluate retrieval and answer metrics over a QA set."""
    try:
        engine = _engine_from_options(config_path, index_dir)
        records = load_eval_records(qa_file)
        metrics = engine.evaluate(records)
    except DocragError as exc:
        _fail(str(exc))
    click.echo(json.dumps(metrics, ensure_ascii=False, indent=2))


@main.group()
def bench() -> None:
    """Performance benchmarks."""


@bench.command("bm25")
@click.option("--docs", default=10_000, show_default=True)
@click.option("--queries", default=1_000, show_default=True)
@click.option("--top-k", default=192, show_default=True)
@click.option("--vocab", default=2_000, show_default=True)
@click.option("--seed", default=13, show_default=True)
def bench_bm25(docs, queries, top_k, vocab, seed) -> None:
    """Compare naive per-document scoring against the eager index."""
    from .bench import run_bm25_bench

    result = run_bm25_bench(docs, queries, top_k, vocab, seed)
    click.echo(
        f"naive:  {result.naive_seconds:8.3f} s for {queries} queries over {docs} docs"
    )
    click.echo(f"eager:  {result.eager_seconds:8.3f} s")
    click.echo(f"speedup: {result.speedup:.1f}x")


@main.command()
@click.option("--config", "config_path", default=None)
@click.option("--index", "index_dir", required=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True)
@click.option("--ui-dir", default=None, help="Built web UI bundle to serve at /.")
def serve(config_path, index_dir, host, port, ui_dir) -> None:
    """Serve the /v1 HTTP API (and the web UI when a bundle is present)."""
    import uvicorn

    from .server import create_app

    try:
        engine = _engine_from_options(config_path, index_dir)
    except DocragError as exc:
        _fail(str(exc))
    if ui_dir is None and Path("frontend/dist").is_dir():
        ui_dir = "frontend/dist"
    uvicorn.run(create_app(engine, ui_dir), host=host, port=port)


@main.command("reindex")
@click.option("--src", required=True)
@click.option("--out", required=True)
@click.option("--config", "config_path", default=None)
@click.option("--image-rules", default=None)
@click.option("--workers", default=1, show_default=True)
def reindex_cmd(src, out, config_path, image_rules, workers) -> None:
    """Rebuild the full corpus snapshot with an atomic swap."""
    try:
        cfg = _load_config(config_path)
        rules = ImageFilterConfig.from_file(image_rules) if image_rules else None
        report = reindex(src, cfg, out, rules, workers=workers)
    except DocragError as exc:
        _fail(str(exc))
    click.echo(
        f"reindexed {report.n_documents} documents / {report.n_chunks} chunks "
        f"in {report.seconds:.2f}s -> {report.out_dir}"
    )


if __name__ == "__main__":
    main()
