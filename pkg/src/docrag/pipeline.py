"""Pipeline orchestration: wire ingestion outputs and all retrieval, rerank,
fusion, compression and QA stages behind one engine, plus evaluation and
re-indexing.

The engine is immutable after construction: indexes, config and backends
are shared read-only across concurrent queries, and per-request overrides
operate on a config copy.
"""
from __future__ import annotations

import json
import os
import shutil
import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Sequence

from . import dense as dense_mod
from . import sparse as sparse_mod
from .compress import CompressionParams, compress_contexts
from .config import PipelineConfig, apply_overrides
from .dense import EmbeddingProvider, HashedBagEmbedder, HttpEmbeddingProvider, VectorStore
from .errors import ConfigError, DocragError, StageError, WarningRecord
from .fusion import RankedList, answer_fuse_concat, answer_fuse_longer, rrf, simple_merge
from .ingest import Chunk, ChunkingParams, ImageFilterConfig, ingest_package, load_chunks
from .ingest.package import write_ingest_outputs
from .models import ExpansionMode, Route, ScoredHit, expand_document
from .qa.client import ChatClient, HttpChatClient, MockChatClient
from .qa.generate import document_concat, generate_answer, integrate_answer
from .qa.rewrite import (
    HydeMode,
    RewriteArtifacts,
    expand_query,
    hyde,
    load_few_shot_examples,
)
from .qa.templates import load_template_overrides
from .rerank import (
    EarlyExitPolicy,
    ExitMode,
    HttpLayerwiseScorer,
    LayerwiseScorer,
    TokenOverlapScorer,
    rerank,
)
from .sparse import (
    Bm25Index,
    PathIndex,
    build_index,
    build_path_index,
    filter_by_source,
    path_route,
    retrieve,
)
from .tokenization import TokenizerConfig, load_dictionary, load_stopwords, tokenize

SNAPSHOT_DIRS = {
    Route.CHUNK: "sparse_chunk",
    Route.PATH: "sparse_path",
    Route.DENSE: "dense",
}


@dataclass(frozen=True)
class ContextHit:
    chunk_id: str
    text: str
    score: float
    rank: int
    route: str
    file_path: str
    knowledge_path: str

    def to_dict(self) -> dict:
        return {
            "chunk_id": self.chunk_id,
            "text": self.text,
            "score": self.score,
            "rank": self.rank,
            "route": self.route,
            "file_path": self.file_path,
            "knowledge_path": self.knowledge_path,
        }


@dataclass
class QueryResult:
    answer: str
    contexts: list[ContextHit]
    rewrite: RewriteArtifacts
    timings_ms: dict[str, float]
    config_fingerprint: str
    warnings: list[WarningRecord] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "answer": self.answer,
            "contexts": [c.to_dict() for c in self.contexts],
            "rewrite": self.rewrite.to_dict(),
            "timings_ms": self.timings_ms,
            "config_fingerprint": self.config_fingerprint,
            "warnings": [w.to_dict() for w in self.warnings],
        }


@dataclass(frozen=True)
class EvalRecord:
    question: str
    gold_chunk_ids: tuple[str, ...] = ()
    answer_keywords: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if not self.gold_chunk_ids and not self.answer_keywords:
            raise ConfigError("eval record needs gold chunk ids or answer keywords")


def load_eval_records(path: str | Path) -> list[EvalRecord]:
    records = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            raw = json.loads(line)
            records.append(
                EvalRecord(
                    question=raw["question"],
                    gold_chunk_ids=tuple(raw.get("gold_chunk_ids", ())),
                    answer_keywords=tuple(raw.get("answer_keywords", ())),
                )
            )
    return records


@dataclass
class Backends:
    """Model backends; bundled deterministic fallbacks keep every feature
    runnable without model weights."""

    chat: ChatClient
    scorer: LayerwiseScorer | None = None
    embedder: EmbeddingProvider | None = None
    chat_real: bool = False
    scorer_real: bool = False
    embedder_real: bool = False

    @classmethod
    def from_env(
        cls, config: PipelineConfig, env: Mapping[str, str] | None = None
    ) -> "Backends":
        env = dict(os.environ if env is None else env)
        chat_url = env.get("DOCRAG_CHAT_URL")
        chat: ChatClient
        if chat_url:
            chat = HttpChatClient(
                chat_url,
                api_key=env.get("DOCRAG_CHAT_KEY"),
                model=env.get("DOCRAG_CHAT_MODEL", "default"),
            )
        else:
            chat = MockChatClient()
        scorer_url = env.get("DOCRAG_SCORER_URL")
        scorer: LayerwiseScorer = (
            HttpLayerwiseScorer(scorer_url) if scorer_url else TokenOverlapScorer()
        )
        embed_url = env.get("DOCRAG_EMBED_URL")
        embedder: EmbeddingProvider = (
            HttpEmbeddingProvider(
                embed_url, config.dense_dimension, config.query_prompt_template
            )
            if embed_url
            else HashedBagEmbedder(config.dense_dimension, config.query_prompt_template)
        )
        return cls(
            chat=chat,
            scorer=scorer,
            embedder=embedder,
            chat_real=bool(chat_url),
            scorer_real=bool(scorer_url),
            embedder_real=bool(embed_url),
        )

    @classmethod
    def mocks(cls, config: PipelineConfig | None = None) -> "Backends":
        config = config or PipelineConfig()
        return cls(
            chat=MockChatClient(),
            scorer=TokenOverlapScorer(),
            embedder=HashedBagEmbedder(
                config.dense_dimension, config.query_prompt_template
            ),
        )


def build_tokenizer(config: PipelineConfig) -> TokenizerConfig:
    dictionary = (
        load_dictionary(config.dictionary_path) if config.dictionary_path else {}
    )
    stopwords = (
        frozenset(load_stopwords(config.stopwords_path))
        if config.stopwords_path
        else frozenset()
    )
    return TokenizerConfig(dictionary=dictionary, stopwords=stopwords)


@contextmanager
def _timed(timings: dict[str, float], stage: str):
    t0 = time.perf_counter()
    yield
    timings[stage] = (time.perf_counter() - t0) * 1000.0


class QaEngine:
    """One immutable pipeline instance serving concurrent queries."""

    def __init__(
        self,
        chunks: Sequence[Chunk],
        config: PipelineConfig,
        backends: Backends,
        tokenizer: TokenizerConfig | None = None,
        chunk_index: Bm25Index | None = None,
        path_index: PathIndex | None = None,
        dense_store: VectorStore | None = None,
    ) -> None:
        self.config = config.validate()
        self.backends = backends
        self.tokenizer = tokenizer or build_tokenizer(config)
        self.chunks: dict[str, Chunk] = {c.chunk_id: c for c in chunks}
        self.file_paths = {c.chunk_id: c.file_path for c in chunks}
        self.template_overrides = (
            load_template_overrides(config.template_dir) if config.template_dir else None
        )
        self._few_shot: str | None = None
        self._chunk_index = chunk_index
        self._path_index = path_index
        self._dense_store = dense_store

        route_types = {r.type for r in config.routes}
        ordered = list(chunks)
        if not ordered:
            return  # empty corpus: engine serves health as degraded, queries find nothing
        if Route.CHUNK in route_types and self._chunk_index is None:
            spec = self.route_spec(Route.CHUNK)
            corpus = [
                (c.chunk_id, tokenize(expand_document(c, spec.expansion), self.tokenizer))
                for c in ordered
            ]
            self._chunk_index = build_index(corpus, config.k1, config.b)
        if Route.PATH in route_types and self._path_index is None:
            self._path_index = build_path_index(
                ordered, lambda text: tokenize(text, self.tokenizer), config.k1, config.b
            )
        if Route.DENSE in route_types and self._dense_store is None:
            if backends.embedder is None:
                raise ConfigError("dense route configured but no embedder backend")
            spec = self.route_spec(Route.DENSE)
            self._dense_store = dense_mod.index_chunks(
                ordered, backends.embedder, spec.expansion
            )

    # -- construction -----------------------------------------------------

    @classmethod
    def from_snapshot(
        cls, snapshot_dir: str | Path, config: PipelineConfig, backends: Backends
    ) -> "QaEngine":
        root = Path(snapshot_dir)
        chunks = load_chunks(root / "chunks.jsonl")
        kwargs: dict[str, Any] = {}
        for route in config.routes:
            sub = root / SNAPSHOT_DIRS[route.type]
            if not sub.exists():
                raise ConfigError(
                    f"snapshot {root} lacks the {route.type.value} route index"
                )
            if route.type == Route.CHUNK:
                kwargs["chunk_index"] = sparse_mod.load_index(sub)
            elif route.type == Route.PATH:
                kwargs["path_index"] = sparse_mod.load_path_index(sub)
            else:
                kwargs["dense_store"] = dense_mod.load_store(sub)
        return cls(chunks, config, backends, **kwargs)

    def route_spec(self, route_type: Route):
        for route in self.config.routes:
            if route.type == route_type:
                return route
        raise ConfigError(f"route {route_type.value} not configured")

    @property
    def n_chunks(self) -> int:
        return len(self.chunks)

    def few_shot_examples(self) -> str:
        if self._few_shot is None:
            self._few_shot = load_few_shot_examples(self.config.rewrite.few_shot_path)
        return self._few_shot

    # -- retrieval stages ---------------------------------------------------

    def _top1_lookup(self, query: str) -> tuple[str, str] | None:
        """Best single chunk for grounding a hypothetical document."""
        hits = self._coarse_for_route(self.config.routes[0], query, self.config)
        if not hits:
            return None
        chunk = self.chunks[hits[0].chunk_id]
        return chunk.chunk_id, chunk.text

    def _coarse_for_route(
        self, spec, retrieval_text: str, cfg: PipelineConfig
    ) -> list[ScoredHit]:
        if not self.chunks:
            return []
        if spec.type == Route.CHUNK:
            tokens = tokenize(retrieval_text, self.tokenizer)
            hits = retrieve(self._chunk_index, tokens, spec.top_k, 0.0, Route.CHUNK)
            return filter_by_source(hits, cfg.allowed_file_prefixes, self.file_paths)
        if spec.type == Route.PATH:
            tokens = tokenize(retrieval_text, self.tokenizer)
            return path_route(self._path_index, tokens, spec.top_k)
        if spec.type == Route.DENSE:
            qvec = self.backends.embedder.embed_query(retrieval_text)
            return dense_mod.dense_retrieve(
                self._dense_store, qvec, spec.top_k, cfg.allowed_file_prefixes
            )
        raise ConfigError(f"unknown route type {spec.type!r}")

    def _rerank_hits(
        self, query: str, hits: Sequence[ScoredHit], cfg: PipelineConfig
    ) -> list[ScoredHit]:
        if not hits:
            return []
        settings = cfg.rerank
        if not settings.enabled or self.backends.scorer is None:
            return [
                ScoredHit(h.chunk_id, h.score, rank, h.route)
                for rank, h in enumerate(hits[: settings.k], 1)
            ]
        policy = EarlyExitPolicy(
            mode=settings.policy,
            shallow_layer=settings.shallow_layer,
            deep_layer=settings.deep_layer,
            threshold=settings.threshold,
        )
        return rerank(
            query,
            hits,
            self.chunks,
            self.backends.scorer,
            k=settings.k,
            expansion=settings.expansion,
            policy=policy,
            batch_size=settings.batch_size,
        )

    # -- the full pipeline ----------------------------------------------------

    def run_query(
        self,
        question: str,
        overrides: dict[str, Any] | None = None,
        trace: dict[str, Any] | None = None,
    ) -> QueryResult:
        if not question or not question.strip():
            raise ConfigError("question must be non-empty")
        cfg = apply_overrides(self.config, overrides) if overrides else self.config
        timings: dict[str, float] = {}
        warnings: list[WarningRecord] = []
        artifacts = RewriteArtifacts(original=question)

        retrieval_text = question
        rerank_text = question
        rewrite_cfg = cfg.rewrite
        if rewrite_cfg.expansion or rewrite_cfg.hyde != HydeMode.OFF:
            with _timed(timings, "rewrite"):
                if rewrite_cfg.expansion:
                    expanded = expand_query(
                        question,
                        self.backends.chat,
                        self.few_shot_examples(),
                        artifacts,
                        warnings,
                        self.template_overrides,
                    )
                    retrieval_text = (
                        expanded if question in expanded else f"{question}\n{expanded}"
                    )
                if rewrite_cfg.hyde != HydeMode.OFF:
                    hypothesis = hyde(
                        question,
                        rewrite_cfg.hyde,
                        self.backends.chat,
                        retriever=self._top1_lookup,
                        artifacts=artifacts,
                        warnings=warnings,
                        template_overrides=self.template_overrides,
                    )
                    if hypothesis:
                        if rewrite_cfg.hyde_use == "coarse":
                            retrieval_text = f"{retrieval_text}\n{hypothesis}"
                        else:
                            rerank_text = f"{question}\n{hypothesis}"

        with _timed(timings, "coarse"):
            route_lists = [
                RankedList(
                    route=spec.type.value,
                    hits=self._stage(
                        f"coarse:{spec.type.value}",
                        lambda spec=spec: self._coarse_for_route(spec, retrieval_text, cfg),
                    ),
                )
                for spec in cfg.routes
            ]
        if trace is not None:
            trace["routes"] = {rl.route: list(rl.hits) for rl in route_lists}

        route_answers: list[str] | None = None
        if cfg.rerank_fusion == "off":
            with _timed(timings, "fusion"):
                fused = (
                    simple_merge(route_lists)
                    if cfg.coarse_fusion == "simple_merge"
                    else rrf(route_lists, cfg.rrf_k_offset)
                )
            if trace is not None:
                trace["fused"] = list(fused.hits)
            with _timed(timings, "rerank"):
                final_hits = self._stage(
                    "rerank", lambda: self._rerank_hits(rerank_text, fused.hits, cfg)
                )
        else:
            with _timed(timings, "rerank"):
                reranked_lists = [
                    RankedList(
                        route=rl.route,
                        hits=self._stage(
                            f"rerank:{rl.route}",
                            lambda rl=rl: self._rerank_hits(rerank_text, rl.hits, cfg),
                        ),
                    )
                    for rl in route_lists
                ]
            with _timed(timings, "fusion"):
                if cfg.rerank_fusion == "rrf":
                    final_hits = rrf(reranked_lists, cfg.rrf_k_offset).hits[: cfg.rerank.k]
                    final_hits = [
                        ScoredHit(h.chunk_id, h.score, rank, h.route)
                        for rank, h in enumerate(final_hits, 1)
                    ]
                else:
                    # answer-level fusion: keep per-route contexts for generation
                    final_hits = simple_merge(reranked_lists).hits[: cfg.rerank.k]
                    route_answers = []
            if trace is not None:
                trace["fused"] = list(final_hits)

        if trace is not None:
            trace["final"] = list(final_hits)

        final_chunks = [self.chunks[h.chunk_id] for h in final_hits]
        if cfg.compress.enabled:
            with _timed(timings, "compress"):
                params = CompressionParams(cfg.compress.rate, cfg.compress.min_sentences)
                final_chunks = compress_contexts(
                    question, final_chunks, params, self.tokenizer
                )

        with _timed(timings, "generate"):
            if route_answers is not None:
                for ranked in reranked_lists:
                    chunks = [self.chunks[h.chunk_id] for h in ranked.hits]
                    if cfg.compress.enabled:
                        chunks = compress_contexts(
                            question,
                            chunks,
                            CompressionParams(cfg.compress.rate, cfg.compress.min_sentences),
                            self.tokenizer,
                        )
                    route_answers.append(
                        self._stage(
                            f"generate:{ranked.route}",
                            lambda chunks=chunks: generate_answer(
                                question,
                                chunks,
                                self.backends.chat,
                                cfg.template,
                                cfg.include_image_captions,
                                self.template_overrides,
                            ),
                        )
                    )
                answer = (
                    answer_fuse_longer(route_answers)
                    if cfg.rerank_fusion == "answer_longer"
                    else answer_fuse_concat(route_answers)
                )
            else:
                answer = self._stage(
                    "generate",
                    lambda: generate_answer(
                        question,
                        final_chunks,
                        self.backends.chat,
                        cfg.template,
                        cfg.include_image_captions,
                        self.template_overrides,
                    ),
                )

        if cfg.answer_merge != "off" and final_chunks:
            with _timed(timings, "answer_merge"):
                top1 = final_chunks[0]
                if cfg.answer_merge == "document_concat":
                    answer = document_concat(answer, top1, cfg.include_image_captions)
                else:
                    answer = integrate_answer(
                        question,
                        answer,
                        top1,
                        self.backends.chat,
                        cfg.include_image_captions,
                        self.template_overrides,
                        warnings=warnings,
                    )

        contexts = [
            ContextHit(
                chunk_id=h.chunk_id,
                text=chunk.text,
                score=h.score,
                rank=h.rank,
                route=h.route.value,
                file_path=chunk.file_path,
                knowledge_path=chunk.knowledge_path,
            )
            for h, chunk in zip(final_hits, final_chunks)
        ]
        return QueryResult(
            answer=answer,
            contexts=contexts,
            rewrite=artifacts,
            timings_ms=timings,
            config_fingerprint=cfg.fingerprint(),
            warnings=warnings,
        )

    @staticmethod
    def _stage(tag: str, fn):
        try:
            return fn()
        except DocragError:
            raise
        except Exception as exc:
            raise StageError(tag, str(exc)) from exc

    # -- evaluation ---------------------------------------------------------

    def evaluate(
        self, records: Sequence[EvalRecord], overrides: dict[str, Any] | None = None
    ) -> dict[str, Any]:
        """hit@k per stage, MRR over final contexts, and mean stage timings."""
        if not records:
            raise ConfigError("evaluation needs at least one record")
        stage_hits: dict[str, int] = {}
        stage_total: dict[str, int] = {}
        mrr_sum = 0.0
        keyword_hits = 0
        keyword_total = 0
        timing_sums: dict[str, float] = {}
        chars_original = 0
        chars_compressed = 0

        for record in records:
            trace: dict[str, Any] = {}
            result = self.run_query(record.question, overrides, trace=trace)
            for ctx in result.contexts:
                chars_original += len(self.chunks[ctx.chunk_id].text)
                chars_compressed += len(ctx.text)
            for stage_name, hits in list(trace.get("routes", {}).items()) + [
                ("fused", trace.get("fused", [])),
                ("final", trace.get("final", [])),
            ]:
                stage_total[stage_name] = stage_total.get(stage_name, 0) + 1
                if record.gold_chunk_ids and any(
                    h.chunk_id in record.gold_chunk_ids for h in hits
                ):
                    stage_hits[stage_name] = stage_hits.get(stage_name, 0) + 1
            if record.gold_chunk_ids:
                rr = 0.0
                for h in trace.get("final", []):
                    if h.chunk_id in record.gold_chunk_ids:
                        rr = 1.0 / h.rank
                        break
                mrr_sum += rr
            if record.answer_keywords:
                keyword_total += 1
                if all(kw in result.answer for kw in record.answer_keywords):
                    keyword_hits += 1
            for stage_name, ms in result.timings_ms.items():
                timing_sums[stage_name] = timing_sums.get(stage_name, 0.0) + ms

        n = len(records)
        gold_n = sum(1 for r in records if r.gold_chunk_ids)
        metrics: dict[str, Any] = {
            "n_questions": n,
            "hit_rate": {
                stage_name: stage_hits.get(stage_name, 0) / total
                for stage_name, total in stage_total.items()
            },
            "mrr": (mrr_sum / gold_n) if gold_n else None,
            "mean_timings_ms": {k: v / n for k, v in timing_sums.items()},
        }
        if keyword_total:
            metrics["answer_keyword_rate"] = keyword_hits / keyword_total
        if chars_original:
            # tokens estimated at 1.6 characters per token
            metrics["context_compression"] = {
                "rate": chars_compressed / chars_original,
                "chars_saved": chars_original - chars_compressed,
                "est_tokens_saved": (chars_original - chars_compressed) / 1.6,
            }
        return metrics


# -- re-indexing -----------------------------------------------------------


@dataclass
class ReindexReport:
    out_dir: Path
    n_documents: int
    n_chunks: int
    seconds: float


def build_snapshot(
    chunks: Sequence[Chunk],
    config: PipelineConfig,
    out_dir: Path,
    embedder: EmbeddingProvider | None = None,
) -> None:
    """Write route indexes for the chunks under out_dir (non-atomic)."""
    tokenizer = build_tokenizer(config)
    for spec in config.routes:
        sub = out_dir / SNAPSHOT_DIRS[spec.type]
        if spec.type == Route.CHUNK:
            corpus = [
                (c.chunk_id, tokenize(expand_document(c, spec.expansion), tokenizer))
                for c in chunks
            ]
            sparse_mod.save_index(build_index(corpus, config.k1, config.b), sub)
        elif spec.type == Route.PATH:
            index = build_path_index(
                chunks, lambda text: tokenize(text, tokenizer), config.k1, config.b
            )
            sparse_mod.save_path_index(index, sub)
        else:
            provider = embedder or HashedBagEmbedder(
                config.dense_dimension, config.query_prompt_template
            )
            dense_spec = spec
            store = dense_mod.index_chunks(chunks, provider, dense_spec.expansion)
            dense_mod.save_store(store, sub)


def reindex(
    src: str | Path,
    config: PipelineConfig,
    out_dir: str | Path,
    image_rules: ImageFilterConfig | None = None,
    embedder: EmbeddingProvider | None = None,
    ocr=None,
    captioner=None,
    workers: int = 1,
) -> ReindexReport:
    """Full rebuild with an atomic swap; a failed build leaves any prior
    snapshot untouched."""
    out = Path(out_dir)
    tmp = out.parent / f".{out.name}.building"
    stale = out.parent / f".{out.name}.stale"
    t0 = time.perf_counter()
    for leftover in (tmp, stale):
        if leftover.exists():
            shutil.rmtree(leftover)
    try:
        result = ingest_package(
            src,
            ChunkingParams(config.chunk_size, config.chunk_overlap),
            image_rules,
            ocr=ocr,
            captioner=captioner,
            workers=workers,
        )
        tmp.mkdir(parents=True)
        write_ingest_outputs(result, tmp)
        build_snapshot(result.chunks, config, tmp, embedder)
        sparse_mod.dump_json(
            {
                "format_version": sparse_mod.SNAPSHOT_VERSION,
                "kind": "corpus",
                "config_fingerprint": config.fingerprint(),
                "n_documents": len(result.documents),
                "n_chunks": len(result.chunks),
            },
            tmp / "meta.json",
        )
    except BaseException:
        if tmp.exists():
            shutil.rmtree(tmp)
        raise
    if out.exists():
        out.rename(stale)
    tmp.rename(out)
    if stale.exists():
        shutil.rmtree(stale)
    return ReindexReport(
        out_dir=out,
        n_documents=len(result.documents),
        n_chunks=len(result.chunks),
        seconds=time.perf_counter() - t0,
    )
