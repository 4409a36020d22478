"""Okapi BM25 with precomputed IDF and eager per-term score contributions.

Per-term, per-document contributions are fully materialized at build time
(CSR layout over a sorted vocabulary), so answering a query reduces to a
few posting-list gathers and one top-k partition instead of re-deriving
term statistics per document. IDF uses the non-negative form
``ln((N - n_t + 0.5) / (n_t + 0.5) + 1)`` so a positive score always means
at least one matched term, which keeps the default ``score > 0`` recall
filter meaningful.
"""
from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .errors import ConfigError
from .models import ExpansionMode, Route, ScoredHit, expand_document

SNAPSHOT_VERSION = 1

DEFAULT_K1 = 1.5
DEFAULT_B = 0.75
CHUNK_ROUTE_TOP_K = 192
PATH_ROUTE_TOP_K = 6


@dataclass
class Bm25Index:
    doc_ids: list[str]
    doc_len: np.ndarray        # int64 token counts
    avg_len: float
    k1: float
    b: float
    vocab: list[str]           # sorted terms
    idf: np.ndarray            # float64, aligned with vocab
    indptr: np.ndarray         # int64, len(vocab) + 1
    postings_doc: np.ndarray   # int32 document ordinals per posting
    postings_score: np.ndarray # float64 eager contribution per posting
    _term_index: dict[str, int] = field(default_factory=dict, repr=False)

    def __post_init__(self) -> None:
        if not self._term_index:
            self._term_index = {t: i for i, t in enumerate(self.vocab)}

    @property
    def n_docs(self) -> int:
        return len(self.doc_ids)

    def idf_of(self, term: str) -> float:
        i = self._term_index.get(term)
        return float(self.idf[i]) if i is not None else 0.0

    def postings(self, term: str) -> tuple[np.ndarray, np.ndarray]:
        """(document ordinals, eager contributions) for one term."""
        i = self._term_index.get(term)
        if i is None:
            empty = np.empty(0)
            return empty.astype(np.int32), empty
        lo, hi = self.indptr[i], self.indptr[i + 1]
        return self.postings_doc[lo:hi], self.postings_score[lo:hi]


def build_index(
    corpus: Sequence[tuple[str, Sequence[str]]],
    k1: float = DEFAULT_K1,
    b: float = DEFAULT_B,
) -> Bm25Index:
    """Build the eager index from (doc_id, tokens) pairs."""
    if not corpus:
        raise ConfigError("cannot build a BM25 index from an empty corpus")
    if k1 <= 0:
        raise ConfigError("k1 must be > 0")
    if not 0 <= b <= 1:
        raise ConfigError("b must be in [0, 1]")

    doc_ids = [doc_id for doc_id, _ in corpus]
    doc_len = np.array([len(tokens) for _, tokens in corpus], dtype=np.int64)
    n = len(corpus)
    avg_len = float(doc_len.mean())

    term_postings: dict[str, list[tuple[int, int]]] = {}
    for ordinal, (_, tokens) in enumerate(corpus):
        for term, tf in Counter(tokens).items():
            term_postings.setdefault(term, []).append((ordinal, tf))

    vocab = sorted(term_postings)
    idf = np.array(
        [
            np.log((n - len(term_postings[t]) + 0.5) / (len(term_postings[t]) + 0.5) + 1.0)
            for t in vocab
        ],
        dtype=np.float64,
    )

    indptr = np.zeros(len(vocab) + 1, dtype=np.int64)
    docs: list[int] = []
    scores: list[float] = []
    safe_avg = avg_len if avg_len > 0 else 1.0
    for i, term in enumerate(vocab):
        postings = term_postings[term]  # ordinals are ascending by construction
        for ordinal, tf in postings:
            norm = tf + k1 * (1.0 - b + b * doc_len[ordinal] / safe_avg)
            docs.append(ordinal)
            scores.append(float(idf[i]) * tf * (k1 + 1.0) / norm)
        indptr[i + 1] = len(docs)

    return Bm25Index(
        doc_ids=doc_ids,
        doc_len=doc_len,
        avg_len=avg_len,
        k1=k1,
        b=b,
        vocab=vocab,
        idf=idf,
        indptr=indptr,
        postings_doc=np.array(docs, dtype=np.int32),
        postings_score=np.array(scores, dtype=np.float64),
    )


def score_all(index: Bm25Index, query: Sequence[str]) -> np.ndarray:
    """BM25 score of every document for the query (repeated terms add up)."""
    scores = np.zeros(index.n_docs, dtype=np.float64)
    for term in query:
        docs, contribs = index.postings(term)
        if docs.size:
            scores[docs] += contribs
    return scores


def retrieve(
    index: Bm25Index,
    query: Sequence[str],
    top_k: int,
    min_score: float = 0.0,
    route: Route = Route.CHUNK,
) -> list[ScoredHit]:
    """Top-k documents with score strictly above min_score.

    Sorted by descending score; ties break by ascending document ordinal.
    """
    if top_k <= 0 or not query:
        return []
    scores = score_all(index, query)
    candidates = np.nonzero(scores > min_score)[0]
    if candidates.size == 0:
        return []
    order = np.lexsort((candidates, -scores[candidates]))
    top = candidates[order][:top_k]
    return [
        ScoredHit(index.doc_ids[i], float(scores[i]), rank, route)
        for rank, i in enumerate(top, 1)
    ]


def chunk_route(
    index: Bm25Index,
    query: Sequence[str],
    top_k: int = CHUNK_ROUTE_TOP_K,
    min_score: float = 0.0,
) -> list[ScoredHit]:
    """Coarse text-block retrieval over the (expanded) chunk index."""
    return retrieve(index, query, top_k, min_score, Route.CHUNK)


@dataclass
class PathIndex:
    """BM25 over distinct knowledge paths, each mapping back to its chunks."""

    index: Bm25Index
    path_chunks: dict[str, list[str]]


def build_path_index(chunks, tokenizer, k1: float = DEFAULT_K1, b: float = DEFAULT_B) -> PathIndex:
    """One indexed document per distinct knowledge path (first-seen order).

    ``tokenizer`` is a callable mapping text to tokens.
    """
    path_chunks: dict[str, list[str]] = {}
    for chunk in chunks:
        path_chunks.setdefault(chunk.knowledge_path, []).append(chunk.chunk_id)
    corpus = [(path, tokenizer(path)) for path in path_chunks]
    return PathIndex(index=build_index(corpus, k1, b), path_chunks=path_chunks)


def path_route(
    path_index: PathIndex,
    query: Sequence[str],
    top_k: int = PATH_ROUTE_TOP_K,
    min_score: float = 0.0,
) -> list[ScoredHit]:
    """Knowledge-path retrieval: matched paths contribute their chunks in
    document order until top_k chunks are emitted."""
    if top_k <= 0:
        return []
    path_hits = retrieve(
        path_index.index, query, path_index.index.n_docs, min_score, Route.PATH
    )
    hits: list[ScoredHit] = []
    for path_hit in path_hits:
        for chunk_id in path_index.path_chunks[path_hit.chunk_id]:
            if len(hits) >= top_k:
                return hits
            hits.append(ScoredHit(chunk_id, path_hit.score, len(hits) + 1, Route.PATH))
    return hits


def filter_by_source(
    hits: Sequence[ScoredHit],
    allowed_file_prefixes: Sequence[str] | None,
    file_paths: Mapping[str, str],
) -> list[ScoredHit]:
    """Keep hits whose file path starts with any allowed prefix.

    ``None`` disables filtering; an empty list drops everything. Relative
    order is preserved and ranks are recomputed 1..n.
    """
    if allowed_file_prefixes is None:
        return list(hits)
    kept = [
        h
        for h in hits
        if any(file_paths.get(h.chunk_id, "").startswith(p) for p in allowed_file_prefixes)
    ]
    return [
        ScoredHit(h.chunk_id, h.score, rank, h.route)
        for rank, h in enumerate(kept, 1)
    ]


# -- persistence --------------------------------------------------------


def dump_json(obj, path: Path) -> None:
    path.write_text(
        json.dumps(obj, ensure_ascii=False, sort_keys=True, separators=(",", ":")),
        encoding="utf-8",
    )


def save_index(index: Bm25Index, out_dir: str | Path) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    dump_json(
        {
            "format_version": SNAPSHOT_VERSION,
            "kind": "bm25",
            "k1": index.k1,
            "b": index.b,
            "avg_len": index.avg_len,
            "n_docs": index.n_docs,
            "n_terms": len(index.vocab),
        },
        out / "meta.json",
    )
    dump_json(index.doc_ids, out / "doc_ids.json")
    dump_json(index.vocab, out / "vocab.json")
    np.save(out / "doc_len.npy", index.doc_len)
    np.save(out / "idf.npy", index.idf)
    np.save(out / "indptr.npy", index.indptr)
    np.save(out / "postings_doc.npy", index.postings_doc)
    np.save(out / "postings_score.npy", index.postings_score)


def load_index(src_dir: str | Path) -> Bm25Index:
    src = Path(src_dir)
    meta = json.loads((src / "meta.json").read_text(encoding="utf-8"))
    if meta.get("format_version") != SNAPSHOT_VERSION or meta.get("kind") != "bm25":
        raise ConfigError(f"unsupported index snapshot at {src}")
    return Bm25Index(
        doc_ids=json.loads((src / "doc_ids.json").read_text(encoding="utf-8")),
        doc_len=np.load(src / "doc_len.npy"),
        avg_len=meta["avg_len"],
        k1=meta["k1"],
        b=meta["b"],
        vocab=json.loads((src / "vocab.json").read_text(encoding="utf-8")),
        idf=np.load(src / "idf.npy"),
        indptr=np.load(src / "indptr.npy"),
        postings_doc=np.load(src / "postings_doc.npy"),
        postings_score=np.load(src / "postings_score.npy"),
    )


def save_path_index(path_index: PathIndex, out_dir: str | Path) -> None:
    out = Path(out_dir)
    save_index(path_index.index, out / "bm25")
    dump_json(path_index.path_chunks, out / "path_chunks.json")


def load_path_index(src_dir: str | Path) -> PathIndex:
    src = Path(src_dir)
    return PathIndex(
        index=load_index(src / "bm25"),
        path_chunks=json.loads((src / "path_chunks.json").read_text(encoding="utf-8")),
    )


__all__ = [
    "Bm25Index",
    "PathIndex",
    "build_index",
    "build_path_index",
    "chunk_route",
    "expand_document",
    "ExpansionMode",
    "filter_by_source",
    "load_index",
    "load_path_index",
    "path_route",
    "retrieve",
    "save_index",
    "save_path_index",
    "score_all",
]
