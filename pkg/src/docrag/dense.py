"""Pluggable dense retrieval: embedding providers plus an exhaustive
cosine top-k store with source filtering.

Corpora here are thousands of chunks, so exhaustive search is exact and
fast; the store sits behind a small interface so an external engine can be
substituted without touching callers.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol, Sequence, runtime_checkable

import httpx
import numpy as np

from .errors import BackendError, BackendUnavailableError, ConfigError
from .models import ExpansionMode, Route, ScoredHit, expand_document
from .sparse import SNAPSHOT_VERSION, dump_json
from .tokenization import TokenizerConfig, tokenize

DENSE_ROUTE_TOP_K = 288
_EMBED_BATCH = 64


@runtime_checkable
class EmbeddingProvider(Protocol):
    dimension: int

    def embed_documents(self, texts: Sequence[str]) -> np.ndarray:
        """Unit-norm row per text, shape (len(texts), dimension)."""

    def embed_query(self, text: str) -> np.ndarray:
        """Unit-norm vector; applies the provider's query prompt template."""


def _l2_normalize(matrix: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(matrix, axis=1, keepdims=True)
    norms[norms == 0] = 1.0
    return matrix / norms


class HashedBagEmbedder:
    """Deterministic test embedder: hashed bag-of-tokens, L2-normalized.

    An empty token bag maps to a fixed unit fallback vector (first axis).
    """

    def __init__(self, dimension: int = 256, query_template: str = "{query}") -> None:
        if dimension <= 0:
            raise ConfigError("embedding dimension must be positive")
        self.dimension = dimension
        self.query_template = query_template
        self._tokenizer = TokenizerConfig()

    def _embed_one(self, text: str) -> np.ndarray:
        vec = np.zeros(self.dimension, dtype=np.float64)
        for token in tokenize(text, self._tokenizer):
            digest = hashlib.sha1(token.encode("utf-8")).digest()
            vec[int.from_bytes(digest[:8], "big") % self.dimension] += 1.0
        norm = np.linalg.norm(vec)
        if norm == 0:
            vec[0] = 1.0
            return vec
        return vec / norm

    def embed_documents(self, texts: Sequence[str]) -> np.ndarray:
        if not texts:
            return np.zeros((0, self.dimension), dtype=np.float64)
        return np.stack([self._embed_one(t) for t in texts])

    def embed_query(self, text: str) -> np.ndarray:
        return self._embed_one(self.query_template.format(query=text))


class HttpEmbeddingProvider:
    """Client for an embeddings endpoint.

    POSTs ``{"texts": [...]}`` to ``<base_url>/embed`` and expects
    ``{"embeddings": [[...], ...]}``.
    """

    def __init__(
        self,
        base_url: str,
        dimension: int,
        query_template: str = "{query}",
        timeout: float = 60.0,
    ) -> None:
        self.base_url = base_url.rstrip("/")
        self.dimension = dimension
        self.query_template = query_template
        self._client = httpx.Client(timeout=timeout)

    def embed_documents(self, texts: Sequence[str]) -> np.ndarray:
        try:
            response = self._client.post(f"{self.base_url}/embed", json={"texts": list(texts)})
        except httpx.TransportError as exc:
            raise BackendUnavailableError(f"embedding backend unreachable: {exc}") from exc
        if response.status_code != 200:
            raise BackendError(f"embedding backend returned {response.status_code}")
        vectors = np.asarray(response.json()["embeddings"], dtype=np.float64)
        if vectors.ndim != 2 or vectors.shape[1] != self.dimension:
            raise BackendError(
                f"embedding backend returned shape {vectors.shape}, "
                f"expected (n, {self.dimension})"
            )
        return vectors

    def embed_query(self, text: str) -> np.ndarray:
        return self.embed_documents([self.query_template.format(query=text)])[0]


@dataclass
class VectorStore:
    """Unit-norm row vectors with index-aligned chunk metadata."""

    vectors: np.ndarray
    chunk_ids: list[str]
    file_paths: list[str]
    knowledge_paths: list[str]

    def __len__(self) -> int:
        return len(self.chunk_ids)


def index_chunks(
    chunks,
    provider: EmbeddingProvider,
    mode: ExpansionMode = ExpansionMode.FILE_PATH,
) -> VectorStore:
    """Embed one vector per chunk over the path-expanded text."""
    chunks = list(chunks)
    texts = [expand_document(c, mode) for c in chunks]
    parts = []
    for lo in range(0, len(texts), _EMBED_BATCH):
        batch = texts[lo : lo + _EMBED_BATCH]
        try:
            parts.append(np.asarray(provider.embed_documents(batch), dtype=np.float64))
        except BackendError:
            raise
        except Exception as exc:
            raise BackendError(
                f"embedding failed for batch {lo}..{lo + len(batch) - 1}: {exc}"
            ) from exc
    vectors = (
        np.concatenate(parts, axis=0)
        if parts
        else np.zeros((0, provider.dimension), dtype=np.float64)
    )
    return VectorStore(
        vectors=_l2_normalize(vectors) if len(vectors) else vectors,
        chunk_ids=[c.chunk_id for c in chunks],
        file_paths=[c.file_path for c in chunks],
        knowledge_paths=[c.knowledge_path for c in chunks],
    )


def dense_retrieve(
    store: VectorStore,
    query_vec: np.ndarray,
    top_k: int = DENSE_ROUTE_TOP_K,
    allowed_file_prefixes: Sequence[str] | None = None,
) -> list[ScoredHit]:
    """Cosine top-k over the store; the source filter applies before the cut."""
    if top_k <= 0 or len(store) == 0:
        return []
    if allowed_file_prefixes is None:
        candidates = np.arange(len(store))
    else:
        candidates = np.array(
            [
                i
                for i, fp in enumerate(store.file_paths)
                if any(fp.startswith(p) for p in allowed_file_prefixes)
            ],
            dtype=np.int64,
        )
        if candidates.size == 0:
            return []
    sims = store.vectors[candidates] @ np.asarray(query_vec, dtype=np.float64)
    order = np.lexsort((candidates, -sims))[:top_k]
    return [
        ScoredHit(store.chunk_ids[candidates[i]], float(sims[i]), rank, Route.DENSE)
        for rank, i in enumerate(order, 1)
    ]


def save_store(store: VectorStore, out_dir: str | Path) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    dump_json(
        {
            "format_version": SNAPSHOT_VERSION,
            "kind": "dense",
            "n_rows": len(store),
            "dimension": int(store.vectors.shape[1]) if len(store) else 0,
        },
        out / "meta.json",
    )
    np.save(out / "vectors.npy", store.vectors)
    dump_json(
        {
            "chunk_ids": store.chunk_ids,
            "file_paths": store.file_paths,
            "knowledge_paths": store.knowledge_paths,
        },
        out / "rows.json",
    )


def load_store(src_dir: str | Path) -> VectorStore:
    src = Path(src_dir)
    meta = json.loads((src / "meta.json").read_text(encoding="utf-8"))
    if meta.get("format_version") != SNAPSHOT_VERSION or meta.get("kind") != "dense":
        raise ConfigError(f"unsupported vector store snapshot at {src}")
    rows = json.loads((src / "rows.json").read_text(encoding="utf-8"))
    return VectorStore(
        vectors=np.load(src / "vectors.npy"),
        chunk_ids=rows["chunk_ids"],
        file_paths=rows["file_paths"],
        knowledge_paths=rows["knowledge_paths"],
    )
