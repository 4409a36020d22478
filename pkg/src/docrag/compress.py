"""Extractive context compression: keep the sentences of a chunk that score
highest against the query under a length budget, in original order.

A throwaway BM25 index is built over the chunk's own sentences; sentences
are admitted in decreasing score (ties by original position) until the next
one would exceed ``rate * len(chunk)``. At least ``min_sentences`` are always
admitted, so very tight budgets still yield the single best sentence. The
admitted set is a prefix of the score ordering, which makes raising the rate
strictly additive.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

from .errors import ConfigError
from .ingest.sentences import split_sentences
from .sparse import DEFAULT_B, DEFAULT_K1, build_index, score_all
from .tokenization import TokenizerConfig, tokenize


@dataclass(frozen=True)
class CompressionParams:
    rate: float = 0.5
    min_sentences: int = 1

    def __post_init__(self) -> None:
        if not 0.0 < self.rate <= 1.0:
            raise ConfigError("compression rate must be in (0, 1]")
        if self.min_sentences < 0:
            raise ConfigError("min_sentences must be >= 0")


def bm25_extract(
    query: str,
    chunk_text: str,
    params: CompressionParams,
    tokenizer: TokenizerConfig,
    k1: float = DEFAULT_K1,
    b: float = DEFAULT_B,
) -> str:
    """Compress one chunk; at rate 1.0 the output equals the input exactly."""
    if not chunk_text:
        return chunk_text
    sentences = split_sentences(chunk_text)
    corpus = [(str(i), tokenize(s.text, tokenizer)) for i, s in enumerate(sentences)]
    scores = score_all(build_index(corpus, k1, b), tokenize(query, tokenizer))

    order = sorted(range(len(sentences)), key=lambda i: (-scores[i], i))
    budget = params.rate * len(chunk_text)
    admitted: list[int] = []
    used = 0
    for i in order:
        length = len(sentences[i].text)
        if len(admitted) < params.min_sentences:
            admitted.append(i)
            used += length
            continue
        if used + length > budget:
            break
        admitted.append(i)
        used += length
    return "".join(sentences[i].text for i in sorted(admitted))


def compress_contexts(
    query: str,
    chunks: Sequence,
    params: CompressionParams,
    tokenizer: TokenizerConfig,
) -> list:
    """Apply bm25_extract to each chunk independently; metadata untouched."""
    return [
        replace(chunk, text=bm25_extract(query, chunk.text, params, tokenizer))
        for chunk in chunks
    ]
