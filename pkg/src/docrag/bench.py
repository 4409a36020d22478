"""Synthetic-corpus benchmark comparing eager BM25 retrieval against a
naive per-document reference scorer."""
from __future__ import annotations

import math
import random
import time
from collections import Counter
from dataclasses import dataclass
from typing import Sequence

from .sparse import DEFAULT_B, DEFAULT_K1, build_index, retrieve


class NaiveOkapi:
    """Straightforward Okapi scorer: walks every document per query.

    Implements the same formula as the eager index (including the
    non-negative IDF variant) without any precomputed score structure.
    """

    def __init__(
        self,
        corpus_tokens: Sequence[Sequence[str]],
        k1: float = DEFAULT_K1,
        b: float = DEFAULT_B,
    ) -> None:
        self.k1 = k1
        self.b = b
        self.tfs = [Counter(tokens) for tokens in corpus_tokens]
        self.doc_len = [len(tokens) for tokens in corpus_tokens]
        n = len(corpus_tokens)
        self.avg_len = sum(self.doc_len) / n if n else 0.0
        df: Counter = Counter()
        for tf in self.tfs:
            df.update(tf.keys())
        self.idf = {
            term: math.log((n - count + 0.5) / (count + 0.5) + 1.0)
            for term, count in df.items()
        }

    def get_scores(self, query: Sequence[str]) -> list[float]:
        scores = []
        avg = self.avg_len if self.avg_len > 0 else 1.0
        for tf, length in zip(self.tfs, self.doc_len):
            score = 0.0
            for term in query:
                freq = tf.get(term)
                if not freq:
                    continue
                norm = freq + self.k1 * (1.0 - self.b + self.b * length / avg)
                score += self.idf[term] * freq * (self.k1 + 1.0) / norm
            scores.append(score)
        return scores

    def top_k(self, query: Sequence[str], k: int) -> list[tuple[int, float]]:
        scores = self.get_scores(query)
        ranked = sorted(
            ((i, s) for i, s in enumerate(scores) if s > 0.0),
            key=lambda pair: (-pair[1], pair[0]),
        )
        return ranked[:k]


def synthetic_corpus(
    n_docs: int,
    vocab_size: int = 2000,
    min_len: int = 10,
    max_len: int = 60,
    seed: int = 13,
) -> list[list[str]]:
    rng = random.Random(seed)
    vocab = [f"t{i}" for i in range(vocab_size)]
    return [
        [vocab[rng.randrange(vocab_size)] for _ in range(rng.randint(min_len, max_len))]
        for _ in range(n_docs)
    ]


def synthetic_queries(
    n_queries: int, vocab_size: int = 2000, min_terms: int = 3, max_terms: int = 8,
    seed: int = 29,
) -> list[list[str]]:
    rng = random.Random(seed)
    return [
        [f"t{rng.randrange(vocab_size)}" for _ in range(rng.randint(min_terms, max_terms))]
        for _ in range(n_queries)
    ]


@dataclass
class BenchResult:
    n_docs: int
    n_queries: int
    naive_seconds: float
    eager_seconds: float

    @property
    def speedup(self) -> float:
        return self.naive_seconds / self.eager_seconds if self.eager_seconds else float("inf")


def run_bm25_bench(
    n_docs: int = 10_000,
    n_queries: int = 1_000,
    top_k: int = 192,
    vocab_size: int = 2000,
    seed: int = 13,
) -> BenchResult:
    """Time the same query batch through both scorers."""
    corpus_tokens = synthetic_corpus(n_docs, vocab_size, seed=seed)
    queries = synthetic_queries(n_queries, vocab_size, seed=seed + 1)

    naive = NaiveOkapi(corpus_tokens)
    t0 = time.perf_counter()
    for query in queries:
        naive.top_k(query, top_k)
    naive_seconds = time.perf_counter() - t0

    index = build_index([(f"d{i}", toks) for i, toks in enumerate(corpus_tokens)])
    t0 = time.perf_counter()
    for query in queries:
        retrieve(index, query, top_k)
    eager_seconds = time.perf_counter() - t0

    return BenchResult(n_docs, n_queries, naive_seconds, eager_seconds)
