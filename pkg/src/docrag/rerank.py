"""Second-stage re-ranking with a layerwise cross-scorer and early exit.

The scorer can emit relevance scores from intermediate depths. The
max-similarity policy checks the softmax of the first batch's scores at the
shallow layer: if any value clears the threshold the whole candidate list is
scored shallow, otherwise everything is scored at the deep layer. An
entropy-based policy is available as a baseline.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Mapping, Protocol, Sequence, runtime_checkable

import httpx
import numpy as np

from .errors import BackendError, BackendUnavailableError, ConfigError, StageError
from .models import ExpansionMode, ScoredHit, expand_document
from .tokenization import TokenizerConfig, tokenize

DEFAULT_RERANK_K = 6
DEFAULT_BATCH_SIZE = 32
DEFAULT_LAYERS = (8, 12, 20, 28, 40)


@runtime_checkable
class LayerwiseScorer(Protocol):
    available_layers: tuple[int, ...]

    def score(self, query: str, documents: Sequence[str], layer: int) -> list[float]:
        """Raw relevance score per document; deterministic per (q, d, layer)."""


class ExitMode(str, Enum):
    OFF = "off"
    MAX_SIMILARITY = "max_similarity"
    ENTROPY = "entropy"


@dataclass(frozen=True)
class EarlyExitPolicy:
    mode: ExitMode = ExitMode.OFF
    shallow_layer: int = 12
    deep_layer: int = 28
    threshold: float = 0.4

    def __post_init__(self) -> None:
        if self.shallow_layer >= self.deep_layer:
            raise ConfigError("shallow_layer must be below deep_layer")
        if not 0.0 <= self.threshold <= 1.0:
            raise ConfigError("early-exit threshold must be in [0, 1]")


def softmax(scores: Sequence[float]) -> np.ndarray:
    xs = np.asarray(scores, dtype=np.float64)
    xs = np.exp(xs - xs.max())
    return xs / xs.sum()


def early_exit_decision(first_batch_scores: Sequence[float], threshold: float) -> bool:
    """True when the first batch's max softmax value strictly exceeds the
    threshold (confident shallow ranking)."""
    if len(first_batch_scores) == 0:
        raise ValueError("early-exit decision needs a non-empty batch")
    return float(softmax(first_batch_scores).max()) > threshold


def entropy_exit_decision(first_batch_scores: Sequence[float], threshold: float) -> bool:
    """True when the normalized softmax entropy is strictly below the
    threshold. Entropy is normalized by ln(n); a single-element batch has
    zero entropy by convention."""
    if len(first_batch_scores) == 0:
        raise ValueError("early-exit decision needs a non-empty batch")
    probs = softmax(first_batch_scores)
    n = len(probs)
    if n == 1:
        return 0.0 < threshold
    entropy = float(-(probs * np.log(probs)).sum())
    return entropy / math.log(n) < threshold


def _score_batched(
    scorer: LayerwiseScorer,
    query: str,
    documents: Sequence[str],
    layer: int,
    batch_size: int,
) -> list[float]:
    scores: list[float] = []
    for lo in range(0, len(documents), batch_size):
        scores.extend(scorer.score(query, documents[lo : lo + batch_size], layer))
    return scores


def rerank(
    query: str,
    hits: Sequence[ScoredHit],
    chunks: Mapping[str, object],
    scorer: LayerwiseScorer,
    k: int = DEFAULT_RERANK_K,
    expansion: ExpansionMode = ExpansionMode.FILE_PATH,
    policy: EarlyExitPolicy | None = None,
    batch_size: int = DEFAULT_BATCH_SIZE,
) -> list[ScoredHit]:
    """Score hits with the cross-scorer and return the top k.

    With the policy off, everything is scored at the deep layer. Otherwise
    the exit decision runs on the first batch at the shallow layer; if it
    fires, all hits are scored shallow, else all at the deep layer. Ties
    keep the prior coarse order.
    """
    if not hits:
        return []
    policy = policy or EarlyExitPolicy()
    available = tuple(scorer.available_layers)
    for layer in (policy.shallow_layer, policy.deep_layer):
        if layer not in available:
            raise ConfigError(f"layer {layer} not offered by scorer (has {available})")

    documents = [expand_document(chunks[h.chunk_id], expansion) for h in hits]
    try:
        if policy.mode == ExitMode.OFF:
            scores = _score_batched(scorer, query, documents, policy.deep_layer, batch_size)
        else:
            first = scorer.score(query, documents[:batch_size], policy.shallow_layer)
            decide = (
                early_exit_decision
                if policy.mode == ExitMode.MAX_SIMILARITY
                else entropy_exit_decision
            )
            if decide(first, policy.threshold):
                rest = _score_batched(
                    scorer, query, documents[batch_size:], policy.shallow_layer, batch_size
                )
                scores = list(first) + rest
            else:
                scores = _score_batched(
                    scorer, query, documents, policy.deep_layer, batch_size
                )
    except (ConfigError, StageError, BackendError):
        raise
    except Exception as exc:
        raise StageError("rerank", f"scorer failed: {exc}") from exc

    ranked = sorted(zip(hits, scores), key=lambda pair: -pair[1])
    return [
        ScoredHit(hit.chunk_id, float(score), rank, hit.route)
        for rank, (hit, score) in enumerate(ranked[:k], 1)
    ]


class HttpLayerwiseScorer:
    """Client for a layerwise scoring endpoint.

    POSTs ``{"query", "documents", "layer"}`` to ``<base_url>/score`` and
    expects ``{"scores": [...]}``. The layer parameter is mandatory.
    """

    def __init__(
        self,
        base_url: str,
        available_layers: tuple[int, ...] = DEFAULT_LAYERS,
        timeout: float = 60.0,
    ) -> None:
        self.base_url = base_url.rstrip("/")
        self.available_layers = available_layers
        self._client = httpx.Client(timeout=timeout)

    def score(self, query: str, documents: Sequence[str], layer: int) -> list[float]:
        try:
            response = self._client.post(
                f"{self.base_url}/score",
                json={"query": query, "documents": list(documents), "layer": layer},
            )
        except httpx.TransportError as exc:
            raise BackendUnavailableError(f"scorer backend unreachable: {exc}") from exc
        if response.status_code != 200:
            raise BackendError(f"scorer backend returned {response.status_code}")
        scores = response.json()["scores"]
        if len(scores) != len(documents):
            raise BackendError("scorer returned wrong number of scores")
        return [float(s) for s in scores]


# -- deterministic scorer backends for tests and degraded deployments ----


class TokenOverlapScorer:
    """Layer-agnostic lexical scorer: every layer returns identical scores,
    so any early-exit policy ranks exactly like the policy-off path."""

    def __init__(self, available_layers: tuple[int, ...] = DEFAULT_LAYERS) -> None:
        self.available_layers = available_layers
        self._tokenizer = TokenizerConfig()

    def score(self, query: str, documents: Sequence[str], layer: int) -> list[float]:
        if layer not in self.available_layers:
            raise ValueError(f"layer {layer} unavailable")
        q = set(tokenize(query, self._tokenizer))
        out = []
        for doc in documents:
            d = set(tokenize(doc, self._tokenizer))
            union = len(q | d)
            out.append(len(q & d) / union if union else 0.0)
        return out


class UniformScorer:
    """Every document scores the same: softmax is uniform, so the
    max-similarity policy exits only when 1/batch > threshold."""

    def __init__(
        self, value: float = 0.0, available_layers: tuple[int, ...] = DEFAULT_LAYERS
    ) -> None:
        self.value = value
        self.available_layers = available_layers

    def score(self, query: str, documents: Sequence[str], layer: int) -> list[float]:
        return [self.value] * len(documents)


class PeakedScorer:
    """Scores a document high when it contains a marker substring.

    With exactly one marked document in the first batch, the shallow softmax
    is strongly peaked and the max-similarity exit fires.
    """

    def __init__(
        self,
        marker: str,
        peak: float = 10.0,
        available_layers: tuple[int, ...] = DEFAULT_LAYERS,
    ) -> None:
        self.marker = marker
        self.peak = peak
        self.available_layers = available_layers

    def score(self, query: str, documents: Sequence[str], layer: int) -> list[float]:
        return [self.peak if self.marker in doc else 0.0 for doc in documents]
