"""Rank fusion across retrieval routes, plus answer-level fusion.

Merged lists keep each hit's original score for provenance; those scores
come from different routes and are not comparable, so only order matters
downstream (the reranker replaces them anyway).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .errors import ConfigError
from .models import ScoredHit


@dataclass
class RankedList:
    route: str
    hits: list[ScoredHit]


def simple_merge(lists: Sequence[RankedList]) -> RankedList:
    """Concatenate in route order, keep first occurrence of each chunk,
    reassign ranks 1..n."""
    seen: set[str] = set()
    merged: list[ScoredHit] = []
    for ranked in lists:
        for hit in ranked.hits:
            if hit.chunk_id in seen:
                continue
            seen.add(hit.chunk_id)
            merged.append(ScoredHit(hit.chunk_id, hit.score, len(merged) + 1, hit.route))
    return RankedList(route="merged", hits=merged)


def rrf(lists: Sequence[RankedList], k_offset: float = 0.0) -> RankedList:
    """Reciprocal rank fusion: fused(d) = sum over lists of 1/(k_offset + rank).

    Ties break by earliest route order, then by the earlier rank there.
    k_offset defaults to 0 (plain reciprocal ranks); 60 is the conventional
    alternative.
    """
    if k_offset < 0:
        raise ConfigError("rrf k_offset must be >= 0")
    fused: dict[str, float] = {}
    first_seen: dict[str, tuple[int, int, ScoredHit]] = {}
    for route_idx, ranked in enumerate(lists):
        for hit in ranked.hits:
            fused[hit.chunk_id] = fused.get(hit.chunk_id, 0.0) + 1.0 / (k_offset + hit.rank)
            if hit.chunk_id not in first_seen:
                first_seen[hit.chunk_id] = (route_idx, hit.rank, hit)
    ordered = sorted(
        fused.items(),
        key=lambda item: (-item[1], first_seen[item[0]][0], first_seen[item[0]][1]),
    )
    hits = [
        ScoredHit(chunk_id, score, rank, first_seen[chunk_id][2].route)
        for rank, (chunk_id, score) in enumerate(ordered, 1)
    ]
    return RankedList(route="rrf", hits=hits)


def answer_fuse_longer(answers: Sequence[str]) -> str:
    """Longest answer by character count; ties keep the earlier route."""
    if not answers:
        raise ConfigError("answer fusion needs at least one answer")
    best = answers[0]
    for answer in answers[1:]:
        if len(answer) > len(best):
            best = answer
    return best


def answer_fuse_concat(answers: Sequence[str]) -> str:
    """All route answers joined with a blank line, in route order."""
    if not answers:
        raise ConfigError("answer fusion needs at least one answer")
    return "\n\n".join(answers)
