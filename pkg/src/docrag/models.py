"""Core retrieval data types shared by the sparse, dense and rerank stages."""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum


class Route(str, Enum):
    """Provenance of a retrieval hit."""

    CHUNK = "chunk"
    PATH = "path"
    DENSE = "dense"


class ExpansionMode(str, Enum):
    """How a chunk is expanded with path metadata before scoring."""

    NONE = "none"
    FILE_PATH = "file_path"
    KNOWLEDGE_PATH = "knowledge_path"


@dataclass(frozen=True)
class ScoredHit:
    """A chunk reference with score, 1-based rank and route provenance."""

    chunk_id: str
    score: float
    rank: int
    route: Route


def expand_document(chunk, mode: ExpansionMode) -> str:
    """Return the text used for scoring: path metadata prepended per mode.

    Works on any object exposing ``text``, ``file_path`` and
    ``knowledge_path`` attributes.
    """
    if mode == ExpansionMode.NONE:
        return chunk.text
    if mode == ExpansionMode.FILE_PATH:
        return f"{chunk.file_path}\n{chunk.text}"
    if mode == ExpansionMode.KNOWLEDGE_PATH:
        return f"{chunk.knowledge_path}\n{chunk.text}"
    raise ValueError(f"unknown expansion mode: {mode!r}")
