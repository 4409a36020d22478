"""Path-stable greedy sentence packing into fixed-size overlapping chunks.

Chunk boundaries are a pure function of the document body text: file paths
and knowledge paths are carried as metadata but never enter the size
arithmetic, so the same body always chunks identically wherever it lives.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .html import SourceDocument
from .sentences import (
    DEFAULT_ASCII_TERMINATORS,
    DEFAULT_TERMINATORS,
    Sentence,
    split_sentences,
)


@dataclass(frozen=True)
class ChunkingParams:
    chunk_size: int = 1024
    chunk_overlap: int = 200
    terminators: frozenset[str] = DEFAULT_TERMINATORS
    ascii_terminators: frozenset[str] = DEFAULT_ASCII_TERMINATORS

    def __post_init__(self) -> None:
        if self.chunk_size <= 0:
            raise ValueError("chunk_size must be positive")
        if not 0 <= self.chunk_overlap < self.chunk_size:
            raise ValueError("chunk_overlap must satisfy 0 <= overlap < chunk_size")


@dataclass(frozen=True)
class Chunk:
    """A contiguous slice of a document body used as the retrieval unit."""

    chunk_id: str
    doc_id: str
    text: str
    char_span: tuple[int, int]
    file_path: str
    knowledge_path: str
    image_captions: tuple[str, ...] = field(default_factory=tuple)

    def to_dict(self) -> dict:
        return {
            "chunk_id": self.chunk_id,
            "doc_id": self.doc_id,
            "text": self.text,
            "char_span": list(self.char_span),
            "file_path": self.file_path,
            "knowledge_path": self.knowledge_path,
            "image_captions": list(self.image_captions),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Chunk":
        return cls(
            chunk_id=d["chunk_id"],
            doc_id=d["doc_id"],
            text=d["text"],
            char_span=tuple(d["char_span"]),
            file_path=d["file_path"],
            knowledge_path=d["knowledge_path"],
            image_captions=tuple(d.get("image_captions", ())),
        )


def _pieces(body: str, params: ChunkingParams) -> list[Sentence]:
    """Sentences of the body, with any oversized sentence hard-split at
    chunk_size boundaries so every piece fits in a chunk."""
    pieces: list[Sentence] = []
    for sent in split_sentences(body, params.terminators, params.ascii_terminators):
        if len(sent.text) <= params.chunk_size:
            pieces.append(sent)
            continue
        for off in range(0, len(sent.text), params.chunk_size):
            start = sent.start + off
            end = min(sent.start + off + params.chunk_size, sent.end)
            pieces.append(Sentence(body[start:end], start, end))
    return pieces


def pack_spans(body: str, params: ChunkingParams) -> list[tuple[int, int]]:
    """Greedy packing of sentences into chunk spans.

    Rules:
      * sentences are appended while the chunk stays within chunk_size;
      * when a sentence does not fit, the chunk is emitted and the next
        chunk starts with the largest suffix of whole trailing sentences
        whose total length is <= chunk_overlap and still leaves room for
        the incoming sentence;
      * a sentence longer than chunk_size is hard-split beforehand.
    """
    pieces = _pieces(body, params)
    if not pieces:
        return []

    spans: list[tuple[int, int]] = []
    current: list[Sentence] = []
    cur_len = 0
    for piece in pieces:
        if current and cur_len + len(piece.text) > params.chunk_size:
            spans.append((current[0].start, current[-1].end))
            overlap: list[Sentence] = []
            budget = min(params.chunk_overlap, params.chunk_size - len(piece.text))
            total = 0
            for prev in reversed(current):
                if total + len(prev.text) > budget:
                    break
                overlap.insert(0, prev)
                total += len(prev.text)
            current = overlap
            cur_len = total
        current.append(piece)
        cur_len += len(piece.text)
    spans.append((current[0].start, current[-1].end))
    return spans


def split_chunks(doc: SourceDocument, params: ChunkingParams) -> list[Chunk]:
    """Chunk a document body.

    Captions of retained images attach to the chunk whose span contains the
    image anchor (the last chunk for images past the end of the body); they
    never influence chunk boundaries.
    """
    spans = pack_spans(doc.body, params)
    captions: list[list[str]] = [[] for _ in spans]
    if spans:
        for img in doc.images:
            if not img.caption:
                continue
            target = len(spans) - 1
            for i, (start, end) in enumerate(spans):
                if start <= img.anchor < end:
                    target = i
                    break
            captions[target].append(img.caption)
    chunks = []
    for i, (start, end) in enumerate(spans):
        chunks.append(
            Chunk(
                chunk_id=f"{doc.doc_id}:{start}",
                doc_id=doc.doc_id,
                text=doc.body[start:end],
                char_span=(start, end),
                file_path=doc.file_path,
                knowledge_path=doc.knowledge_path,
                image_captions=tuple(captions[i]),
            )
        )
    return chunks
