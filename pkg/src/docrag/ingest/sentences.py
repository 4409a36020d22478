"""Sentence splitting with CJK punctuation plus guarded ASCII terminators."""
from __future__ import annotations

from typing import NamedTuple

# Full-stop style CJK punctuation and newline always terminate a sentence.
DEFAULT_TERMINATORS = frozenset("。！？；\n")
# ASCII terminators only count when followed by whitespace (or end of text),
# so "3.14" or "v1.2" never split.
DEFAULT_ASCII_TERMINATORS = frozenset(".!?;")


class Sentence(NamedTuple):
    text: str
    start: int
    end: int


def split_sentences(
    text: str,
    terminators: frozenset[str] = DEFAULT_TERMINATORS,
    ascii_terminators: frozenset[str] = DEFAULT_ASCII_TERMINATORS,
) -> list[Sentence]:
    """Split text into sentences with contiguous, covering character spans.

    Every sentence ends at a terminator character or at end-of-text; the
    concatenation of all sentence texts reproduces the input exactly.
    """
    sentences: list[Sentence] = []
    n = len(text)
    start = 0
    i = 0
    while i < n:
        ch = text[i]
        is_end = ch in terminators or (
            ch in ascii_terminators and (i + 1 == n or text[i + 1].isspace())
        )
        if is_end:
            sentences.append(Sentence(text[start : i + 1], start, i + 1))
            start = i + 1
        i += 1
    if start < n:
        sentences.append(Sentence(text[start:], start, n))
    return sentences
