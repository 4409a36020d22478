"""Deterministic CJK-capable tokenization feeding all lexical scoring.

CJK runs are segmented by trie-based forward maximum matching against a
loadable dictionary, falling back to single characters for out-of-vocabulary
spans. Other alphanumeric runs become one token each (lowercased by
default). Everything else separates tokens and is dropped, and stopwords are
removed last, so the output never contains empty or punctuation tokens.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError

_END = "\0"  # trie end-of-word marker; cannot occur in a dictionary word


def _is_cjk(ch: str) -> bool:
    code = ord(ch)
    return 0x4E00 <= code <= 0x9FFF or 0x3400 <= code <= 0x4DBF


def _build_trie(words) -> dict:
    trie: dict = {}
    for word in words:
        node = trie
        for ch in word:
            node = node.setdefault(ch, {})
        node[_END] = True
    return trie


@dataclass
class TokenizerConfig:
    """Immutable-after-load tokenizer state; safe for concurrent use."""

    dictionary: dict[str, int] = field(default_factory=dict)
    stopwords: frozenset[str] = frozenset()
    lowercase_ascii: bool = True

    def __post_init__(self) -> None:
        for word, freq in self.dictionary.items():
            if not word:
                raise ConfigError("dictionary words must be non-empty")
            if freq <= 0:
                raise ConfigError(f"dictionary frequency for {word!r} must be > 0")
        self.stopwords = frozenset(self.stopwords)
        self._trie = _build_trie(self.dictionary)


def _segment_cjk(run: str, trie: dict) -> list[str]:
    tokens = []
    i = 0
    n = len(run)
    while i < n:
        node = trie
        best = 0
        j = i
        while j < n and run[j] in node:
            node = node[run[j]]
            j += 1
            if _END in node:
                best = j
        if best:
            tokens.append(run[i:best])
            i = best
        else:
            tokens.append(run[i])
            i += 1
    return tokens


def tokenize(text: str, config: TokenizerConfig) -> list[str]:
    """Pure function of (text, config); see module docstring for the rules."""
    tokens: list[str] = []
    n = len(text)
    i = 0
    while i < n:
        ch = text[i]
        if _is_cjk(ch):
            j = i
            while j < n and _is_cjk(text[j]):
                j += 1
            tokens.extend(_segment_cjk(text[i:j], config._trie))
            i = j
        elif ch.isalnum():
            j = i
            while j < n and text[j].isalnum() and not _is_cjk(text[j]):
                j += 1
            word = text[i:j]
            tokens.append(word.lower() if config.lowercase_ascii else word)
            i = j
        else:
            i += 1
    if config.stopwords:
        tokens = [t for t in tokens if t not in config.stopwords]
    return tokens


def load_dictionary(path: str | Path) -> dict[str, int]:
    """Read "word [frequency]" lines; duplicates keep the max frequency."""
    try:
        raw = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read dictionary file {path}: {exc}") from exc
    words: dict[str, int] = {}
    for lineno, line in enumerate(raw.splitlines(), 1):
        parts = line.split()
        if not parts:
            continue
        word = parts[0]
        if len(parts) > 1:
            try:
                freq = int(parts[1])
            except ValueError as exc:
                raise ConfigError(
                    f"{path}:{lineno}: frequency must be an integer, got {parts[1]!r}"
                ) from exc
        else:
            freq = 1
        if freq <= 0:
            raise ConfigError(f"{path}:{lineno}: frequency must be > 0")
        words[word] = max(freq, words.get(word, 0))
    return words


def load_stopwords(path: str | Path) -> set[str]:
    """One stopword per line, trimmed; blank lines ignored."""
    try:
        raw = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read stopword file {path}: {exc}") from exc
    return {line.strip() for line in raw.splitlines() if line.strip()}
