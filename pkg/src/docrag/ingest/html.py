"""Tolerant HTML-to-text extraction keeping table/list structure and images.

Built on the stdlib ``html.parser`` so broken markup is accepted. The body
is assembled line by line: block elements start new lines, table rows become
``cell | cell`` lines and list items become ``- item`` lines, which keeps the
markdown-like structure of the source documents as plain text.
"""
from __future__ import annotations

import unicodedata
from dataclasses import dataclass, field, replace
from html.parser import HTMLParser

from ..errors import DocumentDecodeError
from .sentences import split_sentences

# Content of these elements never reaches the body.
_SKIPPED = {"script", "style", "noscript", "template", "head"}

# Elements that open and close a body line.
_BLOCK = {
    "p", "div", "h1", "h2", "h3", "h4", "h5", "h6", "li", "tr", "table",
    "thead", "tbody", "tfoot", "ul", "ol", "dl", "dt", "dd", "section",
    "article", "aside", "header", "footer", "main", "nav", "figure",
    "figcaption", "blockquote", "pre", "caption", "form", "hr",
}

_CELL = {"td", "th"}


@dataclass(frozen=True)
class ImageRef:
    """An image occurrence inside a source document."""

    image_path: str
    title: str = ""
    reference_context: str = ""
    extracted_text: str | None = None
    caption: str | None = None
    anchor: int = 0  # character offset into the document body

    def to_dict(self) -> dict:
        return {
            "image_path": self.image_path,
            "title": self.title,
            "reference_context": self.reference_context,
            "extracted_text": self.extracted_text,
            "caption": self.caption,
            "anchor": self.anchor,
        }


@dataclass(frozen=True)
class SourceDocument:
    doc_id: str
    file_path: str
    knowledge_path: str
    body: str
    images: tuple[ImageRef, ...] = field(default_factory=tuple)


class _Extractor(HTMLParser):
    def __init__(self) -> None:
        super().__init__(convert_charrefs=True)
        self.lines: list[str] = []
        self._buf: list[str] = []
        self._skip_depth = 0
        self._row_depth = 0
        self._cell_open = False
        self._pending_li = False
        # images: (src, attr_title, line_index, offset_in_line)
        self._images: list[tuple[str, str, int, int]] = []
        # stack of open figures: ([image indexes], [caption parts])
        self._figures: list[tuple[list[int], list[str]]] = []
        self._in_figcaption = False

    # -- line assembly -------------------------------------------------
    def _flush(self) -> None:
        line = unicodedata.normalize("NFC", " ".join("".join(self._buf).split()))
        self._buf = []
        self._pending_li = False
        if line:
            self.lines.append(line)

    def _append_text(self, text: str) -> None:
        if self._pending_li:
            self._buf.append("- ")
            self._pending_li = False
        self._buf.append(text)

    # -- parser callbacks ----------------------------------------------
    def handle_starttag(self, tag: str, attrs) -> None:
        if tag in _SKIPPED:
            self._skip_depth += 1
            return
        if self._skip_depth:
            return
        attrd = dict(attrs)
        if tag == "br":
            self._flush()
            return
        if tag == "img":
            src = (attrd.get("src") or "").strip()
            if src:
                title = (attrd.get("alt") or attrd.get("title") or "").strip()
                idx = len(self._images)
                self._images.append((src, title, len(self.lines), self._buf_len()))
                if self._figures:
                    self._figures[-1][0].append(idx)
            return
        if tag in _CELL:
            if self._cell_open:
                self._append_text(" | ")
            self._cell_open = True
            return
        if tag in _BLOCK:
            self._flush()
            if tag == "tr":
                self._row_depth += 1
                self._cell_open = False
            elif tag == "li":
                self._pending_li = True
            elif tag == "figure":
                self._figures.append(([], []))
            elif tag == "figcaption":
                self._in_figcaption = True

    def handle_endtag(self, tag: str) -> None:
        if tag in _SKIPPED:
            self._skip_depth = max(0, self._skip_depth - 1)
            return
        if self._skip_depth:
            return
        if tag in _CELL:
            return
        if tag in _BLOCK:
            if tag == "figcaption":
                self._in_figcaption = False
            self._flush()
            if tag == "tr":
                self._row_depth = max(0, self._row_depth - 1)
                self._cell_open = False
            elif tag == "figure" and self._figures:
                img_idxs, caption_parts = self._figures.pop()
                caption = " ".join("".join(caption_parts).split())
                if caption:
                    for idx in img_idxs:
                        src, title, li, off = self._images[idx]
                        if not title:
                            self._images[idx] = (src, caption, li, off)

    def handle_data(self, data: str) -> None:
        if self._skip_depth or not data:
            return
        if self._in_figcaption and self._figures:
            self._figures[-1][1].append(data)
        self._append_text(data)

    def _buf_len(self) -> int:
        return len(" ".join("".join(self._buf).split()))

    def finish(self) -> tuple[str, list[tuple[str, str, int]]]:
        """Return (body, [(src, title, anchor)]) with anchors into the body."""
        self._flush()
        body = "\n".join(self.lines)
        starts = []
        pos = 0
        for line in self.lines:
            starts.append(pos)
            pos += len(line) + 1
        images = []
        for src, title, line_idx, off in self._images:
            if line_idx < len(starts):
                anchor = starts[line_idx] + min(off, len(self.lines[line_idx]))
            else:
                anchor = len(body)
            images.append((src, title, min(anchor, len(body))))
        return body, images


def _reference_sentence(body: str, anchor: int) -> str:
    """The non-blank sentence surrounding (or preceding) a body offset."""
    if not body:
        return ""
    target = min(max(anchor - 1, 0), len(body) - 1)
    sentences = split_sentences(body)
    idx = next(
        (i for i, s in enumerate(sentences) if s.start <= target < s.end), None
    )
    if idx is None:
        return ""
    while idx >= 0 and not sentences[idx].text.strip():
        idx -= 1
    return sentences[idx].text if idx >= 0 else ""


def extract_document(
    html_bytes: bytes,
    knowledge_path: str,
    file_path: str,
    doc_id: str | None = None,
) -> SourceDocument:
    """Parse one HTML file into a SourceDocument.

    Raises DocumentDecodeError (naming the file) when the bytes are not
    valid UTF-8; script/style content never appears in the body.
    """
    try:
        text = html_bytes.decode("utf-8-sig")
    except UnicodeDecodeError as exc:
        raise DocumentDecodeError(f"cannot decode {file_path}: {exc}") from exc

    parser = _Extractor()
    parser.feed(text)
    parser.close()
    body, raw_images = parser.finish()

    images = tuple(
        ImageRef(
            image_path=src,
            title=title,
            reference_context=_reference_sentence(body, anchor),
            anchor=anchor,
        )
        for src, title, anchor in raw_images
    )
    return SourceDocument(
        doc_id=doc_id if doc_id is not None else file_path,
        file_path=file_path,
        knowledge_path=knowledge_path,
        body=body,
        images=images,
    )


def with_images(doc: SourceDocument, images: tuple[ImageRef, ...]) -> SourceDocument:
    return replace(doc, images=images)
