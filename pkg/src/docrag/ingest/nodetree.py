"""Node-tree manifest parsing: map leaves to (knowledge_path, file_path)."""
from __future__ import annotations

import xml.etree.ElementTree as ET
from xml.etree.ElementTree import Element

from ..errors import ManifestParseError, WarningRecord

_FILE_ATTRS = ("file", "url", "href")


def _title(elem: Element) -> str | None:
    return elem.get("title") or elem.get("name")


def _has_named(elem: Element) -> bool:
    if _title(elem) is not None:
        return True
    return any(_has_named(child) for child in elem)


def _byte_offset(data: bytes, line: int, column: int) -> int:
    lines = data.split(b"\n")
    offset = sum(len(l) + 1 for l in lines[: max(line - 1, 0)])
    return offset + column


def parse_node_tree(
    manifest_bytes: bytes,
    warnings: list[WarningRecord] | None = None,
) -> list[tuple[str, str]]:
    """Extract (knowledge_path, file_path) pairs from a node-tree manifest.

    Nodes are elements carrying a ``title`` (or ``name``) attribute; the
    knowledge path joins ancestor titles with "/". A leaf is a named node
    with no named descendants; leaves without a file attribute are skipped
    with a warning record. Entries follow document order.
    """
    try:
        root = ET.fromstring(manifest_bytes)
    except ET.ParseError as exc:
        line, column = exc.position
        raise ManifestParseError(
            f"malformed manifest XML: {exc.msg}",
            _byte_offset(manifest_bytes, line, column),
        ) from exc

    entries: list[tuple[str, str]] = []

    def walk(elem: Element, titles: tuple[str, ...]) -> None:
        title = _title(elem)
        path = titles + (title,) if title is not None else titles
        named_kids = [child for child in elem if _has_named(child)]
        if title is not None and not named_kids:
            file_path = next(
                (elem.get(a) for a in _FILE_ATTRS if elem.get(a)), None
            )
            if file_path:
                entries.append(("/".join(path), file_path))
            elif warnings is not None:
                warnings.append(
                    WarningRecord(
                        stage="manifest",
                        subject="/".join(path),
                        message="leaf node has no file attribute; skipped",
                    )
                )
            return
        for child in elem:
            walk(child, path)

    walk(root, ())
    return entries
