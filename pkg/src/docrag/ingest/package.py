"""Whole-package ingestion: dir/zip of HTML files plus a node-tree manifest."""
from __future__ import annotations

import json
import posixpath
import zipfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

from ..errors import ConfigError, DocragError, WarningRecord
from .chunking import Chunk, ChunkingParams, split_chunks
from .html import SourceDocument, extract_document, with_images
from .images import (
    DEFAULT_CAPTION_PROMPT,
    ImageCaptioner,
    ImageFilterConfig,
    OcrEngine,
    caption_images,
    filter_images,
)
from .nodetree import parse_node_tree


@dataclass
class IngestResult:
    documents: list[SourceDocument] = field(default_factory=list)
    chunks: list[Chunk] = field(default_factory=list)
    warnings: list[WarningRecord] = field(default_factory=list)


class _PackageReader:
    """Uniform byte access over a directory or a zip archive."""

    def __init__(self, src: str | Path) -> None:
        self.src = Path(src)
        self._zip: zipfile.ZipFile | None = None
        if self.src.is_dir():
            self.names = sorted(
                p.relative_to(self.src).as_posix()
                for p in self.src.rglob("*")
                if p.is_file()
            )
        elif zipfile.is_zipfile(self.src):
            self._zip = zipfile.ZipFile(self.src)
            self.names = sorted(
                n for n in self._zip.namelist() if not n.endswith("/")
            )
        else:
            raise ConfigError(f"source {src} is neither a directory nor a zip archive")

    def read(self, name: str) -> bytes:
        if self._zip is not None:
            return self._zip.read(name)
        return (self.src / name).read_bytes()

    def close(self) -> None:
        if self._zip is not None:
            self._zip.close()


def _find_manifest(reader: _PackageReader) -> str:
    candidates = [n for n in reader.names if posixpath.basename(n).lower() == "nodetree.xml"]
    if not candidates:
        raise ConfigError(f"no nodetree.xml manifest found in {reader.src}")
    return min(candidates, key=lambda n: (n.count("/"), n))


def _resolve(reader: _PackageReader, manifest_dir: str, file_path: str) -> str | None:
    clean = posixpath.normpath(file_path.replace("\\", "/")).lstrip("./")
    for candidate in (posixpath.join(manifest_dir, clean) if manifest_dir else clean, clean):
        if candidate in reader.names:
            return candidate
    return None


def ingest_package(
    src: str | Path,
    params: ChunkingParams | None = None,
    image_rules: ImageFilterConfig | None = None,
    ocr: OcrEngine | None = None,
    captioner: ImageCaptioner | None = None,
    caption_prompt: str = DEFAULT_CAPTION_PROMPT,
    workers: int = 1,
) -> IngestResult:
    """Ingest one documentation package into documents and chunks.

    Document order always follows the manifest regardless of worker
    scheduling. Per-document failures become warning records and the
    document is skipped; only a missing/broken manifest aborts the run.
    """
    params = params or ChunkingParams()
    rules = image_rules or ImageFilterConfig()
    result = IngestResult()
    reader = _PackageReader(src)
    try:
        manifest_name = _find_manifest(reader)
        manifest_dir = posixpath.dirname(manifest_name)
        entries = parse_node_tree(reader.read(manifest_name), result.warnings)

        seen: dict[str, int] = {}
        jobs = []
        for knowledge_path, file_path in entries:
            n = seen.get(file_path, 0)
            seen[file_path] = n + 1
            doc_id = file_path if n == 0 else f"{file_path}#{n}"
            jobs.append((knowledge_path, file_path, doc_id))

        def process(job: tuple[str, str, str]):
            knowledge_path, file_path, doc_id = job
            warnings: list[WarningRecord] = []
            resolved = _resolve(reader, manifest_dir, file_path)
            if resolved is None:
                warnings.append(
                    WarningRecord("ingest", file_path, "file missing from package; skipped")
                )
                return None, None, warnings
            try:
                doc = extract_document(
                    reader.read(resolved), knowledge_path, file_path, doc_id=doc_id
                )
            except DocragError as exc:
                warnings.append(WarningRecord("ingest", file_path, str(exc)))
                return None, None, warnings
            images = list(doc.images)
            if ocr is not None:
                refreshed = []
                for img in images:
                    try:
                        text = ocr.extract_text(img.image_path)
                    except Exception as exc:
                        warnings.append(
                            WarningRecord("ocr", img.image_path, f"ocr failed: {exc}")
                        )
                        refreshed.append(img)
                        continue
                    refreshed.append(replace(img, extracted_text=text))
                images = refreshed
            images = filter_images(images, rules)
            if captioner is not None:
                images = caption_images(images, captioner, caption_prompt, warnings)
            doc = with_images(doc, tuple(images))
            return doc, split_chunks(doc, params), warnings

        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                outputs = list(pool.map(process, jobs))
        else:
            outputs = [process(job) for job in jobs]

        for doc, chunks, warnings in outputs:
            result.warnings.extend(warnings)
            if doc is not None:
                result.documents.append(doc)
                result.chunks.extend(chunks)
    finally:
        reader.close()
    return result


def write_ingest_outputs(result: IngestResult, out_dir: str | Path) -> None:
    """Write chunk store, document manifest and warnings as JSONL files."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    _write_jsonl(out / "chunks.jsonl", (c.to_dict() for c in result.chunks))
    _write_jsonl(
        out / "documents.jsonl",
        (
            {
                "doc_id": d.doc_id,
                "file_path": d.file_path,
                "knowledge_path": d.knowledge_path,
                "n_chars": len(d.body),
                "images": [img.to_dict() for img in d.images],
            }
            for d in result.documents
        ),
    )
    _write_jsonl(out / "warnings.jsonl", (w.to_dict() for w in result.warnings))


def load_chunks(path: str | Path) -> list[Chunk]:
    chunks = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                chunks.append(Chunk.from_dict(json.loads(line)))
    return chunks


def _write_jsonl(path: Path, records) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record, ensure_ascii=False, sort_keys=True))
            fh.write("\n")
