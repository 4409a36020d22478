"""Documentation package ingestion: manifest parsing, HTML extraction,
sentence splitting, path-stable chunking and image filtering."""

from .chunking import Chunk, ChunkingParams, split_chunks
from .html import ImageRef, SourceDocument, extract_document
from .images import (
    ImageCaptioner,
    ImageFilterConfig,
    OcrEngine,
    caption_images,
    filter_images,
)
from .nodetree import parse_node_tree
from .package import IngestResult, ingest_package, load_chunks, write_ingest_outputs
from .sentences import Sentence, split_sentences

__all__ = [
    "Chunk",
    "ChunkingParams",
    "ImageCaptioner",
    "ImageFilterConfig",
    "ImageRef",
    "IngestResult",
    "OcrEngine",
    "Sentence",
    "SourceDocument",
    "caption_images",
    "extract_document",
    "filter_images",
    "ingest_package",
    "load_chunks",
    "parse_node_tree",
    "split_chunks",
    "split_sentences",
    "write_ingest_outputs",
]
