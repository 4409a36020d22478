"""Context assembly, templated answer generation and answer optimization.

Image captions enter the pipeline only here: retrieval and reranking score
bare chunk text, while the generation context may append captions (flag
controlled).
"""
from __future__ import annotations

from typing import Sequence

from ..errors import BackendError, StageError, WarningRecord
from .client import ChatClient
from .templates import QaTemplate, render

ANSWER_CONCAT_SEPARATOR = "\n\n"


def chunk_content(chunk, include_image_captions: bool = True) -> str:
    """Generation-side content of a chunk: text plus attached captions."""
    if include_image_captions and chunk.image_captions:
        return chunk.text + "\n" + "\n".join(chunk.image_captions)
    return chunk.text


def build_context(chunks: Sequence, include_image_captions: bool = True) -> str:
    """'### Document i: ...' blocks, numbered from 0, one per line."""
    return "\n".join(
        f"### Document {i}: {chunk_content(c, include_image_captions)}"
        for i, c in enumerate(chunks)
    )


def generate_answer(
    query: str,
    chunks: Sequence,
    client: ChatClient,
    template: QaTemplate = QaTemplate.NORMAL,
    include_image_captions: bool = True,
    template_overrides: dict[str, str] | None = None,
    temperature: float = 0.0,
) -> str:
    """Render the QA template over the assembled context and complete it."""
    prompt = render(
        template,
        template_overrides,
        context_str=build_context(chunks, include_image_captions),
        query_str=query,
        k=len(chunks),
    )
    try:
        return client.complete(prompt, temperature=temperature)
    except BackendError:
        raise
    except Exception as exc:
        raise StageError("generate", f"chat client failed: {exc}") from exc


def integrate_answer(
    query: str,
    answer: str,
    top1_chunk,
    client: ChatClient,
    include_image_captions: bool = True,
    template_overrides: dict[str, str] | None = None,
    temperature: float = 0.0,
    warnings: list[WarningRecord] | None = None,
) -> str:
    """One extra model call folding the top-1 chunk into the answer.

    On client failure the unintegrated answer is returned and a warning
    recorded.
    """
    prompt = render(
        QaTemplate.INTEGRATE,
        template_overrides,
        top1_content_str=chunk_content(top1_chunk, include_image_captions),
        query_str=query,
        answer_str=answer,
    )
    try:
        return client.complete(prompt, temperature=temperature)
    except Exception as exc:
        if warnings is not None:
            warnings.append(
                WarningRecord(
                    stage="answer_merge",
                    subject=top1_chunk.chunk_id,
                    message=f"integration failed, returning unmerged answer: {exc}",
                )
            )
        return answer


def document_concat(answer: str, top1_chunk, include_image_captions: bool = True) -> str:
    """Append the top-1 chunk content to the answer without any model call.

    An empty top-1 content leaves the answer unchanged (no separator).
    """
    content = chunk_content(top1_chunk, include_image_captions) if top1_chunk else ""
    if not content:
        return answer
    return f"{answer}{ANSWER_CONCAT_SEPARATOR}{content}"
