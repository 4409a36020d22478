"""Query rewriting: few-shot keyword expansion and hypothetical documents.

Both features degrade gracefully: any client failure leaves the original
query in play and records a warning. The original query is always preserved
in the rewrite artifacts and always reaches downstream retrieval text.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Callable

from ..errors import ConfigError, WarningRecord
from .client import ChatClient
from .templates import render


class HydeMode(str, Enum):
    OFF = "off"
    DIRECT = "direct"
    RETRIEVAL_GROUNDED = "retrieval_grounded"


@dataclass
class RewriteArtifacts:
    original: str
    keywords: str | None = None
    expanded_query: str | None = None
    hypothesis_draft: str | None = None
    hypothesis: str | None = None

    def to_dict(self) -> dict:
        return {
            "original": self.original,
            "keywords": self.keywords,
            "expanded_query": self.expanded_query,
            "hypothesis_draft": self.hypothesis_draft,
            "hypothesis": self.hypothesis,
        }


def load_few_shot_examples(path: str | Path | None = None) -> str:
    """Few-shot pairs for keyword expansion, rendered as prompt text.

    The bundled file holds placeholder examples; point ``path`` at a
    domain-annotated file for real deployments.
    """
    if path is None:
        raw = (
            resources.files("docrag.data")
            .joinpath("few_shot_keywords.json")
            .read_text(encoding="utf-8")
        )
    else:
        try:
            raw = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read few-shot example file {path}: {exc}") from exc
    data = json.loads(raw)
    lines = []
    for example in data.get("examples", []):
        lines.append(f"Question: {example['query']}")
        lines.append(f"Keywords: {example['keywords']}")
        lines.append("")
    return "\n".join(lines).strip()


def expand_query(
    query: str,
    client: ChatClient,
    few_shot_examples: str,
    artifacts: RewriteArtifacts | None = None,
    warnings: list[WarningRecord] | None = None,
    template_overrides: dict[str, str] | None = None,
) -> str:
    """Two-call rewrite: extract keywords, then re-summarize query+keywords.

    Falls back to the original query on failure or empty model output.
    """
    try:
        keywords = client.complete(
            render(
                "keyword_expansion",
                template_overrides,
                examples_str=few_shot_examples,
                query_str=query,
            )
        )
        if artifacts is not None:
            artifacts.keywords = keywords
        if not keywords.strip():
            return query
        expanded = client.complete(
            render(
                "keyword_summary",
                template_overrides,
                query_str=query,
                keywords_str=keywords,
            )
        )
    except Exception as exc:
        if warnings is not None:
            warnings.append(
                WarningRecord("rewrite", query, f"keyword expansion failed: {exc}")
            )
        return query
    if not expanded.strip():
        return query
    if artifacts is not None:
        artifacts.expanded_query = expanded
    return expanded


def hyde(
    query: str,
    mode: HydeMode,
    client: ChatClient,
    retriever: Callable[[str], tuple[str, str] | None] | None = None,
    artifacts: RewriteArtifacts | None = None,
    warnings: list[WarningRecord] | None = None,
    template_overrides: dict[str, str] | None = None,
) -> str | None:
    """Generate a hypothetical answer document for the query.

    Direct mode makes one model call. Retrieval-grounded mode first fetches
    the top-1 document for the query (via the supplied retriever returning
    ``(chunk_id, text)``) and includes it as context to curb hallucinated
    keywords. Returns None on failure; the pipeline then proceeds with the
    plain query.
    """
    if mode == HydeMode.OFF:
        return None
    if mode == HydeMode.RETRIEVAL_GROUNDED and retriever is None:
        raise ConfigError("retrieval-grounded hypothesis generation needs a retriever")
    try:
        if mode == HydeMode.DIRECT:
            draft = client.complete(
                render("hypothesis", template_overrides, query_str=query)
            )
            if artifacts is not None:
                artifacts.hypothesis_draft = draft
                artifacts.hypothesis = draft
            return draft
        top1 = retriever(query)
        if top1 is None:
            draft = client.complete(
                render("hypothesis", template_overrides, query_str=query)
            )
            if artifacts is not None:
                artifacts.hypothesis_draft = draft
                artifacts.hypothesis = draft
            return draft
        chunk_id, text = top1
        grounded = client.complete(
            render(
                "grounded_hypothesis",
                template_overrides,
                doc_ref=chunk_id,
                context_str=text,
                query_str=query,
            )
        )
        if artifacts is not None:
            artifacts.hypothesis = grounded
        return grounded
    except ConfigError:
        raise
    except Exception as exc:
        if warnings is not None:
            warnings.append(
                WarningRecord("rewrite", query, f"hypothesis generation failed: {exc}")
            )
        return None
