"""Chat-model client abstraction, prompt templates, query rewriting,
context assembly and answer generation/optimization."""

from .client import ChatClient, HttpChatClient, MockChatClient
from .generate import (
    build_context,
    chunk_content,
    document_concat,
    generate_answer,
    integrate_answer,
)
from .rewrite import HydeMode, RewriteArtifacts, expand_query, hyde
from .templates import QaTemplate, load_template_overrides, parse_prompt, render

__all__ = [
    "ChatClient",
    "HttpChatClient",
    "HydeMode",
    "MockChatClient",
    "QaTemplate",
    "RewriteArtifacts",
    "build_context",
    "chunk_content",
    "document_concat",
    "expand_query",
    "generate_answer",
    "hyde",
    "integrate_answer",
    "load_template_overrides",
    "parse_prompt",
    "render",
]
