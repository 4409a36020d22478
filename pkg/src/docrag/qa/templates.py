"""Prompt templates with strict slot rendering and reverse parsing.

The five QA templates are fixed texts with ``{context_str}`` / ``{query_str}``
slots (the integration template uses ``{top1_content_str}`` / ``{query_str}``
/ ``{answer_str}``; the markdown one also takes ``{k}``). Custom wordings can
be dropped into a template override directory as ``<name>.txt``.

``parse_prompt`` inverts rendering for the deterministic mock chat client:
it recognizes which template produced a prompt and recovers the slot values.
"""
from __future__ import annotations

import re
from enum import Enum
from pathlib import Path

from ..errors import TemplateError


class QaTemplate(str, Enum):
    NORMAL = "normal"
    COT = "cot"
    MARKDOWN = "markdown"
    FOCUSED = "focused"
    INTEGRATE = "integrate"


_SEP = "----------"

NORMAL_TEMPLATE = f"""The context information is as follows:

{_SEP}

{{context_str}}

{_SEP}

Please answer the following question based on the context information and not your own knowledge. Answers can be itemized. If the context does not contain relevant information, you may respond with "uncertain" and should not restate the context information:

{{query_str}}

Answer:"""

COT_TEMPLATE = f"""Context information as follows:

{_SEP}

{{context_str}}

{_SEP}

Please answer the following question based on the context information rather than your own knowledge. Think step by step, first provide an analysis process, then generate an answer:

{{query_str}}

Answer:"""

MARKDOWN_TEMPLATE = """## Objective

Please, based on the information from {k} private domain documents about 5G operational maintenance, answer the given question.

## Requirements

1. You may itemize your answer; be as detailed and specific as possible.
2. Do not merely repeat information from the context.
3. Do not use your own knowledge; rely solely on the content from the context documents.

## Context

{context_str}

## Question

{query_str}

## Answer"""

FOCUSED_TEMPLATE = f"""Context information as follows:

{_SEP}

{{context_str}}

{_SEP}

Please answer the following question based on the context information rather than your own knowledge. You may itemize your answer. Document 0's content is particularly important, consider it carefully. If the context does not contain relevant knowledge, you may respond with 'uncertain'. Do not simply restate the context information:

{{query_str}}

Answer:"""

INTEGRATE_TEMPLATE = f"""Context:

{_SEP}

{{top1_content_str}}

{_SEP}

You will see a question and a corresponding reference answer

Please, based on the context knowledge and not your own knowledge, supplement the reference answer to make it more complete in addressing the question

Please note, strictly retain every character of the reference answer and reasonably integrate your supplement with the reference answer to produce a longer, more complete answer containing more terms and itemization

Question:

{{query_str}}

Reference answer:

{{answer_str}}

New answer:"""

# Default query-rewriting prompt wordings; deployment-specific and meant to
# be overridden alongside the QA templates.
KEYWORD_EXPANSION_TEMPLATE = """You are a telecom operations domain expert. Extract the key technical terms from the question and list closely related keywords, comma separated.

Examples:

{examples_str}

Question:

{query_str}

Keywords:"""

KEYWORD_SUMMARY_TEMPLATE = """Rewrite the question by merging it with the expanded keywords into one clear, self-contained query. Keep every technical term.

Question:

{query_str}

Keywords:

{keywords_str}

Rewritten query:"""

HYPOTHESIS_TEMPLATE = """Write a short passage that could plausibly answer the question, as it would appear in technical documentation.

Question:

{query_str}

Passage:"""

GROUNDED_HYPOTHESIS_TEMPLATE = """Write a short passage that could plausibly answer the question, staying consistent with the reference document below.

Reference document ({doc_ref}):

{context_str}

Question:

{query_str}

Passage:"""

DEFAULT_TEMPLATES: dict[str, str] = {
    QaTemplate.NORMAL.value: NORMAL_TEMPLATE,
    QaTemplate.COT.value: COT_TEMPLATE,
    QaTemplate.MARKDOWN.value: MARKDOWN_TEMPLATE,
    QaTemplate.FOCUSED.value: FOCUSED_TEMPLATE,
    QaTemplate.INTEGRATE.value: INTEGRATE_TEMPLATE,
    "keyword_expansion": KEYWORD_EXPANSION_TEMPLATE,
    "keyword_summary": KEYWORD_SUMMARY_TEMPLATE,
    "hypothesis": HYPOTHESIS_TEMPLATE,
    "grounded_hypothesis": GROUNDED_HYPOTHESIS_TEMPLATE,
}

_SLOT_RE = re.compile(r"\{([a-z0-9_]+)\}")


class _StrictSlots(dict):
    def __missing__(self, key: str):
        raise TemplateError(f"missing template slot {{{key}}}")


def get_template_text(name: str | QaTemplate, overrides: dict[str, str] | None = None) -> str:
    key = name.value if isinstance(name, QaTemplate) else name
    if overrides and key in overrides:
        return overrides[key]
    try:
        return DEFAULT_TEMPLATES[key]
    except KeyError:
        raise TemplateError(f"unknown template {key!r}") from None


def render(
    name: str | QaTemplate,
    overrides: dict[str, str] | None = None,
    **slots: str,
) -> str:
    """Render a template; raises TemplateError when a slot is missing."""
    text = get_template_text(name, overrides)
    return text.format_map(_StrictSlots({k: str(v) for k, v in slots.items()}))


def load_template_overrides(directory: str | Path) -> dict[str, str]:
    """Read ``<name>.txt`` files from a directory as template overrides."""
    overrides = {}
    for path in sorted(Path(directory).glob("*.txt")):
        overrides[path.stem] = path.read_text(encoding="utf-8")
    return overrides


def _pattern_for(text: str) -> re.Pattern:
    pattern = ""
    pos = 0
    for match in _SLOT_RE.finditer(text):
        pattern += re.escape(text[pos : match.start()])
        pattern += f"(?P<{match.group(1)}>.*?)"
        pos = match.end()
    pattern += re.escape(text[pos:])
    return re.compile(pattern + r"\Z", re.DOTALL)


_PARSERS: list[tuple[str, re.Pattern]] = [
    (name, _pattern_for(text)) for name, text in DEFAULT_TEMPLATES.items()
]


def parse_prompt(prompt: str) -> tuple[str, dict[str, str]] | None:
    """Recover (template name, slot values) from a rendered prompt, or None."""
    for name, pattern in _PARSERS:
        match = pattern.match(prompt)
        if match:
            return name, match.groupdict()
    return None
