import pytest

from docrag.errors import StageError
from docrag.ingest import Chunk
from docrag.qa.client import MockChatClient
from docrag.qa.generate import (
    build_context,
    document_concat,
    generate_answer,
    integrate_answer,
)
from docrag.qa.rewrite import HydeMode, RewriteArtifacts, expand_query, hyde, load_few_shot_examples
from docrag.qa.templates import QaTemplate


def chunk(cid, text, captions=()):
    return Chunk(cid, cid, text, (0, len(text)), f"{cid}.html", f"K/{cid}", tuple(captions))


class ScriptedClient:
    """Returns queued replies; records prompts."""

    def __init__(self, replies):
        self.replies = list(replies)
        self.calls = []

    def complete(self, prompt, temperature=0.0, max_tokens=1024):
        self.calls.append(prompt)
        return self.replies.pop(0)


class FailingClient:
    def __init__(self):
        self.calls = []

    def complete(self, prompt, temperature=0.0, max_tokens=1024):
        self.calls.append(prompt)
        raise RuntimeError("backend down")


# -- build_context -------------------------------------------------------------


def test_build_context_empty():
    assert build_context([]) == ""


def test_build_context_numbering():
    ctx = build_context([chunk("a", "first"), chunk("b", "second")])
    assert ctx == "### Document 0: first\n### Document 1: second"


def test_build_context_caption_flag():
    c = chunk("a", "body", captions=("图: 组网示意",))
    assert build_context([c], include_image_captions=True) == "### Document 0: body\n图: 组网示意"
    assert build_context([c], include_image_captions=False) == "### Document 0: body"


# -- generate_answer -------------------------------------------------------------


def test_mock_digest_names_template_and_doc_ids():
    client = MockChatClient()
    chunks = [chunk(f"c{i}", f"t{i}") for i in range(6)]
    answer = generate_answer("问题?", chunks, client, QaTemplate.NORMAL)
    assert "template=normal" in answer
    assert "docs=0,1,2,3,4,5" in answer
    assert "query_str=问题?" in answer
    assert client.call_count == 1


def test_generate_with_empty_context_mentions_uncertain_instruction():
    client = MockChatClient()
    generate_answer("q", [], client, QaTemplate.NORMAL)
    assert 'you may respond with "uncertain"' in client.calls[0]


def test_generate_failure_tagged():
    with pytest.raises(StageError) as excinfo:
        generate_answer("q", [chunk("c", "t")], FailingClient())
    assert excinfo.value.stage == "generate"


# -- integrate / document concat ---------------------------------------------------


def test_integrate_digest_contains_prior_answer_verbatim():
    client = MockChatClient()
    out = integrate_answer("q", "PRIOR-ANSWER-TEXT", chunk("top", "top text"), client)
    assert "answer_str=PRIOR-ANSWER-TEXT" in out
    assert "template=integrate" in out
    assert client.call_count == 1


def test_integrate_failure_falls_back_with_warning():
    warnings = []
    out = integrate_answer(
        "q", "keep me", chunk("top", "t"), FailingClient(), warnings=warnings
    )
    assert out == "keep me"
    assert len(warnings) == 1
    assert warnings[0].stage == "answer_merge"


def test_document_concat_appends_verbatim():
    out = document_concat("answer", chunk("top", "chunk body"))
    assert out == "answer\n\nchunk body"


def test_document_concat_empty_top1_unchanged():
    empty = chunk("top", "")
    assert document_concat("answer", empty) == "answer"


def test_document_concat_includes_captions_when_enabled():
    c = chunk("top", "body", captions=("cap1",))
    assert document_concat("a", c, include_image_captions=True) == "a\n\nbody\ncap1"
    assert document_concat("a", c, include_image_captions=False) == "a\n\nbody"


def test_call_accounting_modes():
    mock = MockChatClient()
    chunks = [chunk("c0", "t")]
    answer = generate_answer("q", chunks, mock)
    assert mock.call_count == 1
    document_concat(answer, chunks[0])
    assert mock.call_count == 1  # no extra call
    integrate_answer("q", answer, chunks[0], mock)
    assert mock.call_count == 2  # one extra call


# -- expand_query -------------------------------------------------------------------


def test_expand_query_mock_roundtrip():
    client = MockChatClient()
    artifacts = RewriteArtifacts(original="VNF扩容?")
    out = expand_query("VNF扩容?", client, "Q: x\nKeywords: y", artifacts)
    assert "VNF扩容?" in out
    assert "template=keyword_summary" in out
    assert artifacts.keywords is not None
    assert "template=keyword_expansion" in out  # keyword call output embedded
    assert client.call_count == 2


def test_expand_query_empty_keywords_degenerate():
    client = ScriptedClient(["   "])
    assert expand_query("q", client, "ex") == "q"
    assert len(client.calls) == 1  # summary call skipped


def test_expand_query_failure_returns_original_with_warning():
    warnings = []
    assert expand_query("q", FailingClient(), "ex", warnings=warnings) == "q"
    assert len(warnings) == 1


def test_load_few_shot_examples_bundled():
    text = load_few_shot_examples()
    assert "Question:" in text
    assert "Keywords:" in text


# -- hyde -----------------------------------------------------------------------------


def test_hyde_off():
    assert hyde("q", HydeMode.OFF, MockChatClient()) is None


def test_hyde_direct_digest_contains_query():
    client = MockChatClient()
    artifacts = RewriteArtifacts(original="什么是切片?")
    out = hyde("什么是切片?", HydeMode.DIRECT, client, artifacts=artifacts)
    assert "query_str=什么是切片?" in out
    assert artifacts.hypothesis_draft == out
    assert artifacts.hypothesis == out


def test_hyde_grounded_digest_contains_top1_chunk_id():
    client = MockChatClient()

    def retriever(q):
        return ("docs/vnf.html:0", "VNF弹性伸缩正文")

    out = hyde("VNF?", HydeMode.RETRIEVAL_GROUNDED, client, retriever)
    assert "doc_ref=docs/vnf.html:0" in out
    assert "template=grounded_hypothesis" in out


def test_hyde_grounded_requires_retriever():
    from docrag.errors import ConfigError

    with pytest.raises(ConfigError):
        hyde("q", HydeMode.RETRIEVAL_GROUNDED, MockChatClient())


def test_hyde_grounded_falls_back_to_direct_on_empty_corpus():
    client = MockChatClient()
    out = hyde("q", HydeMode.RETRIEVAL_GROUNDED, client, lambda q: None)
    assert "template=hypothesis" in out


def test_hyde_failure_returns_none_with_warning():
    warnings = []
    assert hyde("q", HydeMode.DIRECT, FailingClient(), warnings=warnings) is None
    assert len(warnings) == 1
