import shutil
from dataclasses import replace

import pytest

from docrag.config import PipelineConfig, RouteSpec
from docrag.dense import HashedBagEmbedder, dense_retrieve
from docrag.errors import ConfigError, DocragError
from docrag.models import ExpansionMode, Route
from docrag.pipeline import Backends, EvalRecord, QaEngine, reindex
from docrag.qa.client import MockChatClient
from docrag.rerank import TokenOverlapScorer

from conftest import TOY_PACKAGE
from oracles import oracle_cosine_topk


def engine_for(chunks, cfg=None, backends=None):
    cfg = cfg or PipelineConfig()
    return QaEngine(chunks, cfg, backends or Backends.mocks(cfg))


# -- run_query basics ------------------------------------------------------------


def test_gold_chunk_retrieved_for_every_toy_question(toy_engine, toy_qa_records):
    for record in toy_qa_records:
        result = toy_engine.run_query(record.question)
        found = {c.chunk_id for c in result.contexts}
        assert set(record.gold_chunk_ids) & found, record.question


def test_result_shape(toy_engine):
    result = toy_engine.run_query("EMS告警管理支持哪些告警级别?")
    assert result.contexts
    assert len(result.contexts) <= 6
    assert [c.rank for c in result.contexts] == list(range(1, len(result.contexts) + 1))
    assert result.answer
    assert result.config_fingerprint == toy_engine.config.fingerprint()
    for stage in ("coarse", "fusion", "rerank", "generate", "answer_merge"):
        assert stage in result.timings_ms
    assert "rewrite" not in result.timings_ms  # disabled by default
    assert "compress" not in result.timings_ms


def test_empty_question_rejected(toy_engine):
    with pytest.raises(ConfigError):
        toy_engine.run_query("  ")


def test_all_routes_disabled_is_config_error(toy_chunks):
    with pytest.raises(ConfigError):
        PipelineConfig(routes=()).validate()
    with pytest.raises(ConfigError):
        engine_for(toy_chunks, cfg=PipelineConfig(routes=()))


def test_determinism_excluding_timings(toy_chunks):
    cfg = PipelineConfig()
    a = QaEngine(toy_chunks, cfg, Backends.mocks(cfg)).run_query("VNF弹性伸缩如何扩容?")
    b = QaEngine(toy_chunks, cfg, Backends.mocks(cfg)).run_query("VNF弹性伸缩如何扩容?")
    da, db = a.to_dict(), b.to_dict()
    da.pop("timings_ms")
    db.pop("timings_ms")
    assert da == db


def test_retrieval_empty_proceeds_with_empty_context(toy_chunks):
    cfg = PipelineConfig()
    backends = Backends.mocks(cfg)
    engine = engine_for(toy_chunks, cfg, backends)
    result = engine.run_query("zzzz qqqq xxxx")  # no corpus term overlaps
    assert result.contexts == []
    assert "docs=" not in result.answer  # empty context in the prompt
    assert "template=normal" in result.answer


# -- client call accounting -------------------------------------------------------


def count_calls(toy_chunks, **config_kwargs):
    cfg = PipelineConfig(**config_kwargs)
    backends = Backends.mocks(cfg)
    engine = engine_for(toy_chunks, cfg, backends)
    engine.run_query("EMS告警管理支持哪些告警级别?")
    return backends.chat.call_count


def test_one_call_without_merge(toy_chunks):
    assert count_calls(toy_chunks, answer_merge="off") == 1


def test_document_concat_adds_no_call(toy_chunks):
    assert count_calls(toy_chunks, answer_merge="document_concat") == 1


def test_prompt_merge_adds_one_call(toy_chunks):
    assert count_calls(toy_chunks, answer_merge="prompt_merge") == 2


def test_document_concat_appends_top1_text(toy_engine):
    result = toy_engine.run_query("EMS告警管理支持哪些告警级别?")
    assert result.answer.endswith(result.contexts[0].text)


# -- fusion strategies ---------------------------------------------------------------


def single_route_cfg(**kwargs):
    return PipelineConfig(
        routes=(RouteSpec(Route.CHUNK, 192, ExpansionMode.KNOWLEDGE_PATH),),
        answer_merge="off",
        **kwargs,
    )


def test_single_route_fusion_equivalence(toy_chunks):
    question = "数据库备份有哪几种方式?"
    results = []
    for cfg in (
        single_route_cfg(coarse_fusion="simple_merge"),
        single_route_cfg(coarse_fusion="rrf"),
        single_route_cfg(rerank_fusion="rrf"),
    ):
        engine = engine_for(toy_chunks, cfg)
        results.append([c.chunk_id for c in engine.run_query(question).contexts])
    assert results[0] == results[1] == results[2]


def test_answer_concat_over_two_routes(toy_chunks):
    cfg = PipelineConfig(rerank_fusion="answer_concat", answer_merge="off")
    backends = Backends.mocks(cfg)
    engine = engine_for(toy_chunks, cfg, backends)
    result = engine.run_query("VNF弹性伸缩如何扩容?")
    parts = result.answer.split("\n\n")
    assert len(parts) == 2  # one answer per route, joined
    assert all("template=normal" in p for p in parts)
    assert backends.chat.call_count == 2


def test_answer_longer_over_two_routes(toy_chunks):
    cfg = PipelineConfig(rerank_fusion="answer_longer", answer_merge="off")
    backends = Backends.mocks(cfg)
    engine = engine_for(toy_chunks, cfg, backends)
    result = engine.run_query("VNF弹性伸缩如何扩容?")
    assert "template=normal" in result.answer
    assert "\n\n" not in result.answer


# -- stage isolation -------------------------------------------------------------------


def test_compression_changes_text_not_membership(toy_chunks):
    question = "负载均衡支持哪些调度算法?"
    base = engine_for(toy_chunks, PipelineConfig(answer_merge="off"))
    compressed_cfg = PipelineConfig(answer_merge="off")
    base_result = base.run_query(question)
    comp_result = base.run_query(
        question, overrides={"compress_enabled": True, "compress_rate": 0.5}
    )
    assert [c.chunk_id for c in base_result.contexts] == [
        c.chunk_id for c in comp_result.contexts
    ]
    assert "compress" in comp_result.timings_ms
    for before, after in zip(base_result.contexts, comp_result.contexts):
        assert len(after.text) <= len(before.text)


def test_rewrite_stage_runs_and_preserves_query(toy_chunks):
    cfg = PipelineConfig(
        rewrite=replace(PipelineConfig().rewrite, expansion=True), answer_merge="off"
    )
    backends = Backends.mocks(cfg)
    engine = engine_for(toy_chunks, cfg, backends)
    result = engine.run_query("EMS告警管理支持哪些告警级别?")
    assert "rewrite" in result.timings_ms
    assert result.rewrite.original == "EMS告警管理支持哪些告警级别?"
    assert result.rewrite.keywords is not None
    assert result.rewrite.expanded_query is not None
    # 2 rewrite calls + 1 generation
    assert backends.chat.call_count == 3


def test_hyde_direct_mode(toy_chunks):
    cfg = PipelineConfig(
        rewrite=replace(PipelineConfig().rewrite, hyde="direct"), answer_merge="off"
    )
    cfg = PipelineConfig.from_dict(cfg.to_dict())  # exercise enum coercion
    backends = Backends.mocks(cfg)
    engine = engine_for(toy_chunks, cfg, backends)
    result = engine.run_query("VNF弹性伸缩如何扩容?")
    assert result.rewrite.hypothesis is not None
    assert backends.chat.call_count == 2  # hypothesis + generation


def test_hyde_grounded_mode_uses_top1(toy_chunks):
    from docrag.qa.rewrite import HydeMode

    cfg = PipelineConfig(
        rewrite=replace(PipelineConfig().rewrite, hyde=HydeMode.RETRIEVAL_GROUNDED),
        answer_merge="off",
    )
    engine = engine_for(toy_chunks, cfg)
    result = engine.run_query("VNF弹性伸缩如何扩容?")
    assert "doc_ref=documents/vnf_scaling.html:0" in result.rewrite.hypothesis


# -- caption isolation -------------------------------------------------------------------


class RecordingScorer(TokenOverlapScorer):
    def __init__(self):
        super().__init__()
        self.seen_documents = []

    def score(self, query, documents, layer):
        self.seen_documents.extend(documents)
        return super().score(query, documents, layer)


def test_caption_isolation(toy_chunks):
    sentinel = "GOLDEN-CAPTION-SENTINEL"
    tagged = [replace(c, image_captions=(sentinel,)) for c in toy_chunks]
    cfg = PipelineConfig(answer_merge="off")
    scorer = RecordingScorer()
    backends = Backends(chat=MockChatClient(), scorer=scorer,
                        embedder=HashedBagEmbedder(cfg.dense_dimension))
    engine = QaEngine(tagged, cfg, backends)
    engine.run_query("EMS告警管理支持哪些告警级别?")

    # scored rerank documents never contain captions
    assert all(sentinel not in doc for doc in scorer.seen_documents)
    # sparse index terms never contain captions
    assert not any(sentinel.lower() in term for term in engine._chunk_index.vocab)
    # the generation prompt does contain them (flag on by default)
    prompt = backends.chat.calls[-1]
    assert sentinel in prompt

    backends.chat.calls.clear()
    engine.run_query(
        "EMS告警管理支持哪些告警级别?", overrides=None if False else {"answer_merge": "off"}
    )
    assert sentinel in backends.chat.calls[-1]


def test_caption_flag_off_excludes_from_prompt(toy_chunks):
    sentinel = "CAPTION-OFF-SENTINEL"
    tagged = [replace(c, image_captions=(sentinel,)) for c in toy_chunks]
    cfg = PipelineConfig(include_image_captions=False, answer_merge="off")
    backends = Backends.mocks(cfg)
    engine = QaEngine(tagged, cfg, backends)
    engine.run_query("EMS告警管理支持哪些告警级别?")
    assert sentinel not in backends.chat.calls[-1]


# -- dense route --------------------------------------------------------------------------


def dense_cfg():
    return PipelineConfig(
        routes=(RouteSpec(Route.DENSE, 288, ExpansionMode.FILE_PATH),),
        answer_merge="off",
    )


def test_dense_route_matches_exhaustive_cosine_oracle(toy_chunks):
    cfg = dense_cfg()
    backends = Backends.mocks(cfg)
    engine = engine_for(toy_chunks, cfg, backends)
    question = "容器编排中Kubernetes调度器如何放置Pod?"
    trace = {}
    engine.run_query(question, trace=trace)
    hits = trace["routes"]["dense"]

    store = engine._dense_store
    qvec = backends.embedder.embed_query(question)
    expected = oracle_cosine_topk(store.vectors.tolist(), qvec.tolist(), len(hits))
    assert [h.chunk_id for h in hits] == [store.chunk_ids[i] for i, _ in expected]
    for hit, (_, score) in zip(hits, expected):
        assert hit.score == pytest.approx(score, abs=1e-9)


def test_dense_route_without_embedder_rejected(toy_chunks):
    backends = Backends(chat=MockChatClient(), scorer=TokenOverlapScorer(), embedder=None)
    with pytest.raises(ConfigError):
        QaEngine(toy_chunks, dense_cfg(), backends)


# -- allowed file prefixes ------------------------------------------------------------------


def test_source_filter_restricts_chunk_route(toy_chunks):
    cfg = PipelineConfig(answer_merge="off")
    engine = engine_for(toy_chunks, cfg)
    result = engine.run_query(
        "EMS告警管理支持哪些告警级别?",
        overrides={"allowed_file_prefixes": ["documents/ems_alarms"]},
    )
    chunk_route_hits = [c for c in result.contexts if c.route == "chunk"]
    assert all(
        c.file_path.startswith("documents/ems_alarms") for c in chunk_route_hits
    )


# -- evaluate -------------------------------------------------------------------------------


def test_evaluate_perfect_fixture(toy_engine, toy_qa_records):
    metrics = toy_engine.evaluate(toy_qa_records)
    assert metrics["n_questions"] == 10
    assert metrics["hit_rate"]["final"] == 1.0
    assert metrics["hit_rate"]["fused"] == 1.0
    assert metrics["mrr"] == 1.0
    assert metrics["answer_keyword_rate"] == 1.0
    assert set(metrics["mean_timings_ms"]) >= {"coarse", "rerank", "generate"}


def test_evaluate_empty_set_rejected(toy_engine):
    with pytest.raises(ConfigError):
        toy_engine.evaluate([])


def test_eval_record_needs_gold():
    with pytest.raises(ConfigError):
        EvalRecord(question="q")


def test_evaluate_k_larger_than_contexts_well_defined(toy_chunks):
    cfg = PipelineConfig(answer_merge="off")
    engine = engine_for(toy_chunks, cfg)
    records = [EvalRecord("VNF弹性伸缩?", gold_chunk_ids=("documents/vnf_scaling.html:0",))]
    metrics = engine.evaluate(records, overrides={"rerank_k": 50})
    assert metrics["hit_rate"]["final"] == 1.0


# -- snapshots and reindex ----------------------------------------------------------------


def _tree_bytes(root):
    return {
        str(p.relative_to(root)): p.read_bytes()
        for p in sorted(root.rglob("*"))
        if p.is_file()
    }


def test_reindex_and_snapshot_roundtrip(tmp_path):
    cfg = PipelineConfig()
    report = reindex(TOY_PACKAGE, cfg, tmp_path / "snap")
    assert report.n_documents == 20
    assert report.n_chunks == 20
    assert report.seconds < 5.0

    backends = Backends.mocks(cfg)
    engine = QaEngine.from_snapshot(tmp_path / "snap", cfg, backends)
    result = engine.run_query("防火墙策略规则的匹配顺序是什么?")
    assert any("firewall" in c.chunk_id for c in result.contexts)


def test_reindex_unchanged_corpus_byte_identical(tmp_path):
    cfg = PipelineConfig()
    reindex(TOY_PACKAGE, cfg, tmp_path / "a")
    reindex(TOY_PACKAGE, cfg, tmp_path / "b")
    assert _tree_bytes(tmp_path / "a") == _tree_bytes(tmp_path / "b")


def test_reindex_failure_leaves_prior_snapshot(tmp_path):
    cfg = PipelineConfig()
    reindex(TOY_PACKAGE, cfg, tmp_path / "snap")
    before = _tree_bytes(tmp_path / "snap")

    corrupt = tmp_path / "corrupt_pkg"
    shutil.copytree(TOY_PACKAGE, corrupt)
    (corrupt / "nodetree.xml").write_text("<broken", encoding="utf-8")

    with pytest.raises(DocragError):
        reindex(corrupt, cfg, tmp_path / "snap")
    assert _tree_bytes(tmp_path / "snap") == before


def test_dense_snapshot_roundtrip(tmp_path, toy_chunks):
    cfg = dense_cfg()
    reindex(TOY_PACKAGE, cfg, tmp_path / "snap")
    assert (tmp_path / "snap" / "dense").is_dir()
    engine = QaEngine.from_snapshot(tmp_path / "snap", cfg, Backends.mocks(cfg))
    result = engine.run_query("容器编排中Kubernetes调度器如何放置Pod?")
    assert result.contexts[0].chunk_id == "documents/container_sched.html:0"
    assert result.contexts[0].route == "dense"


def test_tokenizer_files_wired_through_config(tmp_path, toy_chunks):
    (tmp_path / "dict.txt").write_text("弹性伸缩 9\n", encoding="utf-8")
    (tmp_path / "stop.txt").write_text("的\n", encoding="utf-8")
    cfg = PipelineConfig(
        dictionary_path=str(tmp_path / "dict.txt"),
        stopwords_path=str(tmp_path / "stop.txt"),
        answer_merge="off",
    )
    engine = engine_for(toy_chunks, cfg)
    assert engine.tokenizer.dictionary == {"弹性伸缩": 9}
    assert "的" in engine.tokenizer.stopwords
    result = engine.run_query("VNF的弹性伸缩如何扩容?")
    assert result.contexts[0].chunk_id == "documents/vnf_scaling.html:0"


def test_reindex_add_document_updates_counts(tmp_path):
    cfg = PipelineConfig()
    pkg = tmp_path / "pkg"
    shutil.copytree(TOY_PACKAGE, pkg)
    report_before = reindex(pkg, cfg, tmp_path / "snap")

    (pkg / "documents" / "extra.html").write_text(
        "<html><body><p>新增文档内容。</p></body></html>", encoding="utf-8"
    )
    tree = (pkg / "nodetree.xml").read_text(encoding="utf-8")
    tree = tree.replace(
        "</nodetree>",
        '  <node title="新增"><node title="新增文档" file="documents/extra.html"/></node>\n</nodetree>',
    )
    (pkg / "nodetree.xml").write_text(tree, encoding="utf-8")

    report_after = reindex(pkg, cfg, tmp_path / "snap")
    assert report_after.n_documents == report_before.n_documents + 1

    from docrag.sparse import load_index

    index = load_index(tmp_path / "snap" / "sparse_chunk")
    assert index.n_docs == report_after.n_chunks
    assert index.avg_len == pytest.approx(float(index.doc_len.mean()), abs=0)
