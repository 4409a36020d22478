import pytest
from hypothesis import given
from hypothesis import strategies as st

from docrag.errors import ConfigError
from docrag.tokenization import (
    TokenizerConfig,
    load_dictionary,
    load_stopwords,
    tokenize,
)


def test_empty_text():
    assert tokenize("", TokenizerConfig()) == []


def test_forward_maximum_matching():
    cfg = TokenizerConfig(dictionary={"网络": 1, "配置": 1})
    assert tokenize("网络配置", cfg) == ["网络", "配置"]


def test_longest_match_wins():
    cfg = TokenizerConfig(dictionary={"网络": 1, "网络切片": 5})
    assert tokenize("网络切片管理", cfg) == ["网络切片", "管", "理"]


def test_single_char_fallback_and_ascii_lowercasing():
    cfg = TokenizerConfig(stopwords=frozenset(["的"]))
    assert tokenize("VNF 弹性!", cfg) == ["vnf", "弹", "性"]


def test_stopwords_removed():
    cfg = TokenizerConfig(stopwords=frozenset(["的", "了"]))
    assert tokenize("我的了你", cfg) == ["我", "你"]


def test_punctuation_never_tokenized():
    assert tokenize("！？。,.;:-=()", TokenizerConfig()) == []


def test_lowercase_can_be_disabled():
    cfg = TokenizerConfig(lowercase_ascii=False)
    assert tokenize("VNF", cfg) == ["VNF"]


def test_mixed_script_boundary():
    cfg = TokenizerConfig(dictionary={"切片": 1})
    assert tokenize("5G切片x2", cfg) == ["5g", "切片", "x2"]


def test_dictionary_validation():
    with pytest.raises(ConfigError):
        TokenizerConfig(dictionary={"": 1})
    with pytest.raises(ConfigError):
        TokenizerConfig(dictionary={"w": 0})


def test_load_dictionary(tmp_path):
    path = tmp_path / "dict.txt"
    path.write_text("网络 5\n网络 9\n配置\n", encoding="utf-8")
    assert load_dictionary(path) == {"网络": 9, "配置": 1}


def test_load_dictionary_empty_file(tmp_path):
    path = tmp_path / "dict.txt"
    path.write_text("", encoding="utf-8")
    assert load_dictionary(path) == {}


def test_load_dictionary_unreadable():
    with pytest.raises(ConfigError):
        load_dictionary("/nonexistent/dict.txt")


def test_load_dictionary_bad_frequency(tmp_path):
    path = tmp_path / "dict.txt"
    path.write_text("word abc\n", encoding="utf-8")
    with pytest.raises(ConfigError):
        load_dictionary(path)


def test_load_stopwords(tmp_path):
    path = tmp_path / "stop.txt"
    path.write_text("的\n了\n\n的\n", encoding="utf-8")
    assert load_stopwords(path) == {"的", "了"}


def test_load_stopwords_empty(tmp_path):
    path = tmp_path / "stop.txt"
    path.write_text("", encoding="utf-8")
    assert load_stopwords(path) == set()


def test_load_stopwords_unreadable():
    with pytest.raises(ConfigError):
        load_stopwords("/nonexistent/stop.txt")


_tokens_cfg = TokenizerConfig(
    dictionary={"网络": 1, "切片": 1, "网络切片": 2},
    stopwords=frozenset(["的", "and"]),
)

text_strategy = st.text(alphabet=st.sampled_from("ab1 网络切片的。!"), max_size=80)


@given(text_strategy)
def test_determinism(text):
    assert tokenize(text, _tokens_cfg) == tokenize(text, _tokens_cfg)


@given(text_strategy)
def test_stopword_filter_idempotent(text):
    tokens = tokenize(text, _tokens_cfg)
    refiltered = [t for t in tokens if t not in _tokens_cfg.stopwords]
    assert refiltered == tokens
    assert all(t for t in tokens)


@given(
    st.text(alphabet=st.sampled_from("abc12"), max_size=20),
    st.text(alphabet=st.sampled_from("xyz89"), max_size=20),
)
def test_non_cjk_concatenation_stability(a, b):
    cfg = TokenizerConfig()
    assert tokenize(f"{a} {b}", cfg) == tokenize(a, cfg) + tokenize(b, cfg)
