import pytest

from docrag.errors import ConfigError
from docrag.ingest import ImageFilterConfig, ImageRef, caption_images, filter_images


def img(path="i.png", title="", context="", ocr=None):
    return ImageRef(
        image_path=path, title=title, reference_context=context, extracted_text=ocr
    )


def test_empty_image_list():
    assert filter_images([], ImageFilterConfig()) == []


def test_non_chinese_ocr_text_dropped():
    images = [img(ocr="hello", title="组网图")]
    assert filter_images(images, ImageFilterConfig()) == []


def test_chinese_ocr_with_keyword_title_kept():
    images = [img(ocr="网络拓扑", title="组网图")]
    assert filter_images(images, ImageFilterConfig()) == images


def test_default_config_fixture_keeps_exactly_matching_two():
    matching = [img(f"m{i}.png", title="核心网组网图", ocr="中文内容") for i in range(2)]
    noise = (
        [img(f"a{i}.png", title="logo", ocr="english only") for i in range(4)]
        + [img(f"b{i}.png", title="装饰图", ocr="no chinese here") for i in range(2)]
        + [img(f"c{i}.png", title="icon", ocr="中文但标题不匹配") for i in range(2)]
    )
    kept = filter_images(matching + noise, ImageFilterConfig())
    assert kept == matching


def test_reference_pattern_rule():
    kept = filter_images(
        [img(context="配置如图3所示。", ocr="中文")], ImageFilterConfig()
    )
    assert len(kept) == 1


def test_missing_ocr_text_skips_rule_one():
    kept = filter_images([img(title="组网图")], ImageFilterConfig())
    assert len(kept) == 1


def test_disabled_rules_identity():
    images = [img("a.png", ocr="english"), img("b.png", title="x")]
    assert filter_images(images, ImageFilterConfig.disabled()) == images


def test_output_is_subset_preserving_order():
    images = [img(f"{i}.png", title="组网图" if i % 2 else "x", ocr="中") for i in range(6)]
    kept = filter_images(images, ImageFilterConfig())
    assert [k.image_path for k in kept] == ["1.png", "3.png", "5.png"]


def test_exclusion_keyword_semantics():
    rules = ImageFilterConfig(
        ocr_chinese=False,
        title_keywords=("装饰",),
        title_keywords_include=False,
        reference_patterns=(),
        title_combine="and",
    )
    images = [img("a.png", title="装饰条"), img("b.png", title="组网图")]
    assert [k.image_path for k in filter_images(images, rules)] == ["b.png"]


def test_invalid_combinator_rejected():
    with pytest.raises(ConfigError):
        ImageFilterConfig(ocr_combine="xor")


class _EchoCaptioner:
    def __init__(self):
        self.calls = []

    def caption(self, image_path, prompt):
        self.calls.append((image_path, prompt))
        return f"caption of {image_path}"


class _FlakyCaptioner(_EchoCaptioner):
    def caption(self, image_path, prompt):
        if image_path == "boom.png":
            raise RuntimeError("model offline")
        return super().caption(image_path, prompt)


def test_caption_images_fills_captions():
    captioner = _EchoCaptioner()
    out = caption_images([img("a.png"), img("b.png")], captioner)
    assert [i.caption for i in out] == ["caption of a.png", "caption of b.png"]
    assert all(prompt == "简要描述图片" for _, prompt in captioner.calls)


def test_caption_zero_images_no_calls():
    captioner = _EchoCaptioner()
    assert caption_images([], captioner) == []
    assert captioner.calls == []


def test_caption_failure_records_warning_and_continues():
    warnings = []
    out = caption_images(
        [img("a.png"), img("boom.png"), img("c.png")], _FlakyCaptioner(), warnings=warnings
    )
    assert [i.caption for i in out] == ["caption of a.png", None, "caption of c.png"]
    assert len(warnings) == 1
    assert warnings[0].subject == "boom.png"
