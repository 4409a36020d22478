"""Rule-based image filtering and pluggable OCR / captioning interfaces."""
from __future__ import annotations

import json
import re
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Protocol, runtime_checkable

import yaml

from ..errors import ConfigError, WarningRecord
from .html import ImageRef

# Default caption instruction; configurable. English equivalent:
# "Briefly describe the image".
DEFAULT_CAPTION_PROMPT = "简要描述图片"

# Placeholder keyword / pattern defaults; production deployments tune these.
DEFAULT_TITLE_KEYWORDS = ("组网图", "架构", "结构图", "流程图", "网络图")
DEFAULT_REFERENCE_PATTERNS = (r"配置如图", r"文件如图", r"如图\s*\d+\s*所示")

_CJK_START, _CJK_END = 0x4E00, 0x9FFF


@runtime_checkable
class OcrEngine(Protocol):
    def extract_text(self, image_path: str) -> str:
        """Return the text visible in the image."""


@runtime_checkable
class ImageCaptioner(Protocol):
    def caption(self, image_path: str, prompt: str) -> str:
        """Return a short description of the image."""


def contains_cjk(text: str) -> bool:
    return any(_CJK_START <= ord(ch) <= _CJK_END for ch in text)


@dataclass(frozen=True)
class ImageFilterConfig:
    """Three composable retention rules.

    Each enabled rule is tagged "and" or "or": an image is kept when every
    "and" rule passes and, if any "or" rule is enabled, at least one "or"
    rule passes. The default composition is
    ``ocr_chinese AND (title_keywords OR reference_patterns)``.
    Rules that are disabled (or not applicable, e.g. no OCR text) are
    neutral. With every rule disabled the filter is the identity.
    """

    ocr_chinese: bool = True
    title_keywords: tuple[str, ...] = DEFAULT_TITLE_KEYWORDS
    title_keywords_include: bool = True
    reference_patterns: tuple[str, ...] = DEFAULT_REFERENCE_PATTERNS
    ocr_combine: str = "and"
    title_combine: str = "or"
    reference_combine: str = "or"

    def __post_init__(self) -> None:
        for name in (self.ocr_combine, self.title_combine, self.reference_combine):
            if name not in ("and", "or"):
                raise ConfigError(f"rule combinator must be 'and' or 'or', got {name!r}")

    @classmethod
    def disabled(cls) -> "ImageFilterConfig":
        return cls(ocr_chinese=False, title_keywords=(), reference_patterns=())

    @classmethod
    def from_file(cls, path: str | Path) -> "ImageFilterConfig":
        try:
            raw = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read image rules file {path}: {exc}") from exc
        data = yaml.safe_load(raw) if str(path).endswith((".yaml", ".yml")) else json.loads(raw)
        if not isinstance(data, dict):
            raise ConfigError(f"image rules file {path} must hold a mapping")
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown image rule keys: {sorted(unknown)}")
        for key in ("title_keywords", "reference_patterns"):
            if key in data:
                data[key] = tuple(data[key])
        return cls(**data)


def _rule_results(img: ImageRef, rules: ImageFilterConfig) -> list[tuple[str, bool]]:
    results: list[tuple[str, bool]] = []
    if rules.ocr_chinese and img.extracted_text is not None:
        results.append((rules.ocr_combine, contains_cjk(img.extracted_text)))
    if rules.title_keywords:
        matched = any(kw in img.title for kw in rules.title_keywords)
        results.append(
            (rules.title_combine, matched if rules.title_keywords_include else not matched)
        )
    if rules.reference_patterns:
        matched = any(
            re.search(p, img.reference_context) for p in rules.reference_patterns
        )
        results.append((rules.reference_combine, matched))
    return results


def filter_images(
    images: Iterable[ImageRef], rules: ImageFilterConfig
) -> list[ImageRef]:
    """Keep images passing the configured rule composition (subset of input)."""
    kept = []
    for img in images:
        results = _rule_results(img, rules)
        and_ok = all(passed for combine, passed in results if combine == "and")
        or_rules = [passed for combine, passed in results if combine == "or"]
        or_ok = any(or_rules) if or_rules else True
        if and_ok and or_ok:
            kept.append(img)
    return kept


def caption_images(
    images: Iterable[ImageRef],
    captioner: ImageCaptioner,
    prompt: str = DEFAULT_CAPTION_PROMPT,
    warnings: list[WarningRecord] | None = None,
) -> list[ImageRef]:
    """Fill the caption field via the captioner; failures are recorded
    per image and the pipeline continues."""
    out = []
    for img in images:
        try:
            out.append(replace(img, caption=captioner.caption(img.image_path, prompt)))
        except Exception as exc:
            if warnings is not None:
                warnings.append(
                    WarningRecord(
                        stage="caption",
                        subject=img.image_path,
                        message=f"captioner failed: {exc}",
                    )
                )
            out.append(img)
    return out
