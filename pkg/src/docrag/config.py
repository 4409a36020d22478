"""Declarative pipeline configuration.

Every field has a default reproducing the best known variant: dual sparse
routes (chunk top-192 with knowledge-path expansion, path top-6), simple
merge, top-6 rerank at the deep layer with file-path expansion, normal QA
template, and document-concat answer merging. A YAML file mirroring the
field names overrides any subset, and per-request overrides use the same
flat key schema as the web UI panel.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any

import yaml

from .errors import ConfigError
from .models import ExpansionMode, Route
from .qa.rewrite import HydeMode
from .qa.templates import QaTemplate
from .rerank import ExitMode

COARSE_FUSION_STRATEGIES = ("simple_merge", "rrf")
RERANK_FUSION_STRATEGIES = ("off", "rrf", "answer_longer", "answer_concat")
ANSWER_MERGE_MODES = ("off", "document_concat", "prompt_merge")


@dataclass(frozen=True)
class RouteSpec:
    type: Route
    top_k: int
    expansion: ExpansionMode = ExpansionMode.NONE

    def validate(self) -> None:
        if self.top_k <= 0:
            raise ConfigError(f"route {self.type.value}: top_k must be positive")


def default_routes() -> tuple[RouteSpec, ...]:
    return (
        RouteSpec(Route.CHUNK, top_k=192, expansion=ExpansionMode.KNOWLEDGE_PATH),
        RouteSpec(Route.PATH, top_k=6),
    )


DENSE_ROUTE_DEFAULT = RouteSpec(Route.DENSE, top_k=288, expansion=ExpansionMode.FILE_PATH)


@dataclass(frozen=True)
class RerankSettings:
    enabled: bool = True
    k: int = 6
    expansion: ExpansionMode = ExpansionMode.FILE_PATH
    policy: ExitMode = ExitMode.OFF
    threshold: float = 0.4
    batch_size: int = 32
    shallow_layer: int = 12
    deep_layer: int = 28

    def validate(self) -> None:
        if self.k <= 0:
            raise ConfigError("rerank.k must be positive")
        if self.batch_size <= 0:
            raise ConfigError("rerank.batch_size must be positive")
        if self.shallow_layer >= self.deep_layer:
            raise ConfigError("rerank.shallow_layer must be below rerank.deep_layer")
        if not 0.0 <= self.threshold <= 1.0:
            raise ConfigError("rerank.threshold must be in [0, 1]")


@dataclass(frozen=True)
class RewriteSettings:
    expansion: bool = False
    hyde: HydeMode = HydeMode.OFF
    hyde_use: str = "coarse"  # coarse | rerank
    few_shot_path: str | None = None

    def validate(self) -> None:
        if self.hyde_use not in ("coarse", "rerank"):
            raise ConfigError("rewrite.hyde_use must be 'coarse' or 'rerank'")


@dataclass(frozen=True)
class CompressSettings:
    enabled: bool = False
    rate: float = 0.5  # 0.8 is the other supported operating point
    min_sentences: int = 1

    def validate(self) -> None:
        if not 0.0 < self.rate <= 1.0:
            raise ConfigError("compress.rate must be in (0, 1]")
        if self.min_sentences < 0:
            raise ConfigError("compress.min_sentences must be >= 0")


@dataclass(frozen=True)
class PipelineConfig:
    routes: tuple[RouteSpec, ...] = field(default_factory=default_routes)
    coarse_fusion: str = "simple_merge"
    rerank_fusion: str = "off"
    rrf_k_offset: float = 0.0
    rerank: RerankSettings = field(default_factory=RerankSettings)
    rewrite: RewriteSettings = field(default_factory=RewriteSettings)
    compress: CompressSettings = field(default_factory=CompressSettings)
    template: QaTemplate = QaTemplate.NORMAL
    answer_merge: str = "document_concat"
    include_image_captions: bool = True
    allowed_file_prefixes: tuple[str, ...] | None = None
    k1: float = 1.5
    b: float = 0.75
    chunk_size: int = 1024
    chunk_overlap: int = 200
    dictionary_path: str | None = None
    stopwords_path: str | None = None
    template_dir: str | None = None
    dense_dimension: int = 256
    query_prompt_template: str = "{query}"

    def validate(self) -> "PipelineConfig":
        if not self.routes:
            raise ConfigError("at least one retrieval route must be enabled")
        seen = set()
        for route in self.routes:
            route.validate()
            if route.type in seen:
                raise ConfigError(f"duplicate route type {route.type.value}")
            seen.add(route.type)
        if self.coarse_fusion not in COARSE_FUSION_STRATEGIES:
            raise ConfigError(
                f"coarse_fusion must be one of {COARSE_FUSION_STRATEGIES}"
            )
        if self.rerank_fusion not in RERANK_FUSION_STRATEGIES:
            raise ConfigError(
                f"rerank_fusion must be one of {RERANK_FUSION_STRATEGIES}"
            )
        if self.answer_merge not in ANSWER_MERGE_MODES:
            raise ConfigError(f"answer_merge must be one of {ANSWER_MERGE_MODES}")
        if self.rrf_k_offset < 0:
            raise ConfigError("rrf_k_offset must be >= 0")
        if self.template == QaTemplate.INTEGRATE:
            raise ConfigError("the integrate template is reserved for answer merging")
        self.rerank.validate()
        self.rewrite.validate()
        self.compress.validate()
        return self

    # -- serialization ----------------------------------------------------

    def to_dict(self) -> dict:
        d = asdict(self)
        d["routes"] = [
            {
                "type": Route(r.type).value,
                "top_k": r.top_k,
                "expansion": ExpansionMode(r.expansion).value,
            }
            for r in self.routes
        ]
        d["rerank"] = {
            **d["rerank"],
            "expansion": ExpansionMode(self.rerank.expansion).value,
            "policy": ExitMode(self.rerank.policy).value,
        }
        d["rewrite"] = {**d["rewrite"], "hyde": HydeMode(self.rewrite.hyde).value}
        d["template"] = QaTemplate(self.template).value
        d["allowed_file_prefixes"] = (
            list(self.allowed_file_prefixes)
            if self.allowed_file_prefixes is not None
            else None
        )
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "PipelineConfig":
        data = dict(data)
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            if "routes" in data:
                data["routes"] = tuple(
                    RouteSpec(
                        type=Route(r["type"]),
                        top_k=int(r["top_k"]),
                        expansion=ExpansionMode(r.get("expansion", "none")),
                    )
                    for r in data["routes"]
                )
            if "rerank" in data:
                raw = dict(data["rerank"])
                if "expansion" in raw:
                    raw["expansion"] = ExpansionMode(raw["expansion"])
                if "policy" in raw:
                    raw["policy"] = ExitMode(raw["policy"])
                data["rerank"] = RerankSettings(**raw)
            if "rewrite" in data:
                raw = dict(data["rewrite"])
                if "hyde" in raw:
                    raw["hyde"] = HydeMode(raw["hyde"])
                data["rewrite"] = RewriteSettings(**raw)
            if "compress" in data:
                data["compress"] = CompressSettings(**data["compress"])
            if "template" in data:
                data["template"] = QaTemplate(data["template"])
            if data.get("allowed_file_prefixes") is not None:
                data["allowed_file_prefixes"] = tuple(data["allowed_file_prefixes"])
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"invalid config value: {exc}") from exc
        return cls(**data).validate()

    @classmethod
    def from_file(cls, path: str | Path) -> "PipelineConfig":
        try:
            raw = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config file {path}: {exc}") from exc
        data = yaml.safe_load(raw) or {}
        if not isinstance(data, dict):
            raise ConfigError(f"config file {path} must hold a mapping")
        return cls.from_dict(data)

    def fingerprint(self) -> str:
        canonical = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]


# -- per-request overrides (flat keys shared with the web UI panel) -------

OVERRIDE_KEYS = (
    "route_top_k",
    "coarse_fusion",
    "rerank_fusion",
    "rerank_k",
    "rerank_policy",
    "rerank_threshold",
    "compress_enabled",
    "compress_rate",
    "template",
    "answer_merge",
    "allowed_file_prefixes",
)


def apply_overrides(config: PipelineConfig, overrides: dict[str, Any]) -> PipelineConfig:
    """Return a new config with the request-scoped overrides applied.

    The input config is never mutated. Raises ConfigError on unknown keys
    or invalid values.
    """
    if not overrides:
        return config
    unknown = set(overrides) - set(OVERRIDE_KEYS)
    if unknown:
        raise ConfigError(f"unknown override keys: {sorted(unknown)}")
    cfg = config
    try:
        if "route_top_k" in overrides and overrides["route_top_k"] is not None:
            by_type = {Route(k): int(v) for k, v in overrides["route_top_k"].items()}
            cfg = replace(
                cfg,
                routes=tuple(
                    replace(r, top_k=by_type.get(r.type, r.top_k)) for r in cfg.routes
                ),
            )
        if overrides.get("coarse_fusion") is not None:
            cfg = replace(cfg, coarse_fusion=overrides["coarse_fusion"])
        if overrides.get("rerank_fusion") is not None:
            cfg = replace(cfg, rerank_fusion=overrides["rerank_fusion"])
        rerank_kwargs = {}
        if overrides.get("rerank_k") is not None:
            rerank_kwargs["k"] = int(overrides["rerank_k"])
        if overrides.get("rerank_policy") is not None:
            rerank_kwargs["policy"] = ExitMode(overrides["rerank_policy"])
        if overrides.get("rerank_threshold") is not None:
            rerank_kwargs["threshold"] = float(overrides["rerank_threshold"])
        if rerank_kwargs:
            cfg = replace(cfg, rerank=replace(cfg.rerank, **rerank_kwargs))
        compress_kwargs = {}
        if overrides.get("compress_enabled") is not None:
            compress_kwargs["enabled"] = bool(overrides["compress_enabled"])
        if overrides.get("compress_rate") is not None:
            compress_kwargs["rate"] = float(overrides["compress_rate"])
        if compress_kwargs:
            cfg = replace(cfg, compress=replace(cfg.compress, **compress_kwargs))
        if overrides.get("template") is not None:
            cfg = replace(cfg, template=QaTemplate(overrides["template"]))
        if overrides.get("answer_merge") is not None:
            cfg = replace(cfg, answer_merge=overrides["answer_merge"])
        if "allowed_file_prefixes" in overrides:
            prefixes = overrides["allowed_file_prefixes"]
            cfg = replace(
                cfg,
                allowed_file_prefixes=tuple(prefixes) if prefixes is not None else None,
            )
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"invalid override value: {exc}") from exc
    return cfg.validate()
