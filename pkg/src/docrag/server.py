"""HTTP service exposing the pipeline under /v1 plus static web UI serving."""
from __future__ import annotations

import os
from pathlib import Path
from typing import Any, Literal

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, ConfigDict, Field

from .errors import BackendUnavailableError, ConfigError, DocragError, StageError
from .pipeline import QaEngine


class Overrides(BaseModel):
    """Request-scoped config overrides; same flat keys as the UI panel."""

    model_config = ConfigDict(extra="forbid")

    route_top_k: dict[Literal["chunk", "path", "dense"], int] | None = None
    coarse_fusion: Literal["simple_merge", "rrf"] | None = None
    rerank_fusion: Literal["off", "rrf", "answer_longer", "answer_concat"] | None = None
    rerank_k: int | None = Field(default=None, ge=1)
    rerank_policy: Literal["off", "max_similarity", "entropy"] | None = None
    rerank_threshold: float | None = Field(default=None, ge=0.0, le=1.0)
    compress_enabled: bool | None = None
    compress_rate: float | None = Field(default=None, gt=0.0, le=1.0)
    template: Literal["normal", "cot", "markdown", "focused"] | None = None
    answer_merge: Literal["off", "document_concat", "prompt_merge"] | None = None
    allowed_file_prefixes: list[str] | None = None


class QueryRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    question: str = Field(min_length=1)
    overrides: Overrides | None = None


class ContextModel(BaseModel):
    chunk_id: str
    text: str
    score: float
    rank: int
    route: str
    file_path: str
    knowledge_path: str


class QueryResponse(BaseModel):
    answer: str
    contexts: list[ContextModel]
    timings_ms: dict[str, float]
    config_fingerprint: str
    warnings: list[dict[str, str]] = []


def create_app(engine: QaEngine, ui_dir: str | Path | None = None) -> FastAPI:
    app = FastAPI(title="docrag", version="0.1.0")
    api_token = os.environ.get("DOCRAG_API_TOKEN")

    @app.exception_handler(RequestValidationError)
    async def _validation_handler(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400, content={"detail": exc.errors()})

    def _check_token(request: Request) -> JSONResponse | None:
        if not api_token:
            return None
        header = request.headers.get("authorization", "")
        if header != f"Bearer {api_token}":
            return JSONResponse(status_code=401, content={"detail": "invalid token"})
        return None

    @app.post("/v1/query", response_model=QueryResponse)
    async def query(body: QueryRequest, request: Request) -> Any:
        denied = _check_token(request)
        if denied is not None:
            return denied
        if not body.question.strip():
            return JSONResponse(
                status_code=400, content={"detail": "question must be non-empty"}
            )
        overrides = (
            body.overrides.model_dump(exclude_unset=True) if body.overrides else None
        )
        try:
            result = engine.run_query(body.question, overrides)
        except BackendUnavailableError as exc:
            return JSONResponse(status_code=503, content={"detail": str(exc)})
        except ConfigError as exc:
            return JSONResponse(status_code=400, content={"detail": str(exc)})
        except StageError as exc:
            return JSONResponse(
                status_code=503 if isinstance(exc.__cause__, BackendUnavailableError) else 500,
                content={"detail": str(exc), "stage": exc.stage},
            )
        except DocragError as exc:
            return JSONResponse(status_code=500, content={"detail": str(exc)})
        return QueryResponse(
            answer=result.answer,
            contexts=[ContextModel(**c.to_dict()) for c in result.contexts],
            timings_ms=result.timings_ms,
            config_fingerprint=result.config_fingerprint,
            warnings=[w.to_dict() for w in result.warnings],
        )

    @app.get("/v1/health")
    async def health() -> dict:
        doc_count = engine.n_chunks
        return {
            "status": "ok" if doc_count > 0 else "degraded",
            "index_doc_count": doc_count,
            "backends": {
                "chat": engine.backends.chat_real,
                "scorer": engine.backends.scorer_real,
                "embedder": engine.backends.embedder_real,
            },
        }

    if ui_dir is not None and Path(ui_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app
