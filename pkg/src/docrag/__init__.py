"""docrag: retrieval-augmented question answering for documentation corpora.

Library surface re-exported here; see the CLI (``docrag``) and the HTTP
service (``docrag.server``) for the deployment surfaces.
"""

from .config import PipelineConfig, apply_overrides
from .errors import (
    BackendError,
    BackendUnavailableError,
    ConfigError,
    DocragError,
    DocumentDecodeError,
    ManifestParseError,
    StageError,
    TemplateError,
    WarningRecord,
)
from .models import ExpansionMode, Route, ScoredHit, expand_document
from .pipeline import (
    Backends,
    ContextHit,
    EvalRecord,
    QaEngine,
    QueryResult,
    load_eval_records,
    reindex,
)

__version__ = "0.1.0"

__all__ = [
    "Backends",
    "BackendError",
    "BackendUnavailableError",
    "ConfigError",
    "ContextHit",
    "DocragError",
    "DocumentDecodeError",
    "EvalRecord",
    "ExpansionMode",
    "ManifestParseError",
    "PipelineConfig",
    "QaEngine",
    "QueryResult",
    "Route",
    "ScoredHit",
    "StageError",
    "TemplateError",
    "WarningRecord",
    "apply_overrides",
    "expand_document",
    "load_eval_records",
    "reindex",
    "__version__",
]
