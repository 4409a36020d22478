"""Exception types and warning records shared across the package."""
from __future__ import annotations

from dataclasses import dataclass


class DocragError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(DocragError):
    """Invalid or unreadable configuration (files, parameters, overrides)."""


class ManifestParseError(DocragError):
    """Node-tree manifest is not well-formed XML.

    Carries the approximate byte offset of the first error.
    """

    def __init__(self, message: str, byte_offset: int) -> None:
        super().__init__(f"{message} (byte offset {byte_offset})")
        self.byte_offset = byte_offset


class DocumentDecodeError(DocragError):
    """Source document bytes could not be decoded."""


class TemplateError(DocragError):
    """Prompt template rendering failed (missing slot or unknown template)."""


class BackendError(DocragError):
    """A model backend (chat, embedder, scorer) returned an error."""


class BackendUnavailableError(BackendError):
    """A model backend could not be reached at all."""


class StageError(DocragError):
    """A pipeline stage failed; carries the stage tag."""

    def __init__(self, stage: str, message: str) -> None:
        super().__init__(f"[{stage}] {message}")
        self.stage = stage


@dataclass(frozen=True)
class WarningRecord:
    """Non-fatal problem recorded during ingestion or query processing."""

    stage: str
    subject: str
    message: str

    def to_dict(self) -> dict:
        return {"stage": self.stage, "subject": self.subject, "message": self.message}
