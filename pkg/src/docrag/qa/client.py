"""Chat-model clients: an HTTP chat-completions backend and a deterministic
mock whose replies digest the prompt (template name, document ids, query
echo) so end-to-end tests can assert on plain strings."""
from __future__ import annotations

import re
from typing import Protocol, runtime_checkable

import httpx

from ..errors import BackendError, BackendUnavailableError
from .templates import parse_prompt

_DOC_HEADER_RE = re.compile(r"### Document (\d+):")


@runtime_checkable
class ChatClient(Protocol):
    def complete(
        self, prompt: str, temperature: float = 0.0, max_tokens: int = 1024
    ) -> str:
        """Return the model completion for the prompt."""


class HttpChatClient:
    """Client for a chat-completions style endpoint.

    POSTs ``{model, messages, temperature, max_tokens}`` to ``base_url`` and
    returns ``choices[0].message.content``. Connection problems raise
    BackendUnavailableError; bad statuses raise BackendError.
    """

    def __init__(
        self,
        base_url: str,
        api_key: str | None = None,
        model: str = "default",
        timeout: float = 60.0,
    ) -> None:
        self.base_url = base_url.rstrip("/")
        self.model = model
        headers = {"Authorization": f"Bearer {api_key}"} if api_key else {}
        self._client = httpx.Client(timeout=timeout, headers=headers)

    def complete(
        self, prompt: str, temperature: float = 0.0, max_tokens: int = 1024
    ) -> str:
        payload = {
            "model": self.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": temperature,
            "max_tokens": max_tokens,
        }
        try:
            response = self._client.post(
                f"{self.base_url}/chat/completions", json=payload
            )
        except httpx.TransportError as exc:
            raise BackendUnavailableError(f"chat backend unreachable: {exc}") from exc
        if response.status_code != 200:
            raise BackendError(
                f"chat backend returned {response.status_code}: {response.text[:200]}"
            )
        try:
            return response.json()["choices"][0]["message"]["content"]
        except (KeyError, IndexError, ValueError) as exc:
            raise BackendError(f"malformed chat response: {exc}") from exc


class MockChatClient:
    """Deterministic test double.

    The reply is a canonical digest: the template name, the document ids
    seen in the context (sorted), and the remaining slot values echoed
    verbatim. Unrecognized prompts are echoed behind ``template=unknown``.
    """

    def __init__(self) -> None:
        self.calls: list[str] = []

    @property
    def call_count(self) -> int:
        return len(self.calls)

    def complete(
        self, prompt: str, temperature: float = 0.0, max_tokens: int = 1024
    ) -> str:
        self.calls.append(prompt)
        parsed = parse_prompt(prompt)
        if parsed is None:
            return f"template=unknown | prompt={prompt}"
        name, slots = parsed
        parts = [f"template={name}"]
        for slot in sorted(slots):
            value = slots[slot]
            if slot == "context_str":
                doc_ids = sorted(_DOC_HEADER_RE.findall(value), key=int)
                if doc_ids:
                    parts.append(f"docs={','.join(doc_ids)}")
                    continue
            parts.append(f"{slot}={value}")
        return " | ".join(parts)
