"""Chat-model backends: a live HTTP chat-completion client and a deterministic
scripted provider used for reproducible runs and tests."""

from __future__ import annotations

import json
import re
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol

import httpx

from .mission import DialogueHistory, Message, assistant_message


class NetworkError(Exception):
    """Transport failure that persisted through all retries."""


class AuthError(Exception):
    """Authentication rejected; never retried."""


class MalformedResponse(Exception):
    """Backend returned something that is not a chat completion."""


class CorpusExhausted(Exception):
    """Scripted corpus has no entries left."""


class MatchViolation(Exception):
    """A corpus entry's match pattern did not match the last user message."""


@dataclass(frozen=True)
class ProviderConfig:
    base_url: str
    model_name: str
    api_key: str = ""
    request_timeout: float = 60.0
    max_retries: int = 2
    temperature: float = 0.0
    backoff_base: float = 0.5

    def __post_init__(self):
        httpx.URL(self.base_url)  # raises on syntactically invalid URLs
        if not 0 <= self.max_retries <= 10:
            raise ValueError("max_retries must be in [0, 10]")
        if not 0.0 <= self.temperature <= 2.0:
            raise ValueError("temperature must be in [0, 2]")


class Provider(Protocol):
    def complete(self, history: DialogueHistory) -> Message: ...


def send_chat(
    config: ProviderConfig,
    history: DialogueHistory,
    transport: httpx.BaseTransport | None = None,
) -> Message:
    """One chat completion round-trip with bounded retries.

    Retries 5xx/429 and network failures with exponential backoff; 401/403
    fail immediately. Never mutates the history.
    """
    if len(history) == 0:
        raise ValueError("history must be nonempty")
    if history.last().role == "assistant":
        raise ValueError("last message must not be from the assistant")

    payload = {
        "model": config.model_name,
        "temperature": config.temperature,
        "messages": [{"role": m.role, "content": m.content} for m in history],
    }
    headers = {"Content-Type": "application/json"}
    if config.api_key:
        headers["Authorization"] = f"Bearer {config.api_key}"

    url = config.base_url.rstrip("/") + "/chat/completions"
    last_error: Exception | None = None
    with httpx.Client(transport=transport, timeout=config.request_timeout) as client:
        for attempt in range(config.max_retries + 1):
            if attempt:
                time.sleep(config.backoff_base * 2 ** (attempt - 1))
            try:
                resp = client.post(url, json=payload, headers=headers)
            except httpx.HTTPError as exc:
                last_error = exc
                continue
            if resp.status_code in (401, 403):
                raise AuthError(f"status {resp.status_code}")
            if resp.status_code >= 500 or resp.status_code == 429:
                last_error = NetworkError(f"status {resp.status_code}")
                continue
            if resp.status_code != 200:
                raise MalformedResponse(f"status {resp.status_code}")
            try:
                body = resp.json()
                content = body["choices"][0]["message"]["content"]
            except (json.JSONDecodeError, KeyError, IndexError, TypeError) as exc:
                raise MalformedResponse(str(exc)) from exc
            if not isinstance(content, str) or not content:
                raise MalformedResponse("empty assistant content")
            return assistant_message(content)
    raise NetworkError(f"gave up after {config.max_retries} retries: {last_error}")


class LiveProvider:
    """Provider backed by an HTTP chat-completion endpoint."""

    def __init__(
        self,
        config: ProviderConfig,
        transport: httpx.BaseTransport | None = None,
    ):
        self.config = config
        self._transport = transport

    def complete(self, history: DialogueHistory) -> Message:
        return send_chat(self.config, history, transport=self._transport)


@dataclass(frozen=True)
class CorpusEntry:
    response: str
    match: str | None = None


class ScriptedCorpus:
    """Ordered canned responses, optionally guarded by patterns on the last
    user message. Consumed strictly in order."""

    def __init__(self, entries: list[CorpusEntry]):
        self.entries = list(entries)

    @staticmethod
    def from_file(path: str | Path) -> "ScriptedCorpus":
        entries = []
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                rec = json.loads(line)
                entries.append(CorpusEntry(rec["response"], rec.get("match")))
        return ScriptedCorpus(entries)

    def to_file(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for e in self.entries:
                fh.write(
                    json.dumps({"match": e.match, "response": e.response}) + "\n"
                )


class ScriptedProvider:
    """Deterministic replay of a ScriptedCorpus. Cursor confined to one mission."""

    def __init__(self, corpus: ScriptedCorpus):
        self._entries = list(corpus.entries)
        self._cursor = 0

    def complete(self, history: DialogueHistory) -> Message:
        return scripted_next(self, history)


def scripted_next(provider: ScriptedProvider, history: DialogueHistory) -> Message:
    if provider._cursor >= len(provider._entries):
        raise CorpusExhausted(f"after {provider._cursor} responses")
    entry = provider._entries[provider._cursor]
    if entry.match is not None:
        last_user = next(
            (m.content for m in reversed(history.messages) if m.role == "user"), ""
        )
        if not re.search(entry.match, last_user):
            raise MatchViolation(
                f"entry {provider._cursor}: pattern {entry.match!r} "
                f"does not match the last user message"
            )
    provider._cursor += 1
    return assistant_message(entry.response)
