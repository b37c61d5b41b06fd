"""Core mission domain types and transcript persistence."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from pathlib import Path

ROLES = ("system", "user", "assistant")


class NotUtf8(Exception):
    """Research plan file is not valid UTF-8."""


@dataclass(frozen=True)
class Limits:
    """Execution budgets for one mission."""

    max_debug_attempts: int = 6
    max_turns: int = 40
    exec_timeout: float = 300.0
    memory_trim_threshold: int = 3

    def __post_init__(self):
        if self.max_debug_attempts < 1 or self.max_turns < 1:
            raise ValueError("limits must be >= 1")
        if self.exec_timeout <= 0 or self.memory_trim_threshold < 1:
            raise ValueError("invalid limits")


@dataclass(frozen=True)
class ResearchPlan:
    """A mission text bound to a workspace and execution limits."""

    id: str
    text: str
    workspace: Path
    payload_language_tag: str = "python"
    limits: Limits = field(default_factory=Limits)
    trial_index: int = 0

    def __post_init__(self):
        if not self.text:
            raise ValueError("research plan text must be nonempty")
        if self.trial_index < 0:
            raise ValueError("trial_index must be >= 0")


@dataclass(frozen=True)
class Message:
    role: str
    content: str
    timestamp: datetime

    def __post_init__(self):
        if self.role not in ROLES:
            raise ValueError(f"unknown role {self.role!r}")
        if not self.content and self.role != "system":
            raise ValueError("only system messages may be empty")


def utcnow() -> datetime:
    return datetime.now(timezone.utc)


def system_message(content: str) -> Message:
    return Message("system", content, utcnow())


def user_message(content: str) -> Message:
    return Message("user", content, utcnow())


def assistant_message(content: str) -> Message:
    return Message("assistant", content, utcnow())


class DialogueHistory:
    """Append-only ordered transcript; the agent's entire memory."""

    def __init__(self, messages: list[Message] | None = None):
        self._messages: list[Message] = []
        for m in messages or []:
            self.append(m)

    @property
    def messages(self) -> tuple[Message, ...]:
        return tuple(self._messages)

    def append(self, message: Message) -> None:
        if message.role != "system" and not any(
            m.role != "system" for m in self._messages
        ):
            if message.role != "user":
                raise ValueError("first non-system message must be from the user")
        self._messages.append(message)

    def last(self) -> Message:
        return self._messages[-1]

    def __len__(self) -> int:
        return len(self._messages)

    def __iter__(self):
        return iter(self._messages)

    def __eq__(self, other) -> bool:
        if not isinstance(other, DialogueHistory):
            return NotImplemented
        return self._messages == other._messages


@dataclass(frozen=True)
class MissionStatus:
    """Terminal or running state of a mission."""

    state: str  # "running" | "complete" | "failed"
    reason: str = ""
    turns_used: int = 0
    debug_attempts_current: int = 0

    @property
    def terminal(self) -> bool:
        return self.state in ("complete", "failed")

    @staticmethod
    def running() -> "MissionStatus":
        return MissionStatus("running")

    def advanced(self, **kw) -> "MissionStatus":
        if self.terminal:
            raise ValueError("cannot transition out of a terminal state")
        return replace(self, **kw)


@dataclass(frozen=True)
class TrialRecord:
    """Criteria bookkeeping for one trial of one agent."""

    agent_id: str
    rp_id: str
    trial_index: int
    criteria_met: tuple[bool, ...]
    artifacts_dir: Path


def load_research_plan(
    path: str | Path,
    trial_index: int = 0,
    limits: Limits | None = None,
    payload_language_tag: str = "python",
    base_dir: str | Path | None = None,
) -> ResearchPlan:
    """Load a research plan text file.

    The workspace defaults to ``<base_dir>/trial_<trial_index>`` with
    base_dir falling back to the current directory (the ``-n i`` convention).
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(path)
    try:
        text = path.read_bytes().decode("utf-8")
    except UnicodeDecodeError as exc:
        raise NotUtf8(str(path)) from exc
    base = Path(base_dir) if base_dir is not None else Path.cwd()
    workspace = (base / f"trial_{trial_index}").resolve()
    return ResearchPlan(
        id=path.stem,
        text=text,
        workspace=workspace,
        payload_language_tag=payload_language_tag,
        limits=limits or Limits(),
        trial_index=trial_index,
    )


def persist_transcript(history: DialogueHistory, path: str | Path) -> None:
    """Write one JSON object per message (role, content, timestamp), LF endings."""
    lines = []
    for m in history:
        lines.append(
            json.dumps(
                {
                    "role": m.role,
                    "content": m.content,
                    "timestamp": m.timestamp.isoformat(),
                },
                ensure_ascii=False,
            )
        )
    Path(path).write_text("".join(line + "\n" for line in lines), encoding="utf-8")


def load_transcript(path: str | Path) -> DialogueHistory:
    history = DialogueHistory()
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            history.append(
                Message(
                    rec["role"],
                    rec["content"],
                    datetime.fromisoformat(rec["timestamp"]),
                )
            )
    return history
