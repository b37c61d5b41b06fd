"""Extraction of payload code blocks, AI research plans, and mission sentinels
from assistant messages."""

from __future__ import annotations

import re
from dataclasses import dataclass

SENTINEL_COMPLETE = "MISSION COMPLETE"
SENTINEL_FAILED = "MISSION FAILED"

_FENCE_OPEN = re.compile(r"^```([^`\n]*)\s*$")
_FENCE_CLOSE = re.compile(r"^```\s*$")
_AI_RP_OPEN = re.compile(r"^\s*<\s*<\s*<\s*prompt\s*$", re.IGNORECASE)
_AI_RP_CLOSE = re.compile(r"^\s*end\s*>\s*>\s*>\s*$", re.IGNORECASE)


class UnbalancedDelimiters(Exception):
    """An AI-RP opening delimiter has no matching closer."""


@dataclass(frozen=True)
class CodeBlock:
    language_tag: str
    source: str
    ordinal: int


@dataclass(frozen=True)
class AiRp:
    body: str
    ordinal: int


def _fenced_blocks(text: str) -> list[tuple[str, str]]:
    """All terminated triple-backtick blocks as (tag, source) in order."""
    blocks = []
    tag = None
    body: list[str] = []
    for line in text.split("\n"):
        if tag is None:
            m = _FENCE_OPEN.match(line)
            if m:
                tag = m.group(1).strip()
                body = []
        elif _FENCE_CLOSE.match(line):
            blocks.append((tag, "\n".join(body)))
            tag = None
        else:
            body.append(line)
    # an unterminated fence contributes nothing
    return blocks


def extract_code_blocks(text: str, wanted_tag: str) -> list[CodeBlock]:
    """All fenced blocks whose tag equals wanted_tag (case-insensitive) or is empty."""
    wanted = wanted_tag.lower()
    out = []
    for tag, source in _fenced_blocks(text):
        if tag == "" or tag.lower() == wanted:
            out.append(CodeBlock(tag, source, len(out)))
    return out


def fence(source: str, tag: str) -> str:
    """Canonical embedding of a payload; inverse of extract_code_blocks."""
    return f"```{tag}\n{source}\n```"


def extract_ai_rps(text: str) -> list[AiRp]:
    """Bodies strictly between '< < < prompt' and 'end > > >' delimiter lines.

    Delimiter matching tolerates variable internal whitespace.
    """
    out: list[AiRp] = []
    body: list[str] | None = None
    for line in text.split("\n"):
        if body is None:
            if _AI_RP_OPEN.match(line):
                body = []
        elif _AI_RP_CLOSE.match(line):
            out.append(AiRp("\n".join(body), len(out)))
            body = None
        else:
            body.append(line)
    if body is not None:
        raise UnbalancedDelimiters("AI-RP opener without closer")
    return out


def _outside_fences(text: str) -> str:
    """Text with the contents of terminated code fences removed."""
    kept = []
    in_fence = False
    for line in text.split("\n"):
        if not in_fence:
            if _FENCE_OPEN.match(line):
                in_fence = True
            else:
                kept.append(line)
        elif _FENCE_CLOSE.match(line):
            in_fence = False
    return "\n".join(kept)


def detect_sentinel(text: str) -> str | None:
    """Return "complete" or "failed" if a sentinel token appears outside any
    code fence; completion wins when both appear."""
    visible = _outside_fences(text)
    if SENTINEL_COMPLETE in visible:
        return "complete"
    if SENTINEL_FAILED in visible:
        return "failed"
    return None
