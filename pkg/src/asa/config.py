"""Harness configuration: line-oriented key=value files with environment
overrides (ASA_<KEY>), chosen so generated payload code can write them."""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path

from .mission import Limits
from .providers import LiveProvider, Provider, ProviderConfig, ScriptedCorpus, ScriptedProvider


class ConfigError(Exception):
    pass


@dataclass(frozen=True)
class HarnessConfig:
    provider_mode: str  # "scripted" | "http"
    corpus_path: Path | None = None
    api_base: str = ""
    model: str = ""
    api_key: str = ""
    agent_id: str = "scripted"
    interpreter_command: str = "python3"
    payload_tag: str = "python"
    limits: Limits = field(default_factory=Limits)
    criteria_file: Path | None = None
    remote_target_file: Path | None = None

    def __post_init__(self):
        if self.provider_mode not in ("scripted", "http"):
            raise ConfigError(f"unknown provider mode {self.provider_mode!r}")
        if self.provider_mode == "scripted" and self.corpus_path is None:
            raise ConfigError("scripted mode requires a corpus path")
        if self.provider_mode == "http" and not self.api_base:
            raise ConfigError("http mode requires an api base URL")

    def make_provider(self) -> Provider:
        """Fresh provider per mission (the scripted cursor is per-mission)."""
        if self.provider_mode == "scripted":
            assert self.corpus_path is not None
            return ScriptedProvider(ScriptedCorpus.from_file(self.corpus_path))
        return LiveProvider(
            ProviderConfig(
                base_url=self.api_base,
                model_name=self.model,
                api_key=self.api_key,
            )
        )


def _parse_kv(path: Path) -> dict[str, str]:
    values: dict[str, str] = {}
    for line in path.read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if not line or line.startswith("#") or "=" not in line:
            continue
        key, value = line.split("=", 1)
        values[key.strip()] = value.strip()
    return values


def load_config(path: str | Path | None, env: dict[str, str] | None = None) -> HarnessConfig:
    """Read a key=value config file; ASA_* environment variables override.

    Recognized keys: provider, corpus, api_base, model, api_key_env, agent_id,
    interpreter, payload_tag, max_debug_attempts, max_turns, exec_timeout,
    memory_trim_threshold, criteria, remote_target.
    """
    env = env if env is not None else dict(os.environ)
    values: dict[str, str] = {}
    base = Path(".")
    if path is not None:
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"no such config file: {path}")
        values = _parse_kv(path)
        base = path.parent

    def get(key: str, default: str = "") -> str:
        return env.get(f"ASA_{key.upper()}", values.get(key, default))

    def resolve(value: str) -> Path:
        p = Path(value)
        return p if p.is_absolute() else (base / p)

    corpus = get("corpus")
    provider_mode = get("provider", "scripted" if corpus else "http")
    if provider_mode == "scripted":
        if not corpus:
            raise ConfigError("scripted mode requires corpus=<path>")
        corpus_path = resolve(corpus)
        if not corpus_path.is_file():
            raise ConfigError(f"no such corpus file: {corpus_path}")
    else:
        corpus_path = None

    api_key_env = get("api_key_env", "ASA_API_KEY")
    try:
        limits = Limits(
            max_debug_attempts=int(get("max_debug_attempts", "6")),
            max_turns=int(get("max_turns", "40")),
            exec_timeout=float(get("exec_timeout", "300")),
            memory_trim_threshold=int(get("memory_trim_threshold", "3")),
        )
    except ValueError as exc:
        raise ConfigError(f"bad limits: {exc}") from exc

    criteria = get("criteria")
    remote_target = get("remote_target")
    return HarnessConfig(
        provider_mode=provider_mode,
        corpus_path=corpus_path,
        api_base=env.get("ASA_API_BASE", values.get("api_base", "")),
        model=env.get("ASA_MODEL", values.get("model", "")),
        api_key=env.get(api_key_env, ""),
        agent_id=get("agent_id", get("model") or "scripted"),
        interpreter_command=get("interpreter", "python3"),
        payload_tag=get("payload_tag", "python"),
        limits=limits,
        criteria_file=resolve(criteria) if criteria else None,
        remote_target_file=resolve(remote_target) if remote_target else None,
    )
