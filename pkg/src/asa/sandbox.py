"""Sandboxed payload execution: one child process per call, confined to a
workspace directory, with output capture and a before/after file diff."""

from __future__ import annotations

import hashlib
import os
import shlex
import shutil
import subprocess
from dataclasses import dataclass, field
from pathlib import Path

OUTPUT_CAP = 32 * 1024  # bytes of stdout/stderr kept per run


class InterpreterNotFound(Exception):
    pass


class WorkspaceUnwritable(Exception):
    pass


@dataclass(frozen=True)
class ExecutionOutcome:
    exit_ok: bool
    exit_code: int
    stdout: str
    stderr: str
    duration: float
    files_created: tuple[str, ...] = ()
    timed_out: bool = False


@dataclass(frozen=True)
class FileManifest:
    entries: dict[str, tuple[int, str]] = field(default_factory=dict)


def snapshot_workspace(workspace: str | Path) -> FileManifest:
    """Deterministic manifest of relative path -> (size, sha256)."""
    root = Path(workspace)
    entries: dict[str, tuple[int, str]] = {}
    for path in sorted(root.rglob("*")):
        if not path.is_file():
            continue
        rel = path.relative_to(root).as_posix()
        data = path.read_bytes()
        entries[rel] = (len(data), hashlib.sha256(data).hexdigest())
    return FileManifest(entries)


def _truncate(data: bytes) -> str:
    if len(data) > OUTPUT_CAP:
        data = data[:OUTPUT_CAP]
    return data.decode("utf-8", errors="replace")


def execute_program(
    source: str,
    workspace: str | Path,
    interpreter_command: str,
    timeout: float,
    name: str | None = None,
    extension: str = ".py",
    extra_env: dict[str, str] | None = None,
) -> ExecutionOutcome:
    """Write source to a turn-numbered file in the workspace and run it there.

    The process is killed at the timeout. files_created is the manifest diff
    (new or modified files), excluding the payload source file itself.
    """
    root = Path(workspace)
    if not root.is_dir():
        raise WorkspaceUnwritable(f"{root} does not exist")
    if not os.access(root, os.W_OK):
        raise WorkspaceUnwritable(str(root))

    if name is None:
        existing = len(list(root.glob(f"prog_*{extension}")))
        name = f"prog_{existing}_0"
    prog = root / (name + extension)
    try:
        prog.write_text(source, encoding="utf-8")
    except OSError as exc:
        raise WorkspaceUnwritable(str(root)) from exc

    argv = shlex.split(interpreter_command) + [prog.name]
    if shutil.which(argv[0]) is None:
        raise InterpreterNotFound(argv[0])

    env = dict(os.environ)
    if extra_env:
        env.update(extra_env)
    env.setdefault("TRIAL_INDEX", "0")

    before = snapshot_workspace(root)
    import time as _time

    start = _time.monotonic()
    timed_out = False
    proc = subprocess.Popen(
        argv,
        cwd=root,
        env=env,
        stdout=subprocess.PIPE,
        stderr=subprocess.PIPE,
    )
    try:
        out, err = proc.communicate(timeout=timeout)
    except subprocess.TimeoutExpired:
        timed_out = True
        proc.kill()
        out, err = proc.communicate()
    duration = _time.monotonic() - start
    after = snapshot_workspace(root)

    created = [
        rel
        for rel, entry in after.entries.items()
        if rel != prog.name and before.entries.get(rel) != entry
    ]
    exit_code = proc.returncode
    return ExecutionOutcome(
        exit_ok=(exit_code == 0 and not timed_out),
        exit_code=exit_code,
        stdout=_truncate(out),
        stderr=_truncate(err),
        duration=duration,
        files_created=tuple(sorted(created)),
        timed_out=timed_out,
    )


class Sandbox:
    """Executor handle bound to one workspace: names payload files
    prog_<turn>_<attempt> and threads TRIAL_INDEX through the environment."""

    def __init__(
        self,
        workspace: str | Path,
        interpreter_command: str = "python3",
        timeout: float = 300.0,
        extension: str = ".py",
        trial_index: int = 0,
        extra_env: dict[str, str] | None = None,
    ):
        self.workspace = Path(workspace)
        self.interpreter_command = interpreter_command
        self.timeout = timeout
        self.extension = extension
        self.extra_env = {"TRIAL_INDEX": str(trial_index), **(extra_env or {})}

    def run(self, source: str, turn: int, attempt: int) -> ExecutionOutcome:
        return execute_program(
            source,
            self.workspace,
            self.interpreter_command,
            self.timeout,
            name=f"prog_{turn}_{attempt}",
            extension=self.extension,
            extra_env=self.extra_env,
        )
