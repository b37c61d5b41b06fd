"""Remote job running: upload files, execute commands, and download results.

Two transports share one interface: an OpenSSH-based client for live hosts
and an in-process loopback stub (a local directory posing as the remote) so
the full round-trip is testable without a server.
"""

from __future__ import annotations

import shlex
import shutil
import subprocess
from dataclasses import dataclass
from pathlib import Path, PurePosixPath
from typing import Protocol

from .sandbox import ExecutionOutcome


class ConnectFailed(Exception):
    pass


class AuthFailed(Exception):
    pass


class TransferFailed(Exception):
    pass


class RemoteExecFailed(Exception):
    pass


@dataclass(frozen=True)
class RemoteTarget:
    host: str
    port: int
    username: str
    auth_method: str  # "password" | "key"
    auth_value: str  # the password itself, or a key file path
    remote_dir: str

    def __post_init__(self):
        if not 1 <= self.port <= 65535:
            raise ValueError("port out of range")
        if not self.remote_dir:
            raise ValueError("remote_dir must be nonempty")
        if self.auth_method not in ("password", "key"):
            raise ValueError("auth must be password or key")


def load_remote_target(path: str | Path, password: str | None = None) -> RemoteTarget:
    """Parse a key=value target description file.

    The password never lives on disk; it is passed in (normally from the
    ASA_REMOTE_PASSWORD environment variable).
    """
    fields: dict[str, str] = {}
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if not line or line.startswith("#") or "=" not in line:
            continue
        key, value = line.split("=", 1)
        fields[key.strip()] = value.strip()
    auth = fields.get("auth", "password")
    return RemoteTarget(
        host=fields["host"],
        port=int(fields.get("port", "22")),
        username=fields["username"],
        auth_method=auth,
        auth_value=(password or "") if auth == "password" else fields.get("key", ""),
        remote_dir=fields["remote_dir"],
    )


class Transport(Protocol):
    def put(self, local: Path, remote_rel: str) -> None: ...
    def get(self, remote_rel: str, local: Path) -> None: ...
    def listdir(self, remote_rel: str) -> list[str]: ...
    def exec(self, command: str, working_rel: str) -> tuple[int, bytes, bytes]: ...
    def close(self) -> None: ...


class LoopbackTransport:
    """Stub transport backed by a local directory; enforces the target's
    password so auth failures are testable."""

    def __init__(self, target: RemoteTarget, root: str | Path,
                 expected_password: str | None = None):
        if target.auth_method == "password" and expected_password is not None:
            if target.auth_value != expected_password:
                raise AuthFailed("wrong password")
        self.root = Path(root)
        if not self.root.is_dir():
            raise ConnectFailed(f"no such loopback root {self.root}")

    def _resolve(self, rel: str) -> Path:
        path = (self.root / rel).resolve()
        if not path.is_relative_to(self.root.resolve()):
            raise TransferFailed(f"path escapes remote root: {rel}")
        return path

    def put(self, local: Path, remote_rel: str) -> None:
        dest = self._resolve(remote_rel)
        dest.parent.mkdir(parents=True, exist_ok=True)
        shutil.copyfile(local, dest)

    def get(self, remote_rel: str, local: Path) -> None:
        try:
            shutil.copyfile(self._resolve(remote_rel), local)
        except OSError as exc:
            raise TransferFailed(f"{remote_rel}: {exc}") from exc

    def listdir(self, remote_rel: str) -> list[str]:
        base = self._resolve(remote_rel) if remote_rel else self.root
        if not base.is_dir():
            return []
        return sorted(p.name for p in base.iterdir() if p.is_file())

    def exec(self, command: str, working_rel: str) -> tuple[int, bytes, bytes]:
        cwd = self._resolve(working_rel) if working_rel else self.root
        if not cwd.is_dir():
            raise RemoteExecFailed(f"no such remote directory {working_rel}")
        proc = subprocess.run(
            command, shell=True, cwd=cwd, capture_output=True
        )
        return proc.returncode, proc.stdout, proc.stderr

    def close(self) -> None:
        pass


class SshTransport:
    """Live transport shelling out to the OpenSSH client binaries.

    Key auth only; password auth requires the loopback stub (no askpass
    helper is assumed on the host). Connections retry twice on drop.
    """

    _RETRIES = 2

    def __init__(self, target: RemoteTarget):
        if target.auth_method != "key":
            raise AuthFailed("ssh transport supports key auth only")
        self.target = target
        self._base = [
            "-o", "BatchMode=yes",
            "-o", "StrictHostKeyChecking=accept-new",
            "-i", target.auth_value,
        ]
        code, _, err = self._ssh("true")
        if code != 0:
            msg = err.decode(errors="replace")
            if "Permission denied" in msg:
                raise AuthFailed(msg)
            raise ConnectFailed(msg)

    def _dest(self) -> str:
        return f"{self.target.username}@{self.target.host}"

    def _run(self, argv: list[str]) -> tuple[int, bytes, bytes]:
        last: tuple[int, bytes, bytes] = (255, b"", b"")
        for _ in range(self._RETRIES + 1):
            proc = subprocess.run(argv, capture_output=True)
            last = (proc.returncode, proc.stdout, proc.stderr)
            if proc.returncode != 255:  # 255 = ssh connection-level failure
                return last
        return last

    def _ssh(self, command: str) -> tuple[int, bytes, bytes]:
        argv = ["ssh", *self._base, "-p", str(self.target.port),
                self._dest(), command]
        return self._run(argv)

    def put(self, local: Path, remote_rel: str) -> None:
        rel = PurePosixPath(self.target.remote_dir) / remote_rel
        self._ssh(f"mkdir -p {shlex.quote(str(rel.parent))}")
        code, _, err = self._run(
            ["scp", *self._base, "-P", str(self.target.port),
             str(local), f"{self._dest()}:{rel}"]
        )
        if code != 0:
            raise TransferFailed(err.decode(errors="replace"))

    def get(self, remote_rel: str, local: Path) -> None:
        rel = PurePosixPath(self.target.remote_dir) / remote_rel
        code, _, err = self._run(
            ["scp", *self._base, "-P", str(self.target.port),
             f"{self._dest()}:{rel}", str(local)]
        )
        if code != 0:
            raise TransferFailed(err.decode(errors="replace"))

    def listdir(self, remote_rel: str) -> list[str]:
        rel = PurePosixPath(self.target.remote_dir) / remote_rel
        code, out, _ = self._ssh(f"ls -1p {shlex.quote(str(rel))}")
        if code != 0:
            return []
        return sorted(
            name for name in out.decode().splitlines() if not name.endswith("/")
        )

    def exec(self, command: str, working_rel: str) -> tuple[int, bytes, bytes]:
        rel = PurePosixPath(self.target.remote_dir) / working_rel
        return self._ssh(f"cd {shlex.quote(str(rel))} && {command}")

    def close(self) -> None:
        pass


def open_transport(target: RemoteTarget, loopback_root: str | Path | None = None,
                   expected_password: str | None = None) -> Transport:
    if loopback_root is not None:
        return LoopbackTransport(target, loopback_root, expected_password)
    return SshTransport(target)


def upload(
    transport: Transport,
    target: RemoteTarget,
    local_paths: list[str | Path],
    remote_subdir: str,
) -> list[str]:
    """Copy local files under remote_dir/remote_subdir; returns remote paths."""
    remote_paths = []
    for local in local_paths:
        local = Path(local)
        if not local.is_file():
            raise TransferFailed(f"no such local file {local}")
        rel = str(PurePosixPath(remote_subdir) / local.name)
        transport.put(local, rel)
        remote_paths.append(str(PurePosixPath(target.remote_dir) / rel))
    return remote_paths


def run_remote(
    transport: Transport,
    target: RemoteTarget,
    command: str,
    working_subdir: str,
) -> ExecutionOutcome:
    """Run a command with the remote working directory remote_dir/working_subdir.

    Remote file diffing is out of scope; files_created stays empty.
    """
    import time

    start = time.monotonic()
    code, out, err = transport.exec(command, working_subdir)
    return ExecutionOutcome(
        exit_ok=(code == 0),
        exit_code=code,
        stdout=out.decode("utf-8", errors="replace"),
        stderr=err.decode("utf-8", errors="replace"),
        duration=time.monotonic() - start,
    )


def download(
    transport: Transport,
    target: RemoteTarget,
    remote_glob: str,
    local_dir: str | Path,
) -> list[Path]:
    """Copy remote files matching the glob into local_dir; empty match is []"""
    import fnmatch

    local_dir = Path(local_dir)
    if not local_dir.is_dir() or not _writable(local_dir):
        raise TransferFailed(f"local dir not writable: {local_dir}")
    subdir = str(PurePosixPath(remote_glob).parent)
    if subdir == ".":
        subdir = ""
    pattern = PurePosixPath(remote_glob).name
    fetched = []
    for name in transport.listdir(subdir):
        if fnmatch.fnmatch(name, pattern):
            dest = local_dir / name
            rel = str(PurePosixPath(subdir) / name) if subdir else name
            transport.get(rel, dest)
            fetched.append(dest)
    return fetched


def _writable(path: Path) -> bool:
    import os

    return os.access(path, os.W_OK)
