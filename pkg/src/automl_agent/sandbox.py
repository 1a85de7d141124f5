"""Run generated shell scripts in a child process group with a timeout."""

from __future__ import annotations

import logging
import os
import shlex
import signal
import subprocess
import sys
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Mapping

from .parsing import truncate_middle

log = logging.getLogger(__name__)

TIMEOUT_CODE = -1
SPAWN_FAILURE_CODE = -2
_SECRET_SUFFIXES = ("_API_KEY", "_SECRET", "_TOKEN")


@dataclass(frozen=True)
class Workspace:
    root: Path

    @property
    def iterations(self) -> Path:
        return self.root / "iterations"


@dataclass(frozen=True)
class ExecutionResult:
    return_code: int
    stdout: str
    stderr: str
    wall_seconds: float
    timed_out: bool = False
    stdout_path: Path | None = None
    stderr_path: Path | None = None


def prepare_workspace(output_folder: str | Path) -> Workspace:
    """Create the output folder and its iterations/ subfolder; keep existing files."""
    root = Path(output_folder).expanduser().resolve()
    root.mkdir(parents=True, exist_ok=True)
    (root / "iterations").mkdir(exist_ok=True)
    if not os.access(root, os.W_OK):
        raise PermissionError(f"workspace {root} is not writable")
    return Workspace(root)


def child_environment(extra: Mapping[str, str] | None = None) -> dict[str, str]:
    """Copy of the current environment without credentials, plus ``extra``."""
    env = {
        key: value
        for key, value in os.environ.items()
        if key != "MLZERO_API_KEY" and not key.endswith(_SECRET_SUFFIXES)
    }
    if extra:
        env.update(extra)
    return env


def _pump(stream: IO[bytes], sink: IO[bytes], echo: IO[str] | None) -> None:
    for chunk in iter(lambda: stream.read1(65536), b""):
        sink.write(chunk)
        sink.flush()
        if echo is not None:
            echo.write(chunk.decode("utf-8", errors="replace"))
            echo.flush()
    stream.close()


def _group_members_from_proc(pgid: int) -> bool | None:
    """Whether a non-zombie process is in ``pgid``; None when /proc is unavailable."""
    proc = Path("/proc")
    if not (proc / "self" / "stat").exists():
        return None
    for entry in proc.iterdir():
        if not entry.name.isdigit():
            continue
        try:
            stat = (entry / "stat").read_text()
        except OSError:
            continue
        # fields after the parenthesised command name: state ppid pgrp ...
        fields = stat[stat.rfind(")") + 2:].split()
        if len(fields) > 2 and fields[0] != "Z" and int(fields[2]) == pgid:
            return True
    return False


def _group_alive(pgid: int) -> bool:
    try:
        os.killpg(pgid, 0)
    except ProcessLookupError:
        return False
    except PermissionError:
        return True
    # zombies keep a group signalable even though nothing runs in it
    from_proc = _group_members_from_proc(pgid)
    return True if from_proc is None else from_proc


def _kill_group(proc: subprocess.Popen, grace: float) -> None:
    pgid = proc.pid
    try:
        os.killpg(pgid, signal.SIGTERM)
    except ProcessLookupError:
        return
    deadline = time.monotonic() + grace
    while time.monotonic() < deadline:
        proc.poll()
        if not _group_alive(pgid):
            return
        time.sleep(0.02)
    try:
        os.killpg(pgid, signal.SIGKILL)
    except ProcessLookupError:
        pass


def execute_shell_script(
    script_text: str,
    workspace: Workspace,
    timeout_seconds: float,
    env: Mapping[str, str] | None = None,
    *,
    name: str = "run.sh",
    stdout_log: Path | None = None,
    stderr_log: Path | None = None,
    max_stdout_length: int = 8192,
    max_stderr_length: int = 2048,
    stream_output: bool = False,
    command_prefix: str | None = None,
    kill_grace_seconds: float = 10.0,
) -> ExecutionResult:
    """Write ``script_text`` to ``workspace/name`` and run it.

    The child gets its own process group so a timeout can take down every
    descendant. Full output goes to the log files; the returned streams are
    middle-truncated to the given caps.
    """
    if not script_text.strip():
        raise ValueError("script_text is empty")
    if timeout_seconds <= 0:
        raise ValueError("timeout must be positive")

    script_path = workspace.root / name
    script_path.write_text(script_text if script_text.endswith("\n") else script_text + "\n")
    script_path.chmod(0o755)
    stem = Path(name).stem
    stdout_log = stdout_log or workspace.root / f"{stem}.stdout.log"
    stderr_log = stderr_log or workspace.root / f"{stem}.stderr.log"

    argv = [str(script_path)] if script_text.startswith("#!") else ["bash", str(script_path)]
    if command_prefix:
        argv = shlex.split(command_prefix) + argv

    start = time.monotonic()
    try:
        proc = subprocess.Popen(
            argv,
            cwd=workspace.root,
            env=child_environment(env),
            stdin=subprocess.DEVNULL,
            stdout=subprocess.PIPE,
            stderr=subprocess.PIPE,
            start_new_session=True,
        )
    except OSError as exc:
        message = f"failed to start {argv[0]}: {exc}"
        stderr_log.write_text(message)
        stdout_log.write_text("")
        return ExecutionResult(
            SPAWN_FAILURE_CODE, "", message, time.monotonic() - start, False, stdout_log, stderr_log
        )

    timed_out = False
    with open(stdout_log, "wb") as out_sink, open(stderr_log, "wb") as err_sink:
        pumps = [
            threading.Thread(
                target=_pump, args=(proc.stdout, out_sink, sys.stdout if stream_output else None), daemon=True
            ),
            threading.Thread(
                target=_pump, args=(proc.stderr, err_sink, sys.stderr if stream_output else None), daemon=True
            ),
        ]
        for pump in pumps:
            pump.start()
        try:
            proc.wait(timeout=timeout_seconds)
        except subprocess.TimeoutExpired:
            timed_out = True
            log.warning("script %s exceeded %.1fs; killing process group", name, timeout_seconds)
            _kill_group(proc, kill_grace_seconds)
            proc.wait()
        else:
            # the leader finished; reap anything it left behind in its group
            if _group_alive(proc.pid):
                _kill_group(proc, kill_grace_seconds)
        for pump in pumps:
            pump.join(timeout=5)
    wall = time.monotonic() - start

    stdout = stdout_log.read_text(errors="replace")
    stderr = stderr_log.read_text(errors="replace")
    if timed_out:
        note = f"Execution timed out after {timeout_seconds:g} seconds and was killed."
        stderr = f"{stderr}\n{note}" if stderr else note
    return ExecutionResult(
        TIMEOUT_CODE if timed_out else proc.returncode,
        truncate_middle(stdout, max_stdout_length),
        truncate_middle(stderr, max_stderr_length),
        wall,
        timed_out,
        stdout_log,
        stderr_log,
    )
