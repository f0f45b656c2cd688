"""Turning CAD code into meshes.

Two engines satisfy the same contract: render(code) -> RenderResult.
CsgEngine compiles the built-in language in-process.  ExternalEngine
ships the code to a runner child process over newline-delimited JSON,
one request per line, and loads the STL the runner writes:

    request:  {"id": int, "code": str, "timeout_s": float, "out_dir": str}
    response: {"id": int, "ok": bool, "stl_path": str?, "error": str?}

Neither engine ever raises out of render(); every failure becomes a
RenderResult with a non-empty error text, because that text feeds the
repair prompt.
"""

from __future__ import annotations

import json
import os
import select
import subprocess
import threading
import time
from dataclasses import dataclass

from .csg import compile_source
from .errors import ConstraintError, CsgSyntaxError, TriangulationError
from .geometry import TriMesh, load_stl

DEFAULT_TIMEOUT_S = 30.0

# answers may arrive a little late; beyond this slack the runner is stuck
_DEADLINE_SLACK = 1.08


@dataclass(frozen=True)
class RenderResult:
    ok: bool
    mesh: TriMesh | None = None
    artifact: str = ""
    error: str = ""

    def __post_init__(self):
        if self.ok and self.mesh is None:
            raise ValueError("a successful render carries a mesh")
        if not self.ok and not self.error:
            raise ValueError("a failed render carries an error text")


class CsgEngine:
    """In-process engine for the built-in language."""

    identity = "csg"

    def render(self, code: str, timeout_s: float | None = None) -> RenderResult:
        try:
            mesh = compile_source(code)
        except CsgSyntaxError as exc:
            return RenderResult(
                False, error=f"syntax error at line {exc.line}, column {exc.col}: {exc}"
            )
        except (ConstraintError, TriangulationError) as exc:
            return RenderResult(False, error=str(exc))
        except Exception as exc:  # contract: never raise past this boundary
            return RenderResult(False, error=f"internal: {exc}")
        return RenderResult(True, mesh=mesh)


def render(code: str, engine, timeout_s: float | None = None) -> RenderResult:
    """Uniform entry point over any engine."""
    return engine.render(code, timeout_s=timeout_s)


class _RunnerCrash(Exception):
    pass


class ExternalEngine:
    """Serializes render requests to one runner child process.

    The child is started lazily and restarted once per request if it
    crashes mid-flight; a second crash fails the request.  A runner that
    stays silent past the timeout (plus slack) is killed and the request
    reported as timed out.
    """

    identity = "external"

    def __init__(self, command: list[str], out_dir: str,
                 timeout_s: float = DEFAULT_TIMEOUT_S):
        if not command:
            raise ValueError("runner command must be non-empty")
        self._command = list(command)
        self._out_dir = str(out_dir)
        self._timeout_s = float(timeout_s)
        self._proc = None
        self._next_id = 0
        self._lock = threading.Lock()

    def close(self):
        with self._lock:
            self._kill()

    def __enter__(self):
        return self

    def __exit__(self, *exc_info):
        self.close()

    def render(self, code: str, timeout_s: float | None = None) -> RenderResult:
        budget = float(timeout_s) if timeout_s else self._timeout_s
        with self._lock:
            last_error = "runner unavailable"
            for _ in range(2):  # fresh process gets one more chance
                try:
                    self._ensure_process()
                    response = self._roundtrip(code, budget)
                except _RunnerCrash as exc:
                    self._kill()
                    last_error = f"runner crashed: {exc}"
                    continue
                except OSError as exc:
                    self._kill()
                    last_error = f"runner failed to start: {exc}"
                    continue
                return self._interpret(response)
            return RenderResult(False, error=last_error)

    # -- child process management

    def _ensure_process(self):
        if self._proc is None or self._proc.poll() is not None:
            self._proc = subprocess.Popen(
                self._command,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                stderr=subprocess.DEVNULL,
            )

    def _kill(self):
        if self._proc is not None and self._proc.poll() is None:
            self._proc.kill()
            self._proc.wait()
        self._proc = None

    # -- one request/response exchange

    def _roundtrip(self, code: str, budget: float) -> dict:
        req_id = self._next_id
        self._next_id += 1
        request = {
            "id": req_id,
            "code": code,
            "timeout_s": budget,
            "out_dir": self._out_dir,
        }
        proc = self._proc
        try:
            proc.stdin.write((json.dumps(request) + "\n").encode())
            proc.stdin.flush()
        except (BrokenPipeError, OSError) as exc:
            raise _RunnerCrash(str(exc))
        line = self._read_line(proc, time.monotonic() + _DEADLINE_SLACK * budget)
        if line is None:
            self._kill()
            return {"id": req_id, "ok": False, "error": "timeout: runner did not answer"}
        try:
            response = json.loads(line)
        except json.JSONDecodeError:
            return {"id": req_id, "ok": False, "error": "protocol: unparseable runner reply"}
        if response.get("id") != req_id:
            return {"id": req_id, "ok": False, "error": "protocol: response id mismatch"}
        return response

    @staticmethod
    def _read_line(proc, deadline: float):
        """One newline-terminated reply, or None on deadline."""
        fd = proc.stdout.fileno()
        buf = bytearray()
        while True:
            newline = buf.find(b"\n")
            if newline >= 0:
                return buf[:newline].decode("utf-8", "replace")
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                return None
            ready, _, _ = select.select([fd], [], [], min(remaining, 0.05))
            if not ready:
                continue
            chunk = os.read(fd, 65536)
            if not chunk:
                raise _RunnerCrash("runner closed its output")
            buf.extend(chunk)

    @staticmethod
    def _interpret(response: dict) -> RenderResult:
        if not response.get("ok"):
            error = response.get("error") or "runner reported failure without detail"
            return RenderResult(False, error=error)
        path = response.get("stl_path")
        if not path:
            return RenderResult(False, error="protocol: ok response without stl_path")
        try:
            with open(path, "rb") as fh:
                mesh = load_stl(fh.read())
        except Exception as exc:
            return RenderResult(False, error=f"export: unreadable stl ({exc})")
        return RenderResult(True, mesh=mesh, artifact=str(path))
