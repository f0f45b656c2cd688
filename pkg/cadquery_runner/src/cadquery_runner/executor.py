"""Run one generated script in a fresh, resource-limited child process.

The contract is one request in, one response out, and the parent process
never dies because of anything a script does.  Failures come back as
ok=false with a categorized error string: "syntax:" for code that does
not parse, "runtime:" for exceptions, crashes, policy rejections and
resource kills, "timeout:" when the wall deadline passes, "export:"
when the bound solid cannot be written as STL.

Scripts expose their solid by binding it to a variable named `result`;
as a convenience, a script whose last statement is a bare expression
has that value used instead.  The child's working directory is the
request's out_dir and a preflight pass rejects scripts whose string
literals name absolute paths outside it (or contain parent-directory
traversal), so file output stays inside the directory the caller chose.
The policy is textual and conservative: paths assembled at runtime are
not tracked, and a literal that merely looks like a foreign path is
still rejected.
"""

from __future__ import annotations

import ast
import os
import re
import subprocess
import sys
from pathlib import Path

DEFAULT_TIMEOUT_S = 30.0

_GRACE_S = 0.2
_ERROR_LIMIT = 4096

_RUNTIME_EXIT = 3
_EXPORT_EXIT = 4

_CHILD = Path(__file__).with_name("child.py")


def _inside(path: str, root: Path) -> bool:
    resolved = Path(os.path.realpath(os.path.expanduser(path)))
    return resolved == root or root in resolved.parents


def path_policy_violation(code: str, out_dir: Path) -> str | None:
    """First string literal that escapes out_dir, or None if the code is clean."""
    try:
        tree = ast.parse(code)
    except (SyntaxError, ValueError):
        # unparseable code is the compile step's problem, not a path issue
        return None
    for node in ast.walk(tree):
        if not (isinstance(node, ast.Constant) and isinstance(node.value, str)):
            continue
        text = node.value
        if text.startswith(("/", "~")) and not _inside(text, out_dir):
            return text
        if ".." in Path(text).parts:
            return text
    return None


def _tail(stream: bytes) -> str:
    return stream.decode("utf-8", errors="replace")[-_ERROR_LIMIT:].strip()


def execute(request: dict, out_dir=None, max_seconds: float = DEFAULT_TIMEOUT_S) -> dict:
    """Execute one render request and return the response object."""
    # echo the id exactly as received; its string form only names files
    raw_id = request.get("id", "")
    ident = str(raw_id)
    reply: dict = {"id": raw_id, "ok": False}

    code = request.get("code")
    if not isinstance(code, str) or not code.strip():
        reply["error"] = "runtime: request carries no code"
        return reply
    try:
        timeout_s = float(request.get("timeout_s") or max_seconds)
    except (TypeError, ValueError):
        reply["error"] = "runtime: bad timeout_s in request"
        return reply

    target = Path(request.get("out_dir") or out_dir or ".").resolve()
    target.mkdir(parents=True, exist_ok=True)

    violation = path_policy_violation(code, target)
    if violation is not None:
        reply["error"] = f"runtime: path policy rejects {violation!r}"
        return reply
    try:
        compile(code, "<script>", "exec")
    except SyntaxError as exc:
        reply["error"] = f"syntax: line {exc.lineno}: {exc.msg}"
        return reply
    except ValueError as exc:  # e.g. source with null bytes
        reply["error"] = f"syntax: {exc}"
        return reply

    safe = re.sub(r"[^A-Za-z0-9._-]", "_", ident) or "script"
    script_path = target / f".{safe}.py"
    stl_path = target / f"{safe}.stl"
    script_path.write_text(code, encoding="utf-8")
    try:
        proc = subprocess.Popen(
            [sys.executable, str(_CHILD), str(script_path), str(stl_path),
             str(timeout_s)],
            cwd=target,
            stdin=subprocess.DEVNULL,
            stdout=subprocess.DEVNULL,
            stderr=subprocess.PIPE,
        )
        try:
            _, err = proc.communicate(timeout=timeout_s + _GRACE_S)
        except subprocess.TimeoutExpired:
            proc.kill()
            proc.communicate()
            reply["error"] = f"timeout: script exceeded {timeout_s:g}s"
            return reply
        status = proc.returncode
        if status == 0:
            if stl_path.is_file() and stl_path.stat().st_size > 0:
                return {"id": raw_id, "ok": True, "stl_path": str(stl_path)}
            reply["error"] = "export: script finished but produced no file"
        elif status == _EXPORT_EXIT:
            reply["error"] = "export: " + (_tail(err) or "export failed")
        elif status == _RUNTIME_EXIT:
            reply["error"] = "runtime: " + (_tail(err) or "script failed")
        elif status < 0:
            reply["error"] = f"runtime: child killed by signal {-status}"
        else:
            detail = _tail(err)
            reply["error"] = f"runtime: child exited with status {status}" + (
                f": {detail}" if detail else ""
            )
        return reply
    finally:
        script_path.unlink(missing_ok=True)
