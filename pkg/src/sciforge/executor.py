"""Child-process execution of generated plotting scripts.

One shim process per render: the request goes to the shim as a single JSON
line on stdin, the shim answers with a single JSON line on stdout, and the
executor kills the whole process group at the timeout. Script-level
failures come back inside the result; only protocol-level faults raise.

ScriptedExecutor implements the same contract in-process so the primary
test suite never needs the real shim.
"""

from __future__ import annotations

import io
import json
import logging
import os
import signal
import subprocess
import threading
from dataclasses import dataclass
from pathlib import Path
from shutil import which

from PIL import Image

from .errors import ProtocolError, ShimMissing
from .providers.mock import fixture_png

log = logging.getLogger(__name__)

RESULT_STATUSES = ("ok", "error", "timeout")
ERROR_KINDS = ("syntax", "runtime", "no_figure")

BLANK_SIZE = (1024, 1024)
_blank_png_cache: bytes | None = None


def blank_png_bytes() -> bytes:
    """The canonical white 1024x1024 fallback PNG, built once."""
    global _blank_png_cache
    if _blank_png_cache is None:
        buf = io.BytesIO()
        Image.new("RGB", BLANK_SIZE, (255, 255, 255)).save(buf, format="PNG")
        _blank_png_cache = buf.getvalue()
    return _blank_png_cache


def make_blank_fallback(output_path: str | Path) -> Path:
    """Write the canonical blank PNG; byte-identical across calls."""
    path = Path(output_path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(blank_png_bytes())
    return path


@dataclass
class RenderRequest:
    code: str
    output_path: Path
    workdir: Path
    timeout_s: float = 60.0

    def validate(self, artifacts_root: Path | None = None) -> None:
        if self.timeout_s <= 0:
            raise ValueError("timeout must be positive")
        out = Path(self.output_path).resolve()
        roots = [Path(self.workdir).resolve()]
        if artifacts_root is not None:
            roots.append(Path(artifacts_root).resolve())
        if not any(root in out.parents or root == out.parent for root in roots):
            raise ValueError(
                f"output_path {out} is outside the workdir and artifacts root"
            )


@dataclass
class RenderResult:
    status: str
    error_kind: str | None = None
    message: str | None = None
    image_path: Path | None = None

    @property
    def ok(self) -> bool:
        return self.status == "ok"


def _decodes_as_png(path: Path) -> bool:
    try:
        with Image.open(path) as img:
            if img.format != "PNG":
                return False
            img.verify()
        return True
    except Exception:
        return False


def _resolve_shim(shim_cmd: list[str] | str | Path) -> list[str]:
    if isinstance(shim_cmd, (str, Path)):
        cmd = [str(shim_cmd)]
    else:
        cmd = [str(part) for part in shim_cmd]
    if not cmd:
        raise ShimMissing("empty shim command")
    head = cmd[0]
    if not (Path(head).exists() or which(head)):
        raise ShimMissing(f"shim command {head!r} not found")
    return cmd


def execute_render(
    request: RenderRequest,
    shim_path: list[str] | str | Path,
    *,
    artifacts_root: Path | None = None,
) -> RenderResult:
    """Run one render through the shim process.

    Never raises for script-level failures; ShimMissing / ProtocolError are
    infrastructure faults. The process group is killed at the timeout.
    """
    request.validate(artifacts_root)
    cmd = _resolve_shim(shim_path)
    Path(request.output_path).parent.mkdir(parents=True, exist_ok=True)
    payload = json.dumps(
        {
            "code": request.code,
            "timeout_s": request.timeout_s,
            "output_path": str(request.output_path),
        }
    )
    proc = subprocess.Popen(
        cmd,
        stdin=subprocess.PIPE,
        stdout=subprocess.PIPE,
        stderr=subprocess.PIPE,
        cwd=request.workdir,
        text=True,
        start_new_session=True,
    )
    try:
        stdout, stderr = proc.communicate(payload + "\n", timeout=request.timeout_s)
    except subprocess.TimeoutExpired:
        try:
            os.killpg(proc.pid, signal.SIGKILL)
        except ProcessLookupError:
            pass
        proc.wait()
        return RenderResult(status="timeout", message=f"killed after {request.timeout_s}s")

    line = stdout.strip().splitlines()
    if not line:
        raise ProtocolError(
            f"shim produced no response (exit {proc.returncode}, stderr: {stderr[:200]})"
        )
    try:
        response = json.loads(line[-1])
    except json.JSONDecodeError as exc:
        raise ProtocolError(f"shim response is not valid JSON: {exc}") from exc
    status = response.get("status")
    if status not in ("ok", "error"):
        raise ProtocolError(f"shim response has invalid status {status!r}")
    if status == "error":
        kind = response.get("error_kind")
        return RenderResult(
            status="error",
            error_kind=kind if kind in ERROR_KINDS else "runtime",
            message=response.get("message") or "script failed",
        )
    image_path = Path(response.get("image_path") or request.output_path)
    if not _decodes_as_png(image_path):
        return RenderResult(
            status="error",
            error_kind="no_figure",
            message=f"shim reported ok but {image_path} does not decode as PNG",
        )
    return RenderResult(status="ok", image_path=image_path)


class ShimExecutor:
    """Bounded-parallelism executor bound to a configured shim command."""

    def __init__(
        self,
        shim_cmd: list[str] | str,
        *,
        artifacts_root: Path | None = None,
        parallelism: int | None = None,
    ):
        self.shim_cmd = shim_cmd
        self.artifacts_root = artifacts_root
        workers = parallelism or os.cpu_count() or 1
        self._slots = threading.BoundedSemaphore(workers)

    def execute_render(self, request: RenderRequest) -> RenderResult:
        with self._slots:
            return execute_render(
                request, self.shim_cmd, artifacts_root=self.artifacts_root
            )


class ScriptedExecutor:
    """In-process fake honoring the executor contract.

    Outcomes are consumed from a script queue; when the queue is empty the
    default behaviour applies ("ok" writes a deterministic PNG derived from
    the code text). Use outcome dicts like {"status": "error", "error_kind":
    "runtime", "message": "..."} to script failures.
    """

    def __init__(
        self,
        script: list[dict] | None = None,
        *,
        default_status: str = "ok",
        artifacts_root: Path | None = None,
    ):
        self.script: list[dict] = list(script or [])
        self.default_status = default_status
        self.artifacts_root = artifacts_root
        self.calls = 0
        self.requests: list[RenderRequest] = []

    def push(self, **outcome) -> None:
        self.script.append(outcome)

    def execute_render(self, request: RenderRequest) -> RenderResult:
        request.validate(self.artifacts_root)
        self.calls += 1
        self.requests.append(request)
        outcome = self.script.pop(0) if self.script else {"status": self.default_status}
        status = outcome.get("status", "ok")
        if status == "ok":
            path = Path(request.output_path)
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_bytes(outcome.get("png") or fixture_png(request.code))
            return RenderResult(status="ok", image_path=path)
        if status == "timeout":
            return RenderResult(status="timeout", message=outcome.get("message", "timed out"))
        return RenderResult(
            status="error",
            error_kind=outcome.get("error_kind", "runtime"),
            message=outcome.get("message", "scripted failure"),
        )
