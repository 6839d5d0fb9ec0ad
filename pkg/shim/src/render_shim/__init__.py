"""Headless runner for generated matplotlib scripts.

One request per process: a JSON line on stdin ({"code", "timeout_s",
"output_path"}), one JSON response line on stdout ({"status", "error_kind"?,
"message"?, "image_path"?}), exit code 0 unless the protocol itself broke.

The Agg backend is forced before the script runs and ``plt.show()`` is
hooked to save the current figure to the requested path, so unmodified
generated scripts (which end in a show call) render without a display. If a
script builds a figure but never calls show, the open figure is saved at
end of script as a fallback. Failures classify as syntax (compile error),
runtime (any raising or aborting script), or no_figure (clean exit without
producing an image).
"""

from __future__ import annotations

import io
import json
import os
import sys
import traceback

__version__ = "0.1.0"


def _error(kind: str, message: str) -> dict:
    return {"status": "error", "error_kind": kind, "message": message}


def _decodes_as_png(path: str) -> bool:
    try:
        from PIL import Image

        with Image.open(path) as img:
            if img.format != "PNG":
                return False
            img.verify()
        return True
    except Exception:
        return False


def run_script(request: dict) -> dict:
    """Execute one plotting script and report the contracted response."""
    code = request.get("code")
    output_path = request.get("output_path")
    if not isinstance(code, str) or not isinstance(output_path, str):
        raise ValueError("request must carry string 'code' and 'output_path'")

    try:
        compiled = compile(code, "<generated-script>", "exec")
    except SyntaxError as exc:
        return _error("syntax", f"{exc.__class__.__name__}: {exc}")

    os.environ.setdefault("MPLBACKEND", "Agg")
    import matplotlib

    matplotlib.use("Agg", force=True)
    import matplotlib.pyplot as plt

    plt.close("all")
    saved = {"done": False}

    def _capture_show(*args, **kwargs):
        figure = plt.gcf()
        os.makedirs(os.path.dirname(os.path.abspath(output_path)), exist_ok=True)
        figure.savefig(output_path, format="png")
        saved["done"] = True
        plt.close("all")

    original_show = plt.show
    plt.show = _capture_show

    # Scripts run as __main__ in a fresh namespace; their stdout must not
    # touch the protocol channel.
    namespace = {"__name__": "__main__", "__file__": "<generated-script>"}
    captured = io.StringIO()
    original_stdout = sys.stdout
    sys.stdout = captured
    try:
        exec(compiled, namespace)
    except BaseException as exc:  # noqa: BLE001 - aborting scripts included
        tail = traceback.format_exc(limit=3)
        return _error("runtime", f"{exc.__class__.__name__}: {exc}\n{tail}")
    finally:
        sys.stdout = original_stdout
        plt.show = original_show

    if not saved["done"] and plt.get_fignums():
        _capture_show()
    plt.close("all")

    if not saved["done"] or not _decodes_as_png(output_path):
        return _error(
            "no_figure",
            "script finished without showing or saving a figure",
        )
    return {"status": "ok", "image_path": output_path}


def main() -> int:
    line = sys.stdin.readline()
    try:
        request = json.loads(line)
        if not isinstance(request, dict):
            raise ValueError("request is not a JSON object")
    except (json.JSONDecodeError, ValueError) as exc:
        print(f"render-shim: bad request: {exc}", file=sys.stderr)
        return 1
    try:
        response = run_script(request)
    except ValueError as exc:
        print(f"render-shim: bad request: {exc}", file=sys.stderr)
        return 1
    sys.stdout.write(json.dumps(response) + "\n")
    sys.stdout.flush()
    return 0


if __name__ == "__main__":
    sys.exit(main())
