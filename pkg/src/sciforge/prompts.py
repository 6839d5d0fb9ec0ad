"""Prompt template assets and structured-output parsing helpers.

Templates live under ``sciforge/templates`` as format-style text: ``{name}``
is a placeholder, ``{{``/``}}`` are literal braces. Substituted values are
inserted verbatim and never re-scanned, so braces inside a question survive
untouched.
"""

from __future__ import annotations

import json
import re
from functools import lru_cache
from importlib import resources
from string import Formatter

from .errors import NoJsonFound, TemplateError

TEMPLATE_FILES = {
    "t2i_generation": "t2i_generation.txt",
    "imgcoder": "imgcoder.txt",
    "curation": "curation.txt",
    "quiz_generation": "quiz_generation.txt",
    "judge": "judge.txt",
    "multimodal_adaptation": "multimodal_adaptation.txt",
}


@lru_cache(maxsize=None)
def load_template(name: str) -> str:
    try:
        filename = TEMPLATE_FILES[name]
    except KeyError:
        raise TemplateError(f"unknown template {name!r}") from None
    return (
        resources.files("sciforge.templates").joinpath(filename).read_text("utf-8")
    )


def render_template(name: str, **fields: str) -> str:
    """Fill a template's placeholders; TemplateError if any is left over."""
    template = load_template(name)
    required = {
        fname
        for _, fname, _, _ in Formatter().parse(template)
        if fname is not None and fname != ""
    }
    missing = required - fields.keys()
    if missing:
        raise TemplateError(
            f"template {name!r}: unfilled placeholder(s) {sorted(missing)}"
        )
    try:
        return template.format(**fields)
    except (KeyError, IndexError, ValueError) as exc:
        raise TemplateError(f"template {name!r}: {exc}") from exc


_FENCE_RE = re.compile(r"^\s*```[a-zA-Z0-9_+-]*\s*$", re.MULTILINE)


def extract_json_object(raw: str) -> dict:
    """Return the first balanced JSON object embedded in ``raw``.

    Code-fence marker lines are stripped first since models often wrap their
    JSON despite being told not to. Raises NoJsonFound when no candidate
    parses as an object.
    """
    cleaned = _FENCE_RE.sub("", raw)
    decoder = json.JSONDecoder()
    idx = cleaned.find("{")
    while idx != -1:
        try:
            obj, _ = decoder.raw_decode(cleaned, idx)
        except json.JSONDecodeError:
            idx = cleaned.find("{", idx + 1)
            continue
        if isinstance(obj, dict):
            return obj
        idx = cleaned.find("{", idx + 1)
    raise NoJsonFound("no JSON object found in response")


def split_before_json(raw: str) -> tuple[str, dict]:
    """Split a response into (leading text, first JSON object)."""
    cleaned = _FENCE_RE.sub("", raw)
    decoder = json.JSONDecoder()
    idx = cleaned.find("{")
    while idx != -1:
        try:
            obj, _ = decoder.raw_decode(cleaned, idx)
        except json.JSONDecodeError:
            idx = cleaned.find("{", idx + 1)
            continue
        if isinstance(obj, dict):
            return cleaned[:idx].strip(), obj
        idx = cleaned.find("{", idx + 1)
    raise NoJsonFound("no JSON object found in response")
