"""Plan-then-code figure generation.

The model first writes an explicit visualization plan, then a standalone
plotting script; the script is rendered in a child process. Extraction or
execution failures trigger resampling at the same prompt: one initial
attempt plus three retries, after which the canonical blank image is
emitted so downstream stages stay total.
"""

from __future__ import annotations

import logging
import re
import tempfile
from dataclasses import dataclass
from pathlib import Path

from .datamodel import AttemptLog, ProblemRecord, RenderArtifact
from .errors import ExtractionFailure, TransportError
from .executor import RenderRequest, make_blank_fallback
from .prompts import render_template
from .providers import TextProvider, TextRequest

log = logging.getLogger(__name__)

GENERATION_TEMPERATURE = 0.6
MAX_ATTEMPTS = 4  # 1 initial attempt + 3 retries

_FENCE_OPEN_RE = re.compile(r"```[a-zA-Z0-9_+-]*\n")
# A heading-only line such as "#### **Section 1: Plan**" or "Plan:"; lines
# that carry plan content alongside the word are not headings.
_PLAN_HEADING_RE = re.compile(
    r"^\s*#{0,6}\s*\**\s*(?:section\s*\d+\s*[:.]?\s*)?plan\s*\**\s*:?\s*$",
    re.IGNORECASE | re.MULTILINE,
)


@dataclass
class PlanAndCode:
    plan: str
    code: str


def build_imgcoder_prompt(record: ProblemRecord) -> str:
    if not record.question:
        raise ValueError("record.question must be non-empty")
    return render_template("imgcoder", question=record.question)


def extract_plan_and_code(raw: str) -> PlanAndCode:
    """Split a response into the plan text and the first fenced code block.

    The plan is everything between the plan heading (or the start of the
    response) and the first fence; fence markers and the language tag are
    stripped from the code. A second fenced block is ignored with a warning.
    """
    open_match = _FENCE_OPEN_RE.search(raw)
    if open_match is None:
        raise ExtractionFailure("no code fence")
    close_idx = raw.find("```", open_match.end())
    if close_idx == -1:
        raise ExtractionFailure("no code fence")
    code = raw[open_match.end():close_idx]
    if code.endswith("\n"):
        code = code[:-1]
    if not code.strip():
        raise ExtractionFailure("empty code block")

    before = raw[: open_match.start()]
    heading = None
    for match in _PLAN_HEADING_RE.finditer(before):
        heading = match
    plan = before[heading.end():].strip() if heading else before.strip()
    if not plan:
        raise ExtractionFailure("empty plan")

    if _FENCE_OPEN_RE.search(raw, close_idx + 3):
        log.warning("response contains a second fenced block; using the first")
    return PlanAndCode(plan=plan, code=code)


def embed_code_in_fence(code: str, language: str = "python") -> str:
    """Inverse of the code half of extract_plan_and_code."""
    return f"```{language}\n{code}\n```"


def generate_figure(
    record: ProblemRecord,
    text_provider: TextProvider,
    executor,
    *,
    artifacts_dir: Path,
    timeout_s: float = 60.0,
    max_attempts: int = MAX_ATTEMPTS,
) -> RenderArtifact:
    """Attempt loop: complete -> extract -> render, with blank fallback.

    Each attempt reissues the same prompt; sampling at temperature 0.6
    supplies variation, and the attempt's variant salt keeps retries out of
    the first attempt's cache slot.
    """
    prompt = build_imgcoder_prompt(record)
    provider_id = text_provider.provider_id
    output_path = Path(artifacts_dir) / "imgcoder" / provider_id / f"{record.id}.png"
    output_path.parent.mkdir(parents=True, exist_ok=True)

    attempts: list[AttemptLog] = []
    plan: str | None = None
    code: str | None = None
    for attempt_index in range(1, max_attempts + 1):
        request = TextRequest(
            prompt=prompt,
            temperature=GENERATION_TEMPERATURE,
            variant=attempt_index - 1,
        )
        try:
            response = text_provider.complete(request)
        except TransportError as exc:
            attempts.append(
                AttemptLog(attempt_index, "extraction_failure", f"provider: {exc}")
            )
            continue
        try:
            extracted = extract_plan_and_code(response.text)
        except ExtractionFailure as exc:
            attempts.append(AttemptLog(attempt_index, "extraction_failure", str(exc)))
            continue
        plan, code = extracted.plan, extracted.code

        workdir = Path(tempfile.mkdtemp(prefix=f"render-{record.id}-"))
        result = executor.execute_render(
            RenderRequest(
                code=code,
                output_path=output_path,
                workdir=workdir,
                timeout_s=timeout_s,
            )
        )
        if result.ok:
            attempts.append(AttemptLog(attempt_index, "ok", "rendered"))
            return RenderArtifact(
                problem_id=record.id,
                paradigm="imgcoder",
                provider_id=provider_id,
                image_path=str(output_path),
                attempts=attempts,
                plan=plan,
                code=code,
                is_fallback=False,
            )
        if result.status == "timeout":
            attempts.append(AttemptLog(attempt_index, "timeout", result.message or ""))
        else:
            attempts.append(
                AttemptLog(
                    attempt_index,
                    "execution_failure",
                    f"{result.error_kind}: {result.message}",
                )
            )

    make_blank_fallback(output_path)
    log.info("all %d attempts failed for %s; blank fallback", max_attempts, record.id)
    return RenderArtifact(
        problem_id=record.id,
        paradigm="imgcoder",
        provider_id=provider_id,
        image_path=str(output_path),
        attempts=attempts,
        plan=plan,
        code=code,
        is_fallback=True,
    )
