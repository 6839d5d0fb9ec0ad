"""Pixel-paradigm generation via the constraint-injection prompt.

The prompt enforces information fidelity, forbids solution leakage, and
pins a textbook-style aesthetic; any image-generation provider can sit
behind it. Failed or undecodable generations are retried, then replaced by
the canonical blank fallback so downstream stages stay total.
"""

from __future__ import annotations

import io
import logging
from pathlib import Path

from PIL import Image, UnidentifiedImageError

from .datamodel import AttemptLog, ProblemRecord, RenderArtifact
from .errors import TransportError
from .executor import make_blank_fallback
from .prompts import render_template
from .providers import ImageGenProvider

log = logging.getLogger(__name__)

MAX_ATTEMPTS = 4


def build_t2i_prompt(record: ProblemRecord) -> str:
    if not record.question:
        raise ValueError("record.question must be non-empty")
    return render_template("t2i_generation", question=record.question)


def _check_png(data: bytes) -> None:
    with Image.open(io.BytesIO(data)) as img:
        if img.format != "PNG":
            raise UnidentifiedImageError(f"got {img.format}, expected PNG")
        img.verify()


def generate_t2i_image(
    record: ProblemRecord,
    image_provider: ImageGenProvider,
    *,
    artifacts_dir: Path,
    max_attempts: int = MAX_ATTEMPTS,
) -> RenderArtifact:
    """Generate one pixel-paradigm artifact, blank fallback on failure."""
    prompt = build_t2i_prompt(record)
    provider_id = image_provider.provider_id
    output_path = Path(artifacts_dir) / "pixel" / provider_id / f"{record.id}.png"
    output_path.parent.mkdir(parents=True, exist_ok=True)

    attempts: list[AttemptLog] = []
    for attempt_index in range(1, max_attempts + 1):
        try:
            data = image_provider.generate(prompt, variant=attempt_index - 1)
        except TransportError as exc:
            attempts.append(
                AttemptLog(attempt_index, "execution_failure", f"provider: {exc}")
            )
            continue
        try:
            _check_png(data)
        except (UnidentifiedImageError, OSError, SyntaxError) as exc:
            attempts.append(
                AttemptLog(attempt_index, "execution_failure", f"decode: {exc}")
            )
            continue
        output_path.write_bytes(data)
        attempts.append(AttemptLog(attempt_index, "ok", "generated"))
        return RenderArtifact(
            problem_id=record.id,
            paradigm="pixel",
            provider_id=provider_id,
            image_path=str(output_path),
            attempts=attempts,
            is_fallback=False,
        )

    make_blank_fallback(output_path)
    log.info("all %d attempts failed for %s; blank fallback", max_attempts, record.id)
    return RenderArtifact(
        problem_id=record.id,
        paradigm="pixel",
        provider_id=provider_id,
        image_path=str(output_path),
        attempts=attempts,
        is_fallback=True,
    )
