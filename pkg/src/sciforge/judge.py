"""Rubric judging of generated images on five dimensions.

A vision-capable model receives the rubric plus the image and returns a
critique followed by a JSON object of integer scores in {0,1,2}. Responses
that fail to parse are retried under the provider budget, then recorded as
unjudged; unjudged artifacts are excluded from means (with their count
surfaced in reports) rather than silently zero-filled.
"""

from __future__ import annotations

import logging
from pathlib import Path

from .datamodel import (
    JUDGE_DIMENSIONS,
    JudgeRecord,
    JudgeScores,
    ProblemRecord,
    RenderArtifact,
)
from .errors import NoJsonFound, RangeError, SchemaError, TransportError
from .prompts import render_template, split_before_json
from .providers import VqaProvider

log = logging.getLogger(__name__)

# JSON keys in the judge's response, in rubric order.
SCORE_KEYS = (
    "Correctness_Fidelity",
    "Layout_Precision",
    "Readability_Occlusion",
    "Scientific_Plausibility",
    "Expressiveness_Richness",
)


def build_judge_prompt(
    artifact: RenderArtifact, record: ProblemRecord
) -> tuple[str, Path]:
    """The rubric prompt and the image to pair with it.

    Fallback blanks are judged like any other artifact.
    """
    image_path = Path(artifact.image_path)
    if not image_path.exists():
        raise FileNotFoundError(f"artifact image missing: {image_path}")
    prompt = render_template("judge", question=record.question)
    return prompt, image_path


def parse_judge_response(raw: str) -> JudgeScores:
    """Critique text before the JSON, five exact integer score keys in it."""
    critique, obj = split_before_json(raw)
    values = {}
    for key, fieldname in zip(SCORE_KEYS, JUDGE_DIMENSIONS):
        if key not in obj:
            raise SchemaError(key, f"missing key {key}")
        score = obj[key]
        if isinstance(score, bool) or not isinstance(score, int):
            raise RangeError(f"score {score!r} for {key} is not an integer")
        if score not in (0, 1, 2):
            raise RangeError(f"score {score} out of {{0,1,2}} for {key}")
        values[fieldname] = score
    scores = JudgeScores(critique=critique, **values)
    scores.validate()
    return scores


def mean_judge_score(scores: JudgeScores) -> float:
    """Arithmetic mean of the five dimension scores, in [0,2]."""
    return sum(scores.as_tuple()) / 5.0


def judge_artifact(
    artifact: RenderArtifact,
    record: ProblemRecord,
    provider: VqaProvider,
) -> JudgeRecord:
    """Judge one artifact; unparseable responses retry then record unjudged."""
    prompt, image_path = build_judge_prompt(artifact, record)
    last_error: Exception | None = None
    for attempt in range(provider.max_attempts):
        try:
            response = provider.answer(image_path, prompt, variant=attempt)
            scores = parse_judge_response(response)
        except (TransportError, NoJsonFound, SchemaError, RangeError) as exc:
            last_error = exc
            log.warning(
                "judge attempt %d failed for %s: %s",
                attempt + 1, artifact.artifact_id, exc,
            )
            continue
        return JudgeRecord(
            problem_id=artifact.problem_id,
            artifact_id=artifact.artifact_id,
            scores=scores,
        )
    return JudgeRecord(
        problem_id=artifact.problem_id,
        artifact_id=artifact.artifact_id,
        error=f"unjudged: {last_error}",
    )


def dimension_means(judged: list[JudgeRecord]) -> tuple[dict[str, float], int, int]:
    """Per-dimension means over judged records.

    Returns (means keyed by dimension, judged count, unjudged count);
    unjudged records are excluded from the means.
    """
    scored = [j.scores for j in judged if j.scores is not None]
    unjudged = len(judged) - len(scored)
    if not scored:
        return {}, 0, unjudged
    means = {
        name: sum(getattr(s, name) for s in scored) / len(scored)
        for name in JUDGE_DIMENSIONS
    }
    return means, len(scored), unjudged
