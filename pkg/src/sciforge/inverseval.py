"""Inverse quiz validation: answer every kept quiz against the image.

An image passes only if the VQA solver answers all of its kept quizzes
correctly; the inverse validation rate is the fraction of images that pass.
This module also owns the MCQ presentation format and the answer-letter
extraction contract (version 1), shared with the blind solver.
"""

from __future__ import annotations

import logging
import re
from typing import Mapping

from .datamodel import QuizAnswer, QuizItem, QuizSet, RenderArtifact, ValidationOutcome
from .errors import EmptySetError, JoinError, TransportError
from .providers import VqaProvider

log = logging.getLogger(__name__)

OPTION_LETTERS = ("A", "B", "C", "D")

_LETTER_RE = re.compile(r"\b([ABCDabcd])\b")
_ANSWER_CUE_RE = re.compile(
    r"\banswer\b[^A-Za-z0-9]*(?:is|:)?\s*\(?([ABCDabcd])\)?\b", re.IGNORECASE
)


def format_mcq_prompt(quiz: QuizItem) -> str:
    """Question + the four lettered options + the answer instruction."""
    lines = [quiz.question]
    for key in OPTION_LETTERS:
        lines.append(f"{key}. {quiz.options[key]}")
    lines.append("Answer with the option letter only.")
    return "\n".join(lines)


def extract_option_letter(answer: str) -> str | None:
    """Extract the intended option letter from a free-text answer.

    Returns the unique standalone A-D token (case-insensitive). When several
    distinct letters appear, a letter following the word "answer" wins; if
    none does, or the cues disagree, returns None (scored incorrect).
    """
    letters = {m.group(1).upper() for m in _LETTER_RE.finditer(answer)}
    if len(letters) == 1:
        return next(iter(letters))
    if not letters:
        return None
    cued = {m.group(1).upper() for m in _ANSWER_CUE_RE.finditer(answer)}
    if len(cued) == 1:
        return next(iter(cued))
    return None


def validate_image_quizzes(
    artifact: RenderArtifact,
    quiz_set: QuizSet,
    vqa_provider: VqaProvider,
) -> ValidationOutcome:
    """One VQA call per kept quiz; all must be correct for the image to pass.

    A provider failure on a quiz (after the provider's own retry budget)
    scores that quiz incorrect.
    """
    kept = [(i, q) for i, q in enumerate(quiz_set.quizzes) if q.blind_verdict == "kept"]
    if not kept:
        raise ValueError(
            f"quiz set for {quiz_set.problem_id} has no kept quizzes; "
            "zero-valid sets are excluded at selection"
        )
    per_quiz: list[QuizAnswer] = []
    for index, quiz in kept:
        prompt = format_mcq_prompt(quiz)
        try:
            answer = vqa_provider.answer(artifact.image_path, prompt)
        except TransportError as exc:
            log.warning(
                "VQA failed for %s quiz %d (%s); scored incorrect",
                artifact.artifact_id, index, exc,
            )
            per_quiz.append(QuizAnswer(quiz_index=index, predicted=None, correct=False))
            continue
        predicted = extract_option_letter(answer)
        per_quiz.append(
            QuizAnswer(
                quiz_index=index,
                predicted=predicted,
                correct=predicted == quiz.correct_option,
            )
        )
    return ValidationOutcome(
        problem_id=quiz_set.problem_id,
        artifact_id=artifact.artifact_id,
        per_quiz=per_quiz,
        all_correct=all(a.correct for a in per_quiz),
    )


def compute_rinv(outcomes: list[ValidationOutcome]) -> float:
    """Fraction of outcomes whose entire quiz set was answered correctly."""
    if not outcomes:
        raise EmptySetError("cannot compute an inverse validation rate of nothing")
    passed = sum(1 for o in outcomes if o.all_correct)
    return passed / len(outcomes)


def breakdown_by_group(
    outcomes: list[ValidationOutcome],
    group_of: Mapping[str, str],
    *,
    join_on: str = "problem_id",
) -> dict[str, tuple[float, int]]:
    """Per-group inverse validation rates with group sizes.

    ``group_of`` maps each outcome's join key (problem_id or artifact_id)
    to its group label; a missing entry is a JoinError naming the id. The
    size-weighted mean of the group rates is checked against the overall
    rate to 1e-12.
    """
    if not outcomes:
        raise EmptySetError("no outcomes to group")
    grouped: dict[str, list[ValidationOutcome]] = {}
    for outcome in outcomes:
        key = getattr(outcome, join_on)
        if key not in group_of:
            raise JoinError(key)
        grouped.setdefault(group_of[key], []).append(outcome)
    result = {
        group: (compute_rinv(members), len(members))
        for group, members in grouped.items()
    }
    weighted = sum(rate * n for rate, n in result.values()) / len(outcomes)
    overall = compute_rinv(outcomes)
    if abs(weighted - overall) > 1e-12:
        raise AssertionError(
            f"group-weighted rate {weighted} != overall {overall}"
        )
    return result
