from __future__ import annotations

import pytest

from sciforge.datamodel import (
    AttemptLog,
    CurationResult,
    ProblemRecord,
    QuizItem,
    QuizSet,
    RenderArtifact,
    count_kept,
    make_problem_id,
)


def make_record(
    question: str = "A circle of radius 5 is centered at the origin.",
    subject: str = "Math",
    source: str = "instruction_corpus",
    curated: bool = True,
    category: str = "Math",
    image_type: str = "Plane Geometric",
) -> ProblemRecord:
    record = ProblemRecord(
        id=make_problem_id(source, question),
        subject=subject,
        question=question,
        source=source,
    )
    if curated:
        record.curation = CurationResult(
            reasoning="fixture",
            is_valid=True,
            primary_category=category,
            secondary_type=image_type,
            scene_clarity_score=4,
            visual_complexity_score=2,
        )
    return record


def make_quiz(
    question: str = "What is the labeled radius?",
    correct: str = "B",
    verdict: str | None = None,
    count: int | None = None,
) -> QuizItem:
    return QuizItem(
        question=question,
        options={"A": "3", "B": "5", "C": "7", "D": "9"},
        correct_option=correct,
        evidence_snippet="radius 5",
        blind_verdict=verdict,
        blind_correct_count=count,
    )


def make_quiz_set(problem_id: str, quizzes: list[QuizItem]) -> QuizSet:
    return QuizSet(
        problem_id=problem_id,
        elements=["Circle centered at origin", "Radius labeled 5"],
        quizzes=quizzes,
        valid_count=count_kept(quizzes),
    )


def make_artifact(
    problem_id: str,
    image_path: str,
    provider_id: str = "coder",
    paradigm: str = "imgcoder",
    is_fallback: bool = False,
) -> RenderArtifact:
    if is_fallback:
        attempts = [
            AttemptLog(i, "execution_failure", "boom") for i in range(1, 5)
        ]
    else:
        attempts = [AttemptLog(1, "ok", "rendered")]
    return RenderArtifact(
        problem_id=problem_id,
        paradigm=paradigm,
        provider_id=provider_id,
        image_path=image_path,
        attempts=attempts,
        plan="plan" if paradigm == "imgcoder" and not is_fallback else None,
        code="code" if paradigm == "imgcoder" and not is_fallback else None,
        is_fallback=is_fallback,
    )


@pytest.fixture
def record() -> ProblemRecord:
    return make_record()
