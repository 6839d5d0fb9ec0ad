from __future__ import annotations

import random

import pytest

from sciforge.datamodel import QuizAnswer, ValidationOutcome
from sciforge.errors import EmptySetError, JoinError
from sciforge.inverseval import (
    breakdown_by_group,
    compute_rinv,
    extract_option_letter,
    format_mcq_prompt,
    validate_image_quizzes,
)
from sciforge.providers import MockVqaProvider, fixture_png

from conftest import make_artifact, make_quiz, make_quiz_set


@pytest.mark.parametrize(
    "answer,expected",
    [
        ("B", "B"),
        ("b", "B"),
        ("The answer is B.", "B"),
        ("Answer: C", "C"),
        ("(D)", "D"),
        ("Either A or C", None),
        ("I cannot tell", None),
        ("B. B is clearly right", "B"),
        ("A first guess, but the answer is C", "C"),
        ("answer is A, or maybe the answer is B", None),
    ],
)
def test_extract_option_letter(answer, expected):
    assert extract_option_letter(answer) == expected


def test_format_mcq_prompt_shape():
    quiz = make_quiz()
    prompt = format_mcq_prompt(quiz)
    lines = prompt.splitlines()
    assert lines[0] == quiz.question
    assert lines[1] == "A. 3" and lines[4] == "D. 9"
    assert lines[-1] == "Answer with the option letter only."


def _image(tmp_path, name="art.png"):
    path = tmp_path / name
    path.write_bytes(fixture_png(name))
    return path


def test_validate_all_correct(tmp_path):
    quizzes = [
        make_quiz(question="Q0?", verdict="kept", count=1),
        make_quiz(question="Q1?", verdict="kept", count=0),
    ]
    quiz_set = make_quiz_set("p1", quizzes)
    artifact = make_artifact("p1", str(_image(tmp_path)))
    provider = MockVqaProvider()
    for quiz in quizzes:
        provider.script_answer(artifact.image_path, format_mcq_prompt(quiz), "B")
    outcome = validate_image_quizzes(artifact, quiz_set, provider)
    assert outcome.all_correct is True
    assert len(outcome.per_quiz) == 2


def test_validate_conjunction_fails_on_one_wrong(tmp_path):
    quizzes = [
        make_quiz(question=f"Q{i}?", verdict="kept", count=0) for i in range(3)
    ]
    quiz_set = make_quiz_set("p1", quizzes)
    artifact = make_artifact("p1", str(_image(tmp_path)))
    provider = MockVqaProvider()
    answers = ["B", "C", "B"]  # correct answer is B
    for quiz, answer in zip(quizzes, answers):
        provider.script_answer(artifact.image_path, format_mcq_prompt(quiz), answer)
    outcome = validate_image_quizzes(artifact, quiz_set, provider)
    assert [a.correct for a in outcome.per_quiz] == [True, False, True]
    assert outcome.all_correct is False


def test_validate_skips_discarded_quizzes(tmp_path):
    quizzes = [
        make_quiz(question="kept?", verdict="kept", count=2),
        make_quiz(question="discarded?", verdict="discarded", count=4),
    ]
    quiz_set = make_quiz_set("p1", quizzes)
    artifact = make_artifact("p1", str(_image(tmp_path)))
    provider = MockVqaProvider()
    provider.script_answer(artifact.image_path, format_mcq_prompt(quizzes[0]), "B")
    outcome = validate_image_quizzes(artifact, quiz_set, provider)
    assert len(outcome.per_quiz) == 1
    assert outcome.per_quiz[0].quiz_index == 0


def test_validate_zero_kept_is_a_guard_error(tmp_path):
    quiz_set = make_quiz_set(
        "p1", [make_quiz(verdict="discarded", count=4)]
    )
    artifact = make_artifact("p1", str(_image(tmp_path)))
    with pytest.raises(ValueError):
        validate_image_quizzes(artifact, quiz_set, MockVqaProvider())


def test_validate_provider_failure_scores_incorrect(tmp_path):
    quizzes = [
        make_quiz(question="ok?", verdict="kept", count=0),
        make_quiz(question="fails?", verdict="kept", count=0),
    ]
    quiz_set = make_quiz_set("p1", quizzes)
    artifact = make_artifact("p1", str(_image(tmp_path)))
    provider = MockVqaProvider()
    provider.script_answer(artifact.image_path, format_mcq_prompt(quizzes[0]), "B")
    outcome = validate_image_quizzes(artifact, quiz_set, provider)
    assert outcome.per_quiz[0].correct is True
    assert outcome.per_quiz[1].correct is False
    assert outcome.per_quiz[1].predicted is None


def _outcome(problem_id: str, artifact_id: str, flags: list[bool]) -> ValidationOutcome:
    return ValidationOutcome(
        problem_id=problem_id,
        artifact_id=artifact_id,
        per_quiz=[QuizAnswer(i, "A" if ok else None, ok) for i, ok in enumerate(flags)],
        all_correct=all(flags),
    )


def test_compute_rinv_examples():
    outcomes = [
        _outcome("p1", "a1", [True, True]),
        _outcome("p2", "a2", [True, False]),
        _outcome("p3", "a3", [True]),
    ]
    assert compute_rinv(outcomes) == pytest.approx(2 / 3)
    assert compute_rinv([outcomes[0]]) == 1.0
    with pytest.raises(EmptySetError):
        compute_rinv([])


def test_breakdown_by_group_hand_enumeration():
    outcomes = [
        _outcome("m1", "a1", [True]),
        _outcome("m2", "a2", [False]),
        _outcome("f1", "a3", [True]),
    ]
    group_of = {"m1": "Math", "m2": "Math", "f1": "Physics"}
    result = breakdown_by_group(outcomes, group_of)
    assert result == {"Math": (0.5, 2), "Physics": (1.0, 1)}
    assert compute_rinv(outcomes) == pytest.approx(2 / 3)


def test_breakdown_single_group_matches_overall():
    outcomes = [_outcome(f"p{i}", f"a{i}", [i % 2 == 0]) for i in range(6)]
    group_of = {f"p{i}": "All" for i in range(6)}
    result = breakdown_by_group(outcomes, group_of)
    assert result["All"] == (compute_rinv(outcomes), 6)


def test_breakdown_missing_key_is_join_error():
    outcomes = [_outcome("p1", "a1", [True])]
    with pytest.raises(JoinError) as err:
        breakdown_by_group(outcomes, {})
    assert err.value.record_id == "p1"


def test_rinv_monotone_under_flips():
    rng = random.Random(3)
    outcomes = []
    for i in range(40):
        flags = [rng.random() < 0.7 for _ in range(rng.randint(1, 4))]
        outcomes.append(_outcome(f"p{i}", f"a{i}", flags))
    base = compute_rinv(outcomes)
    for _ in range(200):
        idx = rng.randrange(len(outcomes))
        flags = [a.correct for a in outcomes[idx].per_quiz]
        if not any(flags):
            continue
        flip = rng.choice([i for i, ok in enumerate(flags) if ok])
        flags[flip] = False
        mutated = list(outcomes)
        mutated[idx] = _outcome(f"p{idx}", f"a{idx}", flags)
        assert compute_rinv(mutated) <= base
