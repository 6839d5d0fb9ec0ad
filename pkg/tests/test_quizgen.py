from __future__ import annotations

import itertools
import json

import pytest

from sciforge.datamodel import count_kept
from sciforge.errors import EmptyQuizError, SchemaError, UnknownTypeError
from sciforge.inverseval import format_mcq_prompt
from sciforge.providers import MockTextProvider, TextRequest
from sciforge.quizgen import (
    blind_filter_question,
    blind_filter_set,
    build_quiz_prompt,
    generate_quiz_set,
    parse_quiz_response,
    select_by_density,
)

from conftest import make_quiz, make_quiz_set, make_record

SINGLE_QUIZ_RESPONSE = json.dumps(
    {
        "elements": ["Circle radius labeled 5"],
        "quiz": [
            {
                "question": "What radius is labeled on the circle?",
                "options": {"A": "5", "B": "3", "C": "7", "D": "9"},
                "correct_option": "A",
                "evidence_snippet": "radius 5",
            }
        ],
    }
)


def test_generate_quiz_set_single_question():
    record = make_record()
    provider = MockTextProvider()
    provider.script_reply(
        TextRequest(prompt=build_quiz_prompt(record)), SINGLE_QUIZ_RESPONSE
    )
    quiz_set = generate_quiz_set(record, provider)
    assert quiz_set.problem_id == record.id
    assert len(quiz_set.quizzes) == 1
    assert quiz_set.quizzes[0].correct_option == "A"
    assert quiz_set.quizzes[0].evidence_snippet == "radius 5"


def test_generate_requires_curated_valid():
    record = make_record(curated=False)
    with pytest.raises(ValueError):
        generate_quiz_set(record, MockTextProvider())


def test_duplicate_option_texts_rejected():
    payload = json.loads(SINGLE_QUIZ_RESPONSE)
    payload["quiz"][0]["options"]["C"] = payload["quiz"][0]["options"]["B"]
    with pytest.raises(SchemaError) as err:
        parse_quiz_response(json.dumps(payload), "p1")
    assert "options" in str(err.value)


def test_empty_elements_rejected():
    payload = json.loads(SINGLE_QUIZ_RESPONSE)
    payload["elements"] = []
    with pytest.raises(SchemaError) as err:
        parse_quiz_response(json.dumps(payload), "p1")
    assert "elements" in str(err.value)


def test_empty_quiz_list_rejected():
    payload = json.loads(SINGLE_QUIZ_RESPONSE)
    payload["quiz"] = []
    with pytest.raises(EmptyQuizError):
        parse_quiz_response(json.dumps(payload), "p1")


def _scripted_blind(quiz, pattern):
    """Provider whose trial t answers correctly iff pattern[t]."""
    provider = MockTextProvider()
    prompt = format_mcq_prompt(quiz)
    wrong = next(k for k in "ABCD" if k != quiz.correct_option)
    for trial, is_correct in enumerate(pattern):
        provider.script_reply(
            TextRequest(prompt=prompt, temperature=1.0, variant=trial),
            quiz.correct_option if is_correct else wrong,
        )
    return provider


def test_blind_all_correct_discarded():
    quiz = make_quiz()
    result = blind_filter_question(quiz, _scripted_blind(quiz, [True] * 4))
    assert result.blind_verdict == "discarded"
    assert result.blind_correct_count == 4


def test_blind_three_of_four_kept():
    quiz = make_quiz()
    result = blind_filter_question(quiz, _scripted_blind(quiz, [True, True, False, True]))
    assert result.blind_verdict == "kept"
    assert result.blind_correct_count == 3


def test_blind_zero_correct_kept():
    quiz = make_quiz()
    result = blind_filter_question(quiz, _scripted_blind(quiz, [False] * 4))
    assert result.blind_verdict == "kept"
    assert result.blind_correct_count == 0


def test_blind_provider_error_counts_trial_incorrect():
    quiz = make_quiz()
    provider = _scripted_blind(quiz, [True, True, True, True])
    # Unscript trial 3 so it raises: the quiz must survive.
    provider.script.pop(
        provider.cache_key(
            TextRequest(prompt=format_mcq_prompt(quiz), temperature=1.0, variant=3)
        )
    )
    result = blind_filter_question(quiz, provider)
    assert result.blind_verdict == "kept"
    assert result.blind_correct_count == 3


def test_blind_filter_exhaustive_and_monotone():
    quiz = make_quiz()
    verdicts = {}
    for pattern in itertools.product([False, True], repeat=4):
        result = blind_filter_question(quiz, _scripted_blind(quiz, list(pattern)))
        verdicts[pattern] = result.blind_verdict
        assert result.blind_verdict == ("discarded" if all(pattern) else "kept")
    # Flipping one trial incorrect->correct never flips discarded->kept.
    for pattern, verdict in verdicts.items():
        for i in range(4):
            if not pattern[i]:
                flipped = tuple(pattern[:i] + (True,) + pattern[i + 1:])
                assert not (verdict == "discarded" and verdicts[flipped] == "kept")


def test_blind_filter_set_recomputes_valid_count():
    quizzes = [make_quiz(question=f"Quiz {i}?") for i in range(3)]
    quiz_set = make_quiz_set("p1", quizzes)
    provider = MockTextProvider()
    patterns = [[True] * 4, [False] * 4, [True, False, True, False]]
    for quiz, pattern in zip(quizzes, patterns):
        scripted = _scripted_blind(quiz, pattern)
        provider.script.update(scripted.script)
    filtered = blind_filter_set(quiz_set, provider)
    assert filtered.valid_count == 2
    assert filtered.valid_count == count_kept(filtered.quizzes)


def _set_with_count(problem_id: str, kept: int, total: int | None = None) -> "QuizSet":
    total = total if total is not None else max(kept, 1)
    quizzes = [
        make_quiz(
            question=f"{problem_id} quiz {i}?",
            verdict="kept" if i < kept else "discarded",
            count=1 if i < kept else 4,
        )
        for i in range(total)
    ]
    return make_quiz_set(problem_id, quizzes)


def test_select_by_density_tie_and_drop():
    sets = {
        "A": _set_with_count("A", 5, 5),
        "B": _set_with_count("B", 3, 5),
        "C": _set_with_count("C", 5, 5),
    }
    taxonomy_of = {pid: "Circuit" for pid in sets}
    selected = select_by_density(list(sets.values()), taxonomy_of, k_per_type=2)
    assert [qs.problem_id for qs in selected] == ["A", "C"]


def test_select_k_larger_than_group_keeps_all_but_zero_counts():
    sets = [
        _set_with_count("A", 2),
        _set_with_count("B", 0, 2),
        _set_with_count("C", 1),
    ]
    taxonomy_of = {"A": "Waveform", "B": "Waveform", "C": "Waveform"}
    selected = select_by_density(sets, taxonomy_of, k_per_type=10)
    assert [qs.problem_id for qs in selected] == ["A", "C"]


def test_select_all_zero_group_contributes_nothing():
    sets = [_set_with_count("A", 0, 2), _set_with_count("B", 0, 1)]
    taxonomy_of = {"A": "Genetics", "B": "Genetics"}
    assert select_by_density(sets, taxonomy_of, k_per_type=3) == []


def test_select_unknown_type_raises():
    sets = [_set_with_count("A", 1)]
    with pytest.raises(UnknownTypeError):
        select_by_density(sets, {}, k_per_type=1)


def test_select_is_idempotent_and_order_insensitive():
    sets = [
        _set_with_count("A", 4),
        _set_with_count("B", 2),
        _set_with_count("C", 4),
        _set_with_count("D", 1),
    ]
    taxonomy_of = {"A": "Circuit", "B": "Circuit", "C": "Cell Diagram", "D": "Cell Diagram"}
    selected = select_by_density(sets, taxonomy_of, k_per_type=1)
    assert select_by_density(selected, taxonomy_of, k_per_type=1) == selected
    reshuffled = select_by_density(list(reversed(sets)), taxonomy_of, k_per_type=1)
    assert {qs.problem_id for qs in reshuffled} == {qs.problem_id for qs in selected}
