"""The Generate-Filter-Select quiz pipeline.

Generate: one model pass turns a problem into a visual checklist plus
atomic multiple-choice quizzes. Filter: a text-only blind solver answers
each quiz four times; quizzes it gets right every time need no image and
are discarded. Select: per image type, keep the problems with the most
surviving quizzes.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from typing import Mapping

from .datamodel import ProblemRecord, QuizItem, QuizSet, count_kept
from .errors import EmptyQuizError, SchemaError, TransportError, UnknownTypeError
from .inverseval import extract_option_letter, format_mcq_prompt
from .prompts import extract_json_object, render_template
from .providers import TextProvider, TextRequest

log = logging.getLogger(__name__)

# Version 1 of the blind-solver prompt: the bare question, the four lettered
# options, and a one-line instruction (see inverseval.format_mcq_prompt).
# Kept minimal so the solver sees no hints beyond the quiz text itself.
MCQ_PROMPT_VERSION = 1


def build_quiz_prompt(record: ProblemRecord) -> str:
    if not record.question:
        raise ValueError("record.question must be non-empty")
    return render_template("quiz_generation", question=record.question)


def parse_quiz_response(raw: str, problem_id: str) -> QuizSet:
    """Parse the generator's JSON into a QuizSet (pre-filtration)."""
    obj = extract_json_object(raw)
    elements = obj.get("elements")
    if not isinstance(elements, list) or not elements:
        raise SchemaError("elements", "elements non-empty list required")
    if not all(isinstance(e, str) and e for e in elements):
        raise SchemaError("elements", "elements must be non-empty strings")
    quiz_dicts = obj.get("quiz")
    if quiz_dicts is None or not isinstance(quiz_dicts, list):
        raise SchemaError("quiz", "quiz list required")
    if not quiz_dicts:
        raise EmptyQuizError(f"quiz list is empty for problem {problem_id}")
    quizzes = []
    for entry in quiz_dicts:
        quiz = QuizItem.from_dict(entry)
        quiz.validate()
        quizzes.append(quiz)
    quiz_set = QuizSet(problem_id=problem_id, elements=list(elements), quizzes=quizzes)
    quiz_set.validate()
    return quiz_set


def generate_quiz_set(record: ProblemRecord, provider: TextProvider) -> QuizSet:
    if record.curation is None or not record.curation.is_valid:
        raise ValueError(f"record {record.id} has not been curated valid")
    response = provider.complete(TextRequest(prompt=build_quiz_prompt(record)))
    return parse_quiz_response(response.text, record.id)


def blind_filter_question(
    quiz: QuizItem, blind_provider: TextProvider, trials: int = 4
) -> QuizItem:
    """Run the blind solver; discard the quiz only on a perfect score.

    Each trial is an independent completion (the variant salt gives each its
    own cache slot). A provider failure counts that trial as incorrect,
    conservatively keeping the question.
    """
    prompt = format_mcq_prompt(quiz)
    temperature = blind_provider.default_temperature
    if temperature is None:
        temperature = 1.0
    correct = 0
    for trial in range(trials):
        request = TextRequest(prompt=prompt, temperature=temperature, variant=trial)
        try:
            answer = blind_provider.complete(request).text
        except TransportError as exc:
            log.warning("blind trial %d failed (%s); counted incorrect", trial, exc)
            continue
        if extract_option_letter(answer) == quiz.correct_option:
            correct += 1
    verdict = "discarded" if correct == trials else "kept"
    return replace(quiz, blind_verdict=verdict, blind_correct_count=correct)


def blind_filter_set(
    quiz_set: QuizSet,
    blind_provider: TextProvider,
    trials: int = 4,
    *,
    concurrency: int = 1,
) -> QuizSet:
    """Filter every quiz in a set and refresh valid_count."""
    if concurrency <= 1:
        filtered = [
            blind_filter_question(q, blind_provider, trials) for q in quiz_set.quizzes
        ]
    else:
        with ThreadPoolExecutor(max_workers=concurrency) as pool:
            filtered = list(
                pool.map(
                    lambda q: blind_filter_question(q, blind_provider, trials),
                    quiz_set.quizzes,
                )
            )
    return replace(quiz_set, quizzes=filtered, valid_count=count_kept(filtered))


def select_by_density(
    quiz_sets: list[QuizSet],
    taxonomy_of: Mapping[str, str],
    k_per_type: int,
) -> list[QuizSet]:
    """Keep the k densest quiz sets per image type.

    Ties break by ascending problem id; zero-valid sets are never selected.
    Output order is canonical (type name, then density rank), so selection
    is deterministic under input permutation and idempotent.
    """
    if k_per_type < 1:
        raise ValueError("k_per_type must be >= 1")
    groups: dict[str, list[QuizSet]] = {}
    for quiz_set in quiz_sets:
        if quiz_set.problem_id not in taxonomy_of:
            raise UnknownTypeError(
                f"problem {quiz_set.problem_id!r} has no image-type entry"
            )
        groups.setdefault(taxonomy_of[quiz_set.problem_id], []).append(quiz_set)
    selected: list[QuizSet] = []
    for image_type in sorted(groups):
        candidates = [qs for qs in groups[image_type] if qs.valid_count > 0]
        candidates.sort(key=lambda qs: (-qs.valid_count, qs.problem_id))
        selected.extend(candidates[:k_per_type])
    return selected
