from __future__ import annotations

import json

import pytest
from hypothesis import given, settings, strategies as st

from sciforge.datamodel import (
    AttemptLog,
    CurationResult,
    JudgeRecord,
    JudgeScores,
    ProblemRecord,
    QuizAnswer,
    QuizItem,
    QuizSet,
    RenderArtifact,
    ValidationOutcome,
    append_records,
    count_kept,
    load_manifest,
    make_problem_id,
    serialize_record,
    write_manifest,
)
from sciforge.errors import DuplicateIdError, ParseError, SchemaError
from sciforge.taxonomy import TAXONOMY

from conftest import make_artifact, make_quiz, make_quiz_set, make_record


def test_make_problem_id_is_stable_and_short():
    a = make_problem_id("corpus", "What is the area?")
    b = make_problem_id("corpus", "What is the area?")
    assert a == b
    assert len(a) == 16
    assert a != make_problem_id("corpus", "What is the area? ")
    assert a != make_problem_id("other", "What is the area?")


def test_append_zero_records_leaves_file_unchanged(tmp_path):
    path = tmp_path / "m.jsonl"
    path.write_text('{"x": 1}\n')
    assert append_records(path, []) == 0
    assert path.read_text() == '{"x": 1}\n'


def test_append_three_twice_holds_six_lines_in_order(tmp_path):
    path = tmp_path / "m.jsonl"
    records = [make_record(question=f"Question {i} with a circle.") for i in range(3)]
    assert append_records(path, records) == 3
    assert append_records(path, records) == 3
    lines = path.read_text().splitlines()
    assert len(lines) == 6
    ids = [json.loads(line)["id"] for line in lines]
    assert ids == [r.id for r in records] * 2


def test_append_invalid_correct_option_is_schema_error(tmp_path):
    quiz = make_quiz()
    quiz.correct_option = "E"
    quiz_set = make_quiz_set("p1", [quiz])
    with pytest.raises(SchemaError) as err:
        append_records(tmp_path / "m.jsonl", [quiz_set])
    assert "correct_option" in str(err.value)
    assert not (tmp_path / "m.jsonl").exists()


def test_write_then_load_round_trips(tmp_path):
    path = tmp_path / "raw.jsonl"
    records = [make_record(question=f"Problem {i} about circles.") for i in range(4)]
    append_records(path, records)
    manifest = load_manifest(path, "raw")
    assert manifest.records == records
    assert manifest.schema_version == 1


def test_duplicate_id_reports_second_line(tmp_path):
    path = tmp_path / "raw.jsonl"
    r1 = make_record(question="First problem text here.")
    r2 = make_record(question="Second problem text here.")
    r3 = make_record(question="Third problem text here.")
    r4 = make_record(question="Fourth problem text here.")
    append_records(path, [r1, r2, r3, r4, r2])
    with pytest.raises(DuplicateIdError) as err:
        load_manifest(path, "raw")
    assert err.value.line == 5
    assert err.value.record_id == r2.id


def test_malformed_line_reports_line_number(tmp_path):
    path = tmp_path / "raw.jsonl"
    records = [make_record(question=f"Problem {i} text.") for i in range(3)]
    append_records(path, records)
    lines = path.read_text().splitlines()
    lines[2] = '{"not json'
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(ParseError) as err:
        load_manifest(path, "raw")
    assert err.value.line == 3


def test_truncated_trailing_line_is_reported_not_parsed(tmp_path):
    path = tmp_path / "raw.jsonl"
    append_records(path, [make_record()])
    with open(path, "a", encoding="utf-8") as fh:
        fh.write('{"schema_version": 1, "kind": "problem"')  # no newline
    with pytest.raises(ParseError) as err:
        load_manifest(path, "raw")
    assert "truncated" in str(err.value)


def test_unknown_schema_version_rejected(tmp_path):
    path = tmp_path / "raw.jsonl"
    record = make_record()
    line = json.loads(serialize_record(record))
    line["schema_version"] = 2
    path.write_text(json.dumps(line) + "\n")
    with pytest.raises(ParseError) as err:
        load_manifest(path, "raw")
    assert "schema_version" in str(err.value)


def test_wrong_kind_for_stage_rejected(tmp_path):
    path = tmp_path / "m.jsonl"
    append_records(path, [make_record()])
    with pytest.raises(ParseError) as err:
        load_manifest(path, "quizzes")
    assert "kind" in str(err.value)


def test_write_manifest_is_idempotent(tmp_path):
    path = tmp_path / "m.jsonl"
    records = [make_record(question=f"Problem {i}.") for i in range(3)]
    write_manifest(path, records)
    first = path.read_bytes()
    write_manifest(path, records)
    assert path.read_bytes() == first


def test_curation_coupling_rules():
    invalid_with_score = CurationResult(
        reasoning="r", is_valid=False, scene_clarity_score=3
    )
    with pytest.raises(SchemaError):
        invalid_with_score.validate()
    valid_missing = CurationResult(
        reasoning="r",
        is_valid=True,
        primary_category="Math",
        secondary_type="Plane Geometric",
        scene_clarity_score=3,
        visual_complexity_score=None,
    )
    with pytest.raises(SchemaError) as err:
        valid_missing.validate()
    assert "visual_complexity_score" in str(err.value)


def test_artifact_ok_must_be_last_attempt(tmp_path):
    artifact = make_artifact("p1", "img.png")
    artifact.attempts = [
        AttemptLog(1, "ok", ""),
        AttemptLog(2, "execution_failure", ""),
    ]
    with pytest.raises(SchemaError):
        artifact.validate()


def test_outcome_conjunction_enforced():
    outcome = ValidationOutcome(
        problem_id="p1",
        artifact_id="imgcoder:coder:p1",
        per_quiz=[QuizAnswer(0, "A", True), QuizAnswer(1, "B", False)],
        all_correct=True,
    )
    with pytest.raises(SchemaError):
        outcome.validate()


# --- round-trip property over generated values ------------------------------

_text = st.text(
    alphabet=st.characters(blacklist_categories=("Cs",)), min_size=1, max_size=40
)
_pairs = [
    (subject, image_type)
    for subject, types in TAXONOMY.types_by_subject.items()
    for image_type in types
]


@st.composite
def curation_results(draw):
    if draw(st.booleans()):
        subject, image_type = draw(st.sampled_from(_pairs))
        return CurationResult(
            reasoning=draw(_text),
            is_valid=True,
            primary_category=subject,
            secondary_type=image_type,
            scene_clarity_score=draw(st.integers(1, 5)),
            visual_complexity_score=draw(st.integers(1, 5)),
        )
    return CurationResult(reasoning=draw(_text), is_valid=False)


@st.composite
def problem_records(draw):
    question = draw(_text)
    source = draw(st.sampled_from(["instruction_corpus", "real_reference"]))
    return ProblemRecord(
        id=make_problem_id(source, question),
        subject=draw(st.sampled_from(["Math", "Physics", "Chemistry", "Biology", "Universal"])),
        question=question,
        source=source,
        curation=draw(st.none() | curation_results()),
        review_flag=draw(st.sampled_from(["unreviewed", "approved", "rejected"])),
    )


@st.composite
def quiz_items(draw):
    options = draw(
        st.lists(_text, min_size=4, max_size=4, unique=True)
    )
    filtered = draw(st.booleans())
    count = draw(st.integers(0, 4)) if filtered else None
    verdict = None
    if filtered:
        verdict = "discarded" if count == 4 else "kept"
    return QuizItem(
        question=draw(_text),
        options=dict(zip("ABCD", options)),
        correct_option=draw(st.sampled_from("ABCD")),
        evidence_snippet=draw(_text),
        blind_verdict=verdict,
        blind_correct_count=count,
    )


@st.composite
def quiz_sets(draw):
    quizzes = draw(st.lists(quiz_items(), min_size=1, max_size=4))
    return QuizSet(
        problem_id=draw(_text),
        elements=draw(st.lists(_text, min_size=1, max_size=4)),
        quizzes=quizzes,
        valid_count=count_kept(quizzes),
    )


@st.composite
def artifacts(draw):
    paradigm = draw(st.sampled_from(["imgcoder", "pixel"]))
    n_failures = draw(st.integers(0, 3))
    ok = draw(st.booleans())
    attempts = [
        AttemptLog(
            i,
            draw(st.sampled_from(["extraction_failure", "execution_failure", "timeout"])),
            draw(_text),
        )
        for i in range(1, n_failures + 1)
    ]
    if ok:
        attempts.append(AttemptLog(n_failures + 1, "ok", "rendered"))
    if not attempts:
        attempts = [AttemptLog(1, "execution_failure", "boom")]
        ok = False
    is_imgcoder = paradigm == "imgcoder"
    return RenderArtifact(
        problem_id=draw(_text),
        paradigm=paradigm,
        provider_id=draw(_text),
        image_path=draw(_text),
        attempts=attempts,
        plan=draw(_text) if is_imgcoder else None,
        code=draw(_text) if is_imgcoder else None,
        is_fallback=not ok,
    )


@st.composite
def outcomes(draw):
    answers = draw(
        st.lists(
            st.builds(
                QuizAnswer,
                quiz_index=st.integers(0, 10),
                predicted=st.none() | st.sampled_from("ABCD"),
                correct=st.booleans(),
            ),
            min_size=1,
            max_size=5,
        )
    )
    return ValidationOutcome(
        problem_id=draw(_text),
        artifact_id=draw(_text),
        per_quiz=answers,
        all_correct=all(a.correct for a in answers),
    )


@st.composite
def judge_records(draw):
    if draw(st.booleans()):
        scores = JudgeScores(
            *[draw(st.integers(0, 2)) for _ in range(5)], critique=draw(_text)
        )
        return JudgeRecord(
            problem_id=draw(_text), artifact_id=draw(_text), scores=scores
        )
    return JudgeRecord(
        problem_id=draw(_text), artifact_id=draw(_text), error=draw(_text)
    )


@settings(max_examples=60, deadline=None)
@given(
    st.one_of(
        problem_records(), quiz_sets(), artifacts(), outcomes(), judge_records()
    )
)
def test_serialize_round_trip(record):
    record.validate()
    payload = json.loads(serialize_record(record))
    assert payload["schema_version"] == 1
    rebuilt = type(record).from_dict(payload)
    assert rebuilt == record
