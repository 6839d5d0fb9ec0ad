"""Canonical record types and append-only JSONL manifest persistence.

Every pipeline stage reads and writes manifests of these records, one JSON
object per line, UTF-8, with a ``schema_version`` field on each line.
Records are plain dataclasses; invariants are enforced at the serialization
boundary (append/load/parse), not in constructors, so tests can build
deliberately broken values.
"""

from __future__ import annotations

import hashlib
import json
import os
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Sequence

from .errors import DuplicateIdError, ParseError, SchemaError, TaxonomyError
from .taxonomy import TAXONOMY, SUBJECTS

SCHEMA_VERSION = 1

SOURCES = ("instruction_corpus", "real_reference")
REVIEW_FLAGS = ("unreviewed", "approved", "rejected")
PARADIGMS = ("imgcoder", "pixel")
ATTEMPT_OUTCOMES = ("ok", "extraction_failure", "execution_failure", "timeout")
BLIND_VERDICTS = ("kept", "discarded")
OPTION_KEYS = ("A", "B", "C", "D")

JUDGE_DIMENSIONS = (
    "correctness_fidelity",
    "layout_precision",
    "readability_occlusion",
    "scientific_plausibility",
    "expressiveness_richness",
)


def make_problem_id(source_name: str, question: str) -> str:
    """Stable 16-hex-char id from (source name, question text)."""
    digest = hashlib.sha256(
        source_name.encode("utf-8") + b"\x00" + question.encode("utf-8")
    ).hexdigest()
    return digest[:16]


def _req(cond: bool, fieldname: str, msg: str) -> None:
    if not cond:
        raise SchemaError(fieldname, f"{fieldname}: {msg}")


def _is_int(x: Any) -> bool:
    return isinstance(x, int) and not isinstance(x, bool)


def _check_str(value: Any, fieldname: str, *, allow_empty: bool = False) -> None:
    _req(isinstance(value, str), fieldname, "must be a string")
    if not allow_empty:
        _req(bool(value), fieldname, "must be non-empty")


# ---------------------------------------------------------------------------
# record types


@dataclass
class CurationResult:
    reasoning: str
    is_valid: bool
    primary_category: str | None = None
    secondary_type: str | None = None
    scene_clarity_score: int | None = None
    visual_complexity_score: int | None = None

    def validate(self) -> None:
        _check_str(self.reasoning, "reasoning", allow_empty=True)
        _req(isinstance(self.is_valid, bool), "is_valid", "must be a boolean")
        optionals = (
            ("primary_category", self.primary_category),
            ("secondary_type", self.secondary_type),
            ("scene_clarity_score", self.scene_clarity_score),
            ("visual_complexity_score", self.visual_complexity_score),
        )
        if not self.is_valid:
            for name, value in optionals:
                _req(value is None, name, "must be null when is_valid is false")
            return
        for name, value in optionals:
            _req(value is not None, name, "required when is_valid is true")
        for name, score in (
            ("scene_clarity_score", self.scene_clarity_score),
            ("visual_complexity_score", self.visual_complexity_score),
        ):
            _req(_is_int(score), name, "must be an integer")
            _req(1 <= score <= 5, name, f"score {score} outside [1,5]")
        if not TAXONOMY.is_legal_pair(self.primary_category, self.secondary_type):
            raise TaxonomyError(
                f"illegal pair ({self.primary_category!r}, {self.secondary_type!r})"
            )

    def to_dict(self) -> dict:
        return {
            "reasoning": self.reasoning,
            "is_valid": self.is_valid,
            "primary_category": self.primary_category,
            "secondary_type": self.secondary_type,
            "scene_clarity_score": self.scene_clarity_score,
            "visual_complexity_score": self.visual_complexity_score,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CurationResult":
        return cls(
            reasoning=d.get("reasoning", ""),
            is_valid=d.get("is_valid"),
            primary_category=d.get("primary_category"),
            secondary_type=d.get("secondary_type"),
            scene_clarity_score=d.get("scene_clarity_score"),
            visual_complexity_score=d.get("visual_complexity_score"),
        )


@dataclass
class AdaptationResult:
    original_question: str
    hidden_parameters: list[str]
    multimodal_question: str

    def validate(self) -> None:
        _check_str(self.original_question, "original_question", allow_empty=True)
        _check_str(self.multimodal_question, "multimodal_question")
        _req(
            isinstance(self.hidden_parameters, list)
            and all(isinstance(p, str) for p in self.hidden_parameters),
            "hidden_parameters",
            "must be a list of strings",
        )

    def to_dict(self) -> dict:
        return {
            "original_question": self.original_question,
            "hidden_parameters": list(self.hidden_parameters),
            "multimodal_question": self.multimodal_question,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AdaptationResult":
        return cls(
            original_question=d.get("original_question", ""),
            hidden_parameters=list(d.get("hidden_parameters", [])),
            multimodal_question=d.get("multimodal_question", ""),
        )


@dataclass
class ProblemRecord:
    id: str
    subject: str
    question: str
    source: str
    curation: CurationResult | None = None
    adapted: AdaptationResult | None = None
    review_flag: str = "unreviewed"

    KIND = "problem"

    @property
    def manifest_key(self) -> str:
        return self.id

    def validate(self) -> None:
        _check_str(self.id, "id")
        _req(self.subject in SUBJECTS, "subject", f"{self.subject!r} not a subject")
        _check_str(self.question, "question")
        _req(self.source in SOURCES, "source", f"{self.source!r} not a source")
        _req(
            self.review_flag in REVIEW_FLAGS,
            "review_flag",
            f"{self.review_flag!r} not a review flag",
        )
        if self.curation is not None:
            self.curation.validate()
        if self.adapted is not None:
            self.adapted.validate()

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "subject": self.subject,
            "question": self.question,
            "source": self.source,
            "curation": self.curation.to_dict() if self.curation else None,
            "adapted": self.adapted.to_dict() if self.adapted else None,
            "review_flag": self.review_flag,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ProblemRecord":
        curation = d.get("curation")
        adapted = d.get("adapted")
        return cls(
            id=d.get("id", ""),
            subject=d.get("subject", ""),
            question=d.get("question", ""),
            source=d.get("source", ""),
            curation=CurationResult.from_dict(curation) if curation else None,
            adapted=AdaptationResult.from_dict(adapted) if adapted else None,
            review_flag=d.get("review_flag", "unreviewed"),
        )


@dataclass
class QuizItem:
    question: str
    options: dict[str, str]
    correct_option: str
    evidence_snippet: str
    blind_verdict: str | None = None
    blind_correct_count: int | None = None

    def validate(self) -> None:
        _check_str(self.question, "question")
        _req(isinstance(self.options, dict), "options", "must be a mapping")
        _req(
            tuple(sorted(self.options)) == OPTION_KEYS,
            "options",
            f"keys must be exactly {OPTION_KEYS}, got {sorted(self.options)}",
        )
        for key, text in self.options.items():
            _check_str(text, f"options[{key}]")
        texts = list(self.options.values())
        _req(
            len(set(texts)) == len(texts),
            "options distinct",
            "option texts must be pairwise distinct",
        )
        _req(
            self.correct_option in self.options,
            "correct_option",
            f"{self.correct_option!r} is not an option key",
        )
        _check_str(self.evidence_snippet, "evidence_snippet", allow_empty=True)
        if self.blind_verdict is not None:
            _req(
                self.blind_verdict in BLIND_VERDICTS,
                "blind_verdict",
                f"{self.blind_verdict!r} not in {BLIND_VERDICTS}",
            )
        if self.blind_correct_count is not None:
            _req(_is_int(self.blind_correct_count), "blind_correct_count", "must be int")
            _req(
                0 <= self.blind_correct_count <= 4,
                "blind_correct_count",
                f"{self.blind_correct_count} outside [0,4]",
            )

    def to_dict(self) -> dict:
        return {
            "question": self.question,
            "options": {k: self.options[k] for k in sorted(self.options)},
            "correct_option": self.correct_option,
            "evidence_snippet": self.evidence_snippet,
            "blind_verdict": self.blind_verdict,
            "blind_correct_count": self.blind_correct_count,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "QuizItem":
        return cls(
            question=d.get("question", ""),
            options=dict(d.get("options", {})),
            correct_option=d.get("correct_option", ""),
            evidence_snippet=d.get("evidence_snippet", ""),
            blind_verdict=d.get("blind_verdict"),
            blind_correct_count=d.get("blind_correct_count"),
        )


def count_kept(quizzes: Sequence[QuizItem]) -> int:
    return sum(1 for q in quizzes if q.blind_verdict == "kept")


@dataclass
class QuizSet:
    problem_id: str
    elements: list[str]
    quizzes: list[QuizItem]
    valid_count: int = 0

    KIND = "quiz_set"

    @property
    def manifest_key(self) -> str:
        return self.problem_id

    def validate(self) -> None:
        _check_str(self.problem_id, "problem_id")
        _req(
            isinstance(self.elements, list)
            and all(isinstance(e, str) and e for e in self.elements),
            "elements",
            "must be a list of non-empty strings",
        )
        for quiz in self.quizzes:
            quiz.validate()
        _req(
            self.valid_count == count_kept(self.quizzes),
            "valid_count",
            f"stored {self.valid_count} != recomputed {count_kept(self.quizzes)}",
        )

    def to_dict(self) -> dict:
        return {
            "problem_id": self.problem_id,
            "elements": list(self.elements),
            "quizzes": [q.to_dict() for q in self.quizzes],
            "valid_count": self.valid_count,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "QuizSet":
        return cls(
            problem_id=d.get("problem_id", ""),
            elements=list(d.get("elements", [])),
            quizzes=[QuizItem.from_dict(q) for q in d.get("quizzes", [])],
            valid_count=d.get("valid_count", 0),
        )


@dataclass
class AttemptLog:
    attempt_index: int
    outcome: str
    detail: str = ""

    def validate(self) -> None:
        _req(_is_int(self.attempt_index), "attempt_index", "must be int")
        _req(self.attempt_index >= 1, "attempt_index", "must be >= 1")
        _req(
            self.outcome in ATTEMPT_OUTCOMES,
            "outcome",
            f"{self.outcome!r} not in {ATTEMPT_OUTCOMES}",
        )
        _check_str(self.detail, "detail", allow_empty=True)

    def to_dict(self) -> dict:
        return {
            "attempt_index": self.attempt_index,
            "outcome": self.outcome,
            "detail": self.detail,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AttemptLog":
        return cls(
            attempt_index=d.get("attempt_index", 0),
            outcome=d.get("outcome", ""),
            detail=d.get("detail", ""),
        )


@dataclass
class RenderArtifact:
    problem_id: str
    paradigm: str
    provider_id: str
    image_path: str
    attempts: list[AttemptLog]
    plan: str | None = None
    code: str | None = None
    is_fallback: bool = False

    KIND = "artifact"

    @property
    def artifact_id(self) -> str:
        return f"{self.paradigm}:{self.provider_id}:{self.problem_id}"

    @property
    def manifest_key(self) -> str:
        return self.artifact_id

    def validate(self) -> None:
        _check_str(self.problem_id, "problem_id")
        _req(
            self.paradigm in PARADIGMS,
            "paradigm",
            f"{self.paradigm!r} not in {PARADIGMS}",
        )
        _check_str(self.provider_id, "provider_id")
        _check_str(self.image_path, "image_path")
        _req(bool(self.attempts), "attempts", "must be non-empty")
        for i, attempt in enumerate(self.attempts, start=1):
            attempt.validate()
            _req(
                attempt.attempt_index == i,
                "attempts",
                f"indices must be dense from 1, got {attempt.attempt_index} at {i}",
            )
        ok_positions = [
            i for i, a in enumerate(self.attempts) if a.outcome == "ok"
        ]
        if self.is_fallback:
            _req(not ok_positions, "attempts", "fallback artifact cannot have an ok attempt")
        else:
            _req(
                ok_positions == [len(self.attempts) - 1],
                "attempts",
                "exactly the last attempt must be ok for a non-fallback artifact",
            )
        if self.paradigm == "imgcoder" and not self.is_fallback:
            _req(bool(self.plan), "plan", "required for a rendered imgcoder artifact")
            _req(bool(self.code), "code", "required for a rendered imgcoder artifact")
        if self.paradigm == "pixel":
            _req(self.plan is None, "plan", "must be absent for pixel artifacts")
            _req(self.code is None, "code", "must be absent for pixel artifacts")

    def to_dict(self) -> dict:
        return {
            "problem_id": self.problem_id,
            "paradigm": self.paradigm,
            "provider_id": self.provider_id,
            "image_path": self.image_path,
            "attempts": [a.to_dict() for a in self.attempts],
            "plan": self.plan,
            "code": self.code,
            "is_fallback": self.is_fallback,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RenderArtifact":
        return cls(
            problem_id=d.get("problem_id", ""),
            paradigm=d.get("paradigm", ""),
            provider_id=d.get("provider_id", ""),
            image_path=d.get("image_path", ""),
            attempts=[AttemptLog.from_dict(a) for a in d.get("attempts", [])],
            plan=d.get("plan"),
            code=d.get("code"),
            is_fallback=d.get("is_fallback", False),
        )


@dataclass
class QuizAnswer:
    quiz_index: int
    predicted: str | None
    correct: bool

    def validate(self) -> None:
        _req(_is_int(self.quiz_index), "quiz_index", "must be int")
        _req(self.quiz_index >= 0, "quiz_index", "must be >= 0")
        if self.predicted is not None:
            _req(
                self.predicted in OPTION_KEYS,
                "predicted",
                f"{self.predicted!r} not in {OPTION_KEYS}",
            )
        _req(isinstance(self.correct, bool), "correct", "must be bool")

    def to_dict(self) -> dict:
        return {
            "quiz_index": self.quiz_index,
            "predicted": self.predicted,
            "correct": self.correct,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "QuizAnswer":
        return cls(
            quiz_index=d.get("quiz_index", -1),
            predicted=d.get("predicted"),
            correct=d.get("correct", False),
        )


@dataclass
class ValidationOutcome:
    problem_id: str
    artifact_id: str
    per_quiz: list[QuizAnswer]
    all_correct: bool

    KIND = "outcome"

    @property
    def manifest_key(self) -> str:
        return self.artifact_id

    def validate(self) -> None:
        _check_str(self.problem_id, "problem_id")
        _check_str(self.artifact_id, "artifact_id")
        _req(bool(self.per_quiz), "per_quiz", "must be non-empty")
        for answer in self.per_quiz:
            answer.validate()
        expected = all(a.correct for a in self.per_quiz)
        _req(
            self.all_correct == expected,
            "all_correct",
            f"stored {self.all_correct} != conjunction {expected}",
        )

    def to_dict(self) -> dict:
        return {
            "problem_id": self.problem_id,
            "artifact_id": self.artifact_id,
            "per_quiz": [a.to_dict() for a in self.per_quiz],
            "all_correct": self.all_correct,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ValidationOutcome":
        return cls(
            problem_id=d.get("problem_id", ""),
            artifact_id=d.get("artifact_id", ""),
            per_quiz=[QuizAnswer.from_dict(a) for a in d.get("per_quiz", [])],
            all_correct=d.get("all_correct", False),
        )


@dataclass
class JudgeScores:
    correctness_fidelity: int
    layout_precision: int
    readability_occlusion: int
    scientific_plausibility: int
    expressiveness_richness: int
    critique: str = ""

    def as_tuple(self) -> tuple[int, int, int, int, int]:
        return (
            self.correctness_fidelity,
            self.layout_precision,
            self.readability_occlusion,
            self.scientific_plausibility,
            self.expressiveness_richness,
        )

    def validate(self) -> None:
        for name in JUDGE_DIMENSIONS:
            score = getattr(self, name)
            _req(_is_int(score), name, "must be int")
            _req(score in (0, 1, 2), name, f"score {score} out of {{0,1,2}}")
        _check_str(self.critique, "critique", allow_empty=True)

    def to_dict(self) -> dict:
        d = {name: getattr(self, name) for name in JUDGE_DIMENSIONS}
        d["critique"] = self.critique
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "JudgeScores":
        return cls(
            **{name: d.get(name) for name in JUDGE_DIMENSIONS},
            critique=d.get("critique", ""),
        )


@dataclass
class JudgeRecord:
    problem_id: str
    artifact_id: str
    scores: JudgeScores | None = None
    error: str | None = None

    KIND = "judge"

    @property
    def manifest_key(self) -> str:
        return self.artifact_id

    def validate(self) -> None:
        _check_str(self.problem_id, "problem_id")
        _check_str(self.artifact_id, "artifact_id")
        if self.scores is None:
            _req(bool(self.error), "error", "required when the artifact is unjudged")
        else:
            self.scores.validate()
            _req(self.error is None, "error", "must be null when scores are present")

    def to_dict(self) -> dict:
        return {
            "problem_id": self.problem_id,
            "artifact_id": self.artifact_id,
            "scores": self.scores.to_dict() if self.scores else None,
            "error": self.error,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "JudgeRecord":
        scores = d.get("scores")
        return cls(
            problem_id=d.get("problem_id", ""),
            artifact_id=d.get("artifact_id", ""),
            scores=JudgeScores.from_dict(scores) if scores else None,
            error=d.get("error"),
        )


@dataclass
class MetricRecord:
    problem_id: str
    artifact_id: str
    psnr: float | None = None
    ssim: float | None = None
    cosine: float | None = None

    KIND = "metric"

    @property
    def manifest_key(self) -> str:
        return self.artifact_id

    def validate(self) -> None:
        _check_str(self.problem_id, "problem_id")
        _check_str(self.artifact_id, "artifact_id")
        for name in ("psnr", "ssim", "cosine"):
            value = getattr(self, name)
            if value is not None:
                _req(isinstance(value, float), name, "must be a float")
                _req(value == value and abs(value) != float("inf"), name, "must be finite")

    def to_dict(self) -> dict:
        return {
            "problem_id": self.problem_id,
            "artifact_id": self.artifact_id,
            "psnr": self.psnr,
            "ssim": self.ssim,
            "cosine": self.cosine,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MetricRecord":
        return cls(
            problem_id=d.get("problem_id", ""),
            artifact_id=d.get("artifact_id", ""),
            psnr=d.get("psnr"),
            ssim=d.get("ssim"),
            cosine=d.get("cosine"),
        )


@dataclass
class ReferenceImage:
    """A real reference image paired to a problem, for standard metrics."""

    problem_id: str
    image_path: str

    KIND = "reference"

    @property
    def manifest_key(self) -> str:
        return self.problem_id

    def validate(self) -> None:
        _check_str(self.problem_id, "problem_id")
        _check_str(self.image_path, "image_path")

    def to_dict(self) -> dict:
        return {"problem_id": self.problem_id, "image_path": self.image_path}

    @classmethod
    def from_dict(cls, d: dict) -> "ReferenceImage":
        return cls(
            problem_id=d.get("problem_id", ""),
            image_path=d.get("image_path", ""),
        )


@dataclass
class TrainSample:
    problem_id: str
    question: str
    image_path: str
    hidden_parameters: list[str] = field(default_factory=list)

    KIND = "train_sample"

    @property
    def manifest_key(self) -> str:
        return self.problem_id

    def validate(self) -> None:
        _check_str(self.problem_id, "problem_id")
        _check_str(self.question, "question")
        _check_str(self.image_path, "image_path")
        _req(
            isinstance(self.hidden_parameters, list)
            and all(isinstance(p, str) for p in self.hidden_parameters),
            "hidden_parameters",
            "must be a list of strings",
        )

    def to_dict(self) -> dict:
        return {
            "problem_id": self.problem_id,
            "question": self.question,
            "image_path": self.image_path,
            "hidden_parameters": list(self.hidden_parameters),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TrainSample":
        return cls(
            problem_id=d.get("problem_id", ""),
            question=d.get("question", ""),
            image_path=d.get("image_path", ""),
            hidden_parameters=list(d.get("hidden_parameters", [])),
        )


# ---------------------------------------------------------------------------
# manifest persistence

RECORD_TYPES = {
    cls.KIND: cls
    for cls in (
        ProblemRecord,
        QuizSet,
        RenderArtifact,
        ValidationOutcome,
        JudgeRecord,
        MetricRecord,
        ReferenceImage,
        TrainSample,
    )
}

STAGE_TYPES = {
    "raw": ProblemRecord,
    "curated": ProblemRecord,
    "dropped": ProblemRecord,
    "quizzes": QuizSet,
    "selected": ProblemRecord,
    "selected_quizzes": QuizSet,
    "judged": JudgeRecord,
    "outcomes": ValidationOutcome,
    "adapted": ProblemRecord,
    "train_ready": TrainSample,
    "metrics": MetricRecord,
    "references": ReferenceImage,
}


def record_type_for_stage(stage: str):
    if stage.startswith("artifacts"):
        return RenderArtifact
    try:
        return STAGE_TYPES[stage]
    except KeyError:
        raise SchemaError("stage", f"stage: unknown stage {stage!r}") from None


@dataclass
class PipelineManifest:
    stage: str
    records: list
    schema_version: int = SCHEMA_VERSION


def serialize_record(record) -> str:
    d = {"schema_version": SCHEMA_VERSION, "kind": record.KIND}
    d.update(record.to_dict())
    return json.dumps(d, ensure_ascii=False, sort_keys=True)


_append_locks: dict[str, threading.Lock] = {}
_append_locks_guard = threading.Lock()


def _lock_for(path: Path) -> threading.Lock:
    key = str(path.resolve())
    with _append_locks_guard:
        return _append_locks.setdefault(key, threading.Lock())


def append_records(manifest_path: str | Path, records: Iterable) -> int:
    """Validate and append records, one line each, in a single write.

    Returns the number of records appended. Raises SchemaError before
    touching the file if any record is invalid.
    """
    manifest_path = Path(manifest_path)
    records = list(records)
    lines = []
    for record in records:
        record.validate()
        lines.append(serialize_record(record) + "\n")
    if not lines:
        return 0
    manifest_path.parent.mkdir(parents=True, exist_ok=True)
    with _lock_for(manifest_path):
        with open(manifest_path, "a", encoding="utf-8") as fh:
            fh.write("".join(lines))
            fh.flush()
            os.fsync(fh.fileno())
    return len(records)


def write_manifest(manifest_path: str | Path, records: Iterable) -> int:
    """Replace a manifest with the given records (atomic via rename)."""
    manifest_path = Path(manifest_path)
    records = list(records)
    lines = []
    for record in records:
        record.validate()
        lines.append(serialize_record(record) + "\n")
    manifest_path.parent.mkdir(parents=True, exist_ok=True)
    tmp = manifest_path.with_suffix(manifest_path.suffix + ".tmp")
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write("".join(lines))
        fh.flush()
        os.fsync(fh.fileno())
    os.replace(tmp, manifest_path)
    return len(records)


def load_manifest(manifest_path: str | Path, stage: str) -> PipelineManifest:
    """Parse and invariant-check a manifest; reject duplicates.

    A trailing line without a newline is reported as a truncated write
    rather than parsed.
    """
    manifest_path = Path(manifest_path)
    record_type = record_type_for_stage(stage)
    text = manifest_path.read_text("utf-8")
    if text and not text.endswith("\n"):
        n_lines = text.count("\n") + 1
        raise ParseError(n_lines, "truncated trailing line (missing newline)")
    records = []
    seen: dict[str, int] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            raise ParseError(lineno, "blank line in manifest")
        try:
            payload = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ParseError(lineno, f"invalid JSON: {exc.msg}") from exc
        if not isinstance(payload, dict):
            raise ParseError(lineno, "line is not a JSON object")
        version = payload.get("schema_version")
        if version != SCHEMA_VERSION:
            raise ParseError(lineno, f"unsupported schema_version {version!r}")
        kind = payload.get("kind")
        if kind != record_type.KIND:
            raise ParseError(
                lineno,
                f"record kind {kind!r} does not match stage {stage!r} "
                f"(expected {record_type.KIND!r})",
            )
        record = record_type.from_dict(payload)
        try:
            record.validate()
        except (SchemaError, TaxonomyError) as exc:
            raise ParseError(lineno, f"invalid record: {exc}") from exc
        key = record.manifest_key
        if key in seen:
            raise DuplicateIdError(key, lineno)
        seen[key] = lineno
        records.append(record)
    return PipelineManifest(stage=stage, records=records)
