"""Multimodal adaptation: move given values out of the text into the image.

The rewriter returns the original question, the list of hidden parameters,
and the rewritten question with visual pointers. A lexical leak check then
verifies no hidden value survives in the rewritten text; records that leak
are never exported as train-ready.
"""

from __future__ import annotations

import logging
import re

from .datamodel import AdaptationResult, ProblemRecord
from .errors import SchemaError
from .prompts import extract_json_object, render_template
from .providers import TextProvider, TextRequest

log = logging.getLogger(__name__)

_NUMBER_RE = re.compile(r"\d+(?:\.\d+)?")
_WORD_RE = re.compile(r"[^\W\d_]+", re.UNICODE)


def build_adaptation_prompt(record: ProblemRecord) -> str:
    if not record.question:
        raise ValueError("record.question must be non-empty")
    return render_template("multimodal_adaptation", question=record.question)


def parse_adaptation_response(raw: str) -> AdaptationResult:
    obj = extract_json_object(raw)
    for key in ("original_question", "hidden_parameters", "multimodal_question"):
        if key not in obj:
            raise SchemaError(key, f"{key}: missing from adaptation response")
    result = AdaptationResult(
        original_question=str(obj["original_question"]),
        hidden_parameters=[str(p) for p in obj["hidden_parameters"]],
        multimodal_question=str(obj["multimodal_question"]),
    )
    result.validate()
    return result


def adapt_record(record: ProblemRecord, provider: TextProvider) -> AdaptationResult:
    if record.curation is None or not record.curation.is_valid:
        raise ValueError(f"record {record.id} has not been curated valid")
    response = provider.complete(TextRequest(prompt=build_adaptation_prompt(record)))
    return parse_adaptation_response(response.text)


def is_noop_adaptation(result: AdaptationResult) -> bool:
    """Nothing hidden and the question unchanged; valid but flagged."""
    return (
        not result.hidden_parameters
        and result.multimodal_question.strip() == result.original_question.strip()
    )


def _numeric_tokens(text: str) -> set[str]:
    return set(_NUMBER_RE.findall(text))


def _occurs_at_token_boundary(needle: str, haystack: str) -> bool:
    # A boundary is anything non-alphanumeric; "5 kg" must not match inside
    # "15 kg", but "30" matches "angle of 30 degrees".
    pattern = r"(?<![0-9A-Za-z])" + re.escape(needle) + r"(?![0-9A-Za-z])"
    return re.search(pattern, haystack) is not None


def verify_leak_free(result: AdaptationResult) -> list[str]:
    """Check hidden parameters do not survive in the rewritten question.

    Matching is lexical and case-folded. The whole parameter is checked at
    token boundaries, and every numeric token inside it is checked as a
    whole numeric token ("5" never matches inside "15"). Unit words alone
    ("kg", "degrees") do not count as leaks. Returns the leaked strings;
    empty means pass.
    """
    question = result.multimodal_question.casefold()
    question_numbers = _numeric_tokens(question)
    leaks: list[str] = []
    for parameter in result.hidden_parameters:
        normalized = parameter.strip().casefold()
        if not normalized:
            continue
        if _occurs_at_token_boundary(normalized, question):
            leaks.append(parameter.strip())
            continue
        for number in sorted(_numeric_tokens(normalized)):
            if number in question_numbers and number not in leaks:
                leaks.append(number)
    return leaks
