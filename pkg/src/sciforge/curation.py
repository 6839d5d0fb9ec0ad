"""Visualizability filtration and taxonomy classification.

One model pass per problem decides validity, assigns a (subject, image
type) pair, and scores scene clarity / visual complexity. Records whose
responses cannot be parsed are dropped with reason "unparseable" rather
than aborting the batch.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace

from .datamodel import CurationResult, ProblemRecord
from .errors import NoJsonFound, SchemaError, TaxonomyError, TransportError
from .prompts import extract_json_object, render_template
from .providers import TextProvider, TextRequest
from .taxonomy import check_pair

log = logging.getLogger(__name__)

UNPARSEABLE = "unparseable"


def build_curation_prompt(record: ProblemRecord) -> str:
    """Render the curation template for one problem."""
    if not record.question:
        raise ValueError("record.question must be non-empty")
    return render_template("curation", subject=record.subject, question=record.question)


def parse_curation_response(raw: str) -> CurationResult:
    """Parse and invariant-check a curation response.

    Locates the first balanced JSON object (code fences stripped), enforces
    the valid/null coupling, normalizes taxonomy spellings, and rejects
    illegal (category, type) pairs.
    """
    obj = extract_json_object(raw)
    for key in ("reasoning", "is_valid"):
        if key not in obj:
            raise SchemaError(key, f"{key}: missing from curation response")
    is_valid = obj["is_valid"]
    if not isinstance(is_valid, bool):
        raise SchemaError("is_valid", "is_valid: must be a boolean")
    result = CurationResult(
        reasoning=str(obj.get("reasoning", "")),
        is_valid=is_valid,
        primary_category=obj.get("primary_category"),
        secondary_type=obj.get("secondary_type"),
        scene_clarity_score=obj.get("scene_clarity_score"),
        visual_complexity_score=obj.get("visual_complexity_score"),
    )
    if result.is_valid:
        if result.primary_category is None:
            raise SchemaError("primary_category", "primary_category: required when valid")
        if result.secondary_type is None:
            raise SchemaError("secondary_type", "secondary_type: required when valid")
        category, image_type = check_pair(result.primary_category, result.secondary_type)
        result = replace(result, primary_category=category, secondary_type=image_type)
    result.validate()
    return result


def curate_record(record: ProblemRecord, provider: TextProvider) -> ProblemRecord:
    """Attach a CurationResult to one record; never raises for bad model output."""
    prompt = build_curation_prompt(record)
    try:
        response = provider.complete(TextRequest(prompt=prompt))
        curation = parse_curation_response(response.text)
    except (TransportError, NoJsonFound, SchemaError, TaxonomyError) as exc:
        log.warning("curation failed for %s: %s", record.id, exc)
        curation = CurationResult(reasoning=UNPARSEABLE, is_valid=False)
    return replace(record, curation=curation)


def curate_corpus(
    records: list[ProblemRecord],
    provider: TextProvider,
    *,
    concurrency: int = 1,
) -> tuple[list[ProblemRecord], list[ProblemRecord]]:
    """Curate a batch; returns (kept, dropped) preserving input order."""
    if not records:
        return [], []
    if concurrency <= 1:
        curated = [curate_record(r, provider) for r in records]
    else:
        with ThreadPoolExecutor(max_workers=concurrency) as pool:
            curated = list(pool.map(lambda r: curate_record(r, provider), records))
    kept = [r for r in curated if r.curation.is_valid]
    dropped = [r for r in curated if not r.curation.is_valid]
    return kept, dropped
