from __future__ import annotations

import pytest

from sciforge.errors import NoJsonFound, TemplateError
from sciforge.prompts import (
    extract_json_object,
    load_template,
    render_template,
    split_before_json,
)


def test_unknown_template_rejected():
    with pytest.raises(TemplateError):
        load_template("nope")


def test_unfilled_placeholder_is_template_error():
    with pytest.raises(TemplateError) as err:
        render_template("curation", subject="Physics")
    assert "question" in str(err.value)


def test_substituted_value_is_never_retemplated():
    rendered = render_template("curation", subject="Math", question="Area of {region}?")
    assert "Area of {region}?" in rendered


def test_imgcoder_placeholder_mention_survives_literally():
    rendered = render_template("imgcoder", question="Draw a triangle.")
    assert "(`{question}`)" in rendered
    assert "Draw a triangle." in rendered


def test_extract_json_object_from_prose_and_fences():
    raw = 'Some chatter.\n```json\n{"a": 1, "b": {"c": 2}}\n```\ntrailing'
    assert extract_json_object(raw) == {"a": 1, "b": {"c": 2}}
    raw2 = 'leading {"x": [1, 2]} trailing'
    assert extract_json_object(raw2) == {"x": [1, 2]}


def test_extract_json_object_skips_non_json_braces():
    raw = "set {1, 2} then the object {\"k\": true} follows"
    assert extract_json_object(raw) == {"k": True}


def test_no_json_found():
    with pytest.raises(NoJsonFound):
        extract_json_object("just prose, no object")


def test_split_before_json():
    critique, obj = split_before_json('reasoning text\n{"score": 1}')
    assert critique == "reasoning text"
    assert obj == {"score": 1}
