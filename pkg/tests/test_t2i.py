from __future__ import annotations

import io

import pytest
from PIL import Image

from sciforge.executor import blank_png_bytes
from sciforge.providers import MockImageProvider
from sciforge.t2i import build_t2i_prompt, generate_t2i_image

from conftest import make_record


def test_prompt_carries_constraint_clauses():
    prompt = build_t2i_prompt(make_record())
    assert "The illustration must NOT" in prompt
    assert "textbook-style schematic" in prompt


def test_prompt_rejects_empty_question():
    record = make_record()
    record.question = ""
    with pytest.raises(ValueError):
        build_t2i_prompt(record)


def test_scripted_provider_yields_artifact(tmp_path):
    record = make_record()
    provider = MockImageProvider(size=(48, 48))
    provider.script_prompt(build_t2i_prompt(record))
    artifact = generate_t2i_image(record, provider, artifacts_dir=tmp_path)
    assert artifact.is_fallback is False
    assert artifact.paradigm == "pixel"
    assert artifact.plan is None and artifact.code is None
    assert [a.outcome for a in artifact.attempts] == ["ok"]
    with Image.open(artifact.image_path) as img:
        assert img.size == (48, 48)


def test_all_retries_failing_emits_blank_fallback(tmp_path):
    record = make_record()
    provider = MockImageProvider()  # nothing scripted: every attempt fails
    artifact = generate_t2i_image(record, provider, artifacts_dir=tmp_path)
    assert artifact.is_fallback is True
    assert len(artifact.attempts) == 4
    assert all(a.outcome == "execution_failure" for a in artifact.attempts)
    with open(artifact.image_path, "rb") as fh:
        assert fh.read() == blank_png_bytes()


def test_non_png_bytes_count_as_failed_attempt(tmp_path):
    record = make_record()
    prompt = build_t2i_prompt(record)
    buf = io.BytesIO()
    Image.new("RGB", (8, 8)).save(buf, format="JPEG")
    provider = MockImageProvider()
    provider.script_prompt(prompt, buf.getvalue(), variant=0)
    provider.script_prompt(prompt, variant=1)  # fixture PNG on the retry
    artifact = generate_t2i_image(record, provider, artifacts_dir=tmp_path)
    assert [a.outcome for a in artifact.attempts] == ["execution_failure", "ok"]
    assert "decode" in artifact.attempts[0].detail
