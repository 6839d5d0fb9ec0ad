from __future__ import annotations

import csv
import json

from sciforge.cli import main
from sciforge.curation import build_curation_prompt
from sciforge.datamodel import append_records, load_manifest
from sciforge.providers import MockTextProvider, TextRequest

from conftest import make_record


def _write_config(tmp_path, script_path) -> str:
    config = tmp_path / "config.toml"
    config.write_text(
        f"""\
cache_dir = "cache"
artifacts_dir = "artifacts"
concurrency = 1

[executor]
kind = "fake"

[[providers]]
id = "curator"
kind = "text"
impl = "mock"
script = "{script_path.name}"
"""
    )
    return str(config)


def _curation_reply(valid: bool) -> str:
    if valid:
        return json.dumps(
            {
                "reasoning": "ok",
                "is_valid": True,
                "primary_category": "Math",
                "secondary_type": "Plane Geometric",
                "scene_clarity_score": 4,
                "visual_complexity_score": 2,
            }
        )
    return json.dumps(
        {
            "reasoning": "not drawable",
            "is_valid": False,
            "primary_category": None,
            "secondary_type": None,
            "scene_clarity_score": None,
            "visual_complexity_score": None,
        }
    )


def test_cli_curate_roundtrip(tmp_path, capsys):
    records = [make_record(question=f"CLI problem {i}.", curated=False) for i in range(3)]
    raw = tmp_path / "raw.jsonl"
    append_records(raw, records)

    # Script file keyed by the provider's cache keys.
    keyer = MockTextProvider("curator")
    script = {
        keyer.cache_key(TextRequest(prompt=build_curation_prompt(r))): _curation_reply(
            i != 1
        )
        for i, r in enumerate(records)
    }
    script_path = tmp_path / "curator_script.json"
    script_path.write_text(json.dumps(script))

    config_path = _write_config(tmp_path, script_path)
    code = main(
        [
            "--config", config_path,
            "curate",
            "--in", str(raw),
            "--out", str(tmp_path / "curated.jsonl"),
            "--dropped", str(tmp_path / "dropped.jsonl"),
            "--provider", "curator",
        ]
    )
    assert code == 0
    out = capsys.readouterr().out
    assert "curate: processed=3" in out
    curated = load_manifest(tmp_path / "curated.jsonl", "curated").records
    assert [r.id for r in curated] == [records[0].id, records[2].id]
    dropped = load_manifest(tmp_path / "dropped.jsonl", "dropped").records
    assert [r.id for r in dropped] == [records[1].id]


def test_cli_exit_codes_respect_allow_partial(tmp_path):
    records = [make_record(question=f"Partial {i}.", curated=False) for i in range(2)]
    raw = tmp_path / "raw.jsonl"
    append_records(raw, records)
    keyer = MockTextProvider("curator")
    # Only the first record is scripted; the second becomes "unparseable".
    script = {
        keyer.cache_key(
            TextRequest(prompt=build_curation_prompt(records[0]))
        ): _curation_reply(True)
    }
    script_path = tmp_path / "curator_script.json"
    script_path.write_text(json.dumps(script))
    config_path = _write_config(tmp_path, script_path)

    argv = [
        "--config", config_path,
        "curate",
        "--in", str(raw),
        "--out", str(tmp_path / "curated.jsonl"),
        "--dropped", str(tmp_path / "dropped.jsonl"),
        "--provider", "curator",
    ]
    assert main(argv) == 1
    assert main(["--allow-partial"] + argv) == 0


def test_cli_missing_dependency_is_error(tmp_path):
    script_path = tmp_path / "curator_script.json"
    script_path.write_text("{}")
    config_path = _write_config(tmp_path, script_path)
    code = main(
        [
            "--config", config_path,
            "curate",
            "--in", str(tmp_path / "missing.jsonl"),
            "--out", str(tmp_path / "curated.jsonl"),
            "--provider", "curator",
        ]
    )
    assert code == 2


def test_cli_gen_code_with_config_built_executor(tmp_path):
    from sciforge.imgcoder import GENERATION_TEMPERATURE, build_imgcoder_prompt

    record = make_record(question="Draw a labeled unit square.")
    selected = tmp_path / "selected.jsonl"
    append_records(selected, [record])

    keyer = MockTextProvider("coder")
    response = (
        "#### **Section 1: Plan**\n\n1. **Image Content** — a square.\n\n"
        "#### **Section 2: Python Code**\n\n```python\ndraw()\n```\n"
    )
    script = {
        keyer.cache_key(
            TextRequest(
                prompt=build_imgcoder_prompt(record),
                temperature=GENERATION_TEMPERATURE,
                variant=0,
            )
        ): response
    }
    script_path = tmp_path / "coder_script.json"
    script_path.write_text(json.dumps(script))

    config = tmp_path / "config.toml"
    config.write_text(
        f"""\
cache_dir = "cache"
artifacts_dir = "artifacts"

[executor]
kind = "fake"

[[providers]]
id = "coder"
kind = "text"
impl = "mock"
script = "{script_path.name}"
"""
    )
    out = tmp_path / "artifacts_code.jsonl"
    code = main(
        [
            "--config", str(config),
            "gen-code",
            "--in", str(selected),
            "--out", str(out),
            "--provider", "coder",
        ]
    )
    assert code == 0
    artifacts = load_manifest(out, "artifacts").records
    assert len(artifacts) == 1
    assert artifacts[0].is_fallback is False
    assert (tmp_path / "artifacts" / "imgcoder" / "coder" / f"{record.id}.png").exists()


def test_cli_review_export_import_roundtrip(tmp_path):
    records = [make_record(question=f"Review {i}.") for i in range(2)]
    curated = tmp_path / "curated.jsonl"
    append_records(curated, records)

    export_csv = tmp_path / "review.csv"
    assert main(
        ["review-export", "--records", str(curated), "--out", str(export_csv)]
    ) == 0
    with open(export_csv, newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert [row["review_flag"] for row in rows] == ["unreviewed", "unreviewed"]

    rows[0]["review_flag"] = "approved"
    rows[1]["review_flag"] = "rejected"
    with open(export_csv, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=rows[0].keys())
        writer.writeheader()
        writer.writerows(rows)

    reviewed = tmp_path / "reviewed.jsonl"
    assert main(
        [
            "review-import",
            "--records", str(curated),
            "--csv", str(export_csv),
            "--out", str(reviewed),
        ]
    ) == 0
    updated = load_manifest(reviewed, "curated").records
    assert [r.review_flag for r in updated] == ["approved", "rejected"]
