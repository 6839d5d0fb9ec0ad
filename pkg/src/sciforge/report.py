"""Report emission: per-model results, per-subject breakdown, per-type CSV.

Everything is a pure function of the input manifests: rows sort by
(paradigm, model id), subjects follow the fixed order Math, Physics,
Chemistry, Biology, Universal, and floats print at two decimals, so two
emissions from the same files are byte-identical.
"""

from __future__ import annotations

import csv
import io
from collections import defaultdict
from pathlib import Path

from .adaptation import is_noop_adaptation
from .datamodel import (
    JUDGE_DIMENSIONS,
    JudgeRecord,
    MetricRecord,
    ProblemRecord,
    RenderArtifact,
    ValidationOutcome,
)
from .errors import JoinError
from .inverseval import compute_rinv
from .judge import mean_judge_score

SUBJECT_ORDER = ("Math", "Physics", "Chemistry", "Biology", "Universal")

DIMENSION_LABELS = {
    "correctness_fidelity": "C&F",
    "layout_precision": "L&P",
    "readability_occlusion": "R&O",
    "scientific_plausibility": "SP",
    "expressiveness_richness": "E&R",
}


def _fmt(value: float | None, *, percent: bool = False) -> str:
    if value is None:
        return "-"
    return f"{value * 100:.2f}" if percent else f"{value:.2f}"


def _model_key(artifact: RenderArtifact) -> tuple[str, str]:
    return (artifact.paradigm, artifact.provider_id)


def _mean(values: list[float]) -> float | None:
    return sum(values) / len(values) if values else None


def emit_report(
    *,
    records: list[ProblemRecord],
    artifacts: list[RenderArtifact],
    judged: list[JudgeRecord],
    outcomes: list[ValidationOutcome],
    metric_rows: list[MetricRecord] | None = None,
    metrics_summary: dict | None = None,
    adapted: list[ProblemRecord] | None = None,
    out_dir: str | Path,
) -> dict[str, Path]:
    """Write report.md, report.csv and by_type.csv; returns their paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    record_by_id = {r.id: r for r in records}
    artifact_by_id = {a.artifact_id: a for a in artifacts}

    def curated_subject(problem_id: str) -> str:
        record = record_by_id.get(problem_id)
        if record is None:
            raise JoinError(problem_id, f"problem {problem_id!r} not in records manifest")
        if record.curation is not None and record.curation.primary_category:
            return record.curation.primary_category
        return record.subject

    def image_type(problem_id: str) -> str:
        record = record_by_id.get(problem_id)
        if record is None:
            raise JoinError(problem_id, f"problem {problem_id!r} not in records manifest")
        if record.curation is None or record.curation.secondary_type is None:
            raise JoinError(problem_id, f"problem {problem_id!r} has no image type")
        return record.curation.secondary_type

    def artifact_for(artifact_id: str) -> RenderArtifact:
        artifact = artifact_by_id.get(artifact_id)
        if artifact is None:
            raise JoinError(artifact_id, f"artifact {artifact_id!r} not in manifests")
        return artifact

    outcomes_by_model: dict[tuple, list[ValidationOutcome]] = defaultdict(list)
    for outcome in outcomes:
        outcomes_by_model[_model_key(artifact_for(outcome.artifact_id))].append(outcome)

    judged_by_model: dict[tuple, list[JudgeRecord]] = defaultdict(list)
    for row in judged:
        judged_by_model[_model_key(artifact_for(row.artifact_id))].append(row)

    metrics_by_model: dict[tuple, list[MetricRecord]] = defaultdict(list)
    for row in metric_rows or []:
        metrics_by_model[_model_key(artifact_for(row.artifact_id))].append(row)

    summary_by_model = (metrics_summary or {}).get("by_model", {})
    models = sorted(
        set(outcomes_by_model) | set(judged_by_model) | set(metrics_by_model)
    )

    def model_row(model: tuple) -> dict:
        paradigm, provider_id = model
        model_outcomes = outcomes_by_model.get(model, [])
        scored = [j.scores for j in judged_by_model.get(model, []) if j.scores]
        unjudged = sum(1 for j in judged_by_model.get(model, []) if j.scores is None)
        mrows = metrics_by_model.get(model, [])
        side = summary_by_model.get(f"{paradigm}:{provider_id}", {})
        row = {
            "paradigm": paradigm,
            "model": provider_id,
            "n": len(model_outcomes),
            "rinv": compute_rinv(model_outcomes) if model_outcomes else None,
            "judge": _mean([mean_judge_score(s) for s in scored]),
            "unjudged": unjudged,
            "psnr": _mean([m.psnr for m in mrows if m.psnr is not None]),
            "ssim": _mean([m.ssim for m in mrows if m.ssim is not None]),
            "clip": _mean([m.cosine for m in mrows if m.cosine is not None]),
            "fid": side.get("fid"),
            "high_band_delta": side.get("high_band_delta"),
        }
        for name in JUDGE_DIMENSIONS:
            row[name] = _mean([float(getattr(s, name)) for s in scored])
        return row

    rows = [model_row(m) for m in models]

    # per-subject and per-type groupings
    def grouped_rates(key_fn) -> dict[tuple, dict[str, tuple]]:
        table: dict[tuple, dict[str, list]] = defaultdict(lambda: defaultdict(lambda: [[], []]))
        for model, model_outcomes in outcomes_by_model.items():
            for outcome in model_outcomes:
                table[model][key_fn(outcome.problem_id)][0].append(outcome)
        for model, model_judged in judged_by_model.items():
            for row in model_judged:
                if row.scores is not None:
                    table[model][key_fn(row.problem_id)][1].append(row.scores)
        out: dict[tuple, dict[str, tuple]] = {}
        for model, groups in table.items():
            out[model] = {}
            for group, (grp_outcomes, grp_scores) in groups.items():
                rate = compute_rinv(grp_outcomes) if grp_outcomes else None
                judge = _mean([mean_judge_score(s) for s in grp_scores])
                out[model][group] = (rate, judge, len(grp_outcomes))
        return out

    by_subject = grouped_rates(curated_subject)
    by_type = grouped_rates(image_type)

    noop_count = sum(
        1
        for record in (adapted or [])
        if record.adapted is not None and is_noop_adaptation(record.adapted)
    )

    paths = {
        "report_md": out_dir / "report.md",
        "report_csv": out_dir / "report.csv",
        "by_type_csv": out_dir / "by_type.csv",
    }
    _write_markdown(
        paths["report_md"], rows, by_subject, metrics_summary, noop_count,
        adapted_total=len(adapted or []),
    )
    _write_report_csv(paths["report_csv"], rows)
    _write_by_type_csv(paths["by_type_csv"], by_type)
    return paths


def _write_markdown(
    path: Path,
    rows: list[dict],
    by_subject: dict[tuple, dict[str, tuple]],
    metrics_summary: dict | None,
    noop_count: int,
    adapted_total: int,
) -> None:
    buf = io.StringIO()
    buf.write("# Evaluation Report\n\n")
    if metrics_summary:
        embedder = metrics_summary.get("embed_provider", "-")
        size = metrics_summary.get("analysis_size", "-")
        note = metrics_summary.get("preprocessing", "-")
        buf.write(
            f"Embedding provider: `{embedder}` | spectrum analysis size: {size} | "
            f"preprocessing: {note}\n\n"
        )

    buf.write("## Overall results\n\n")
    dims = [DIMENSION_LABELS[name] for name in JUDGE_DIMENSIONS]
    header = (
        ["Paradigm", "Model", "n", "R_inv (%)"]
        + dims
        + ["Judge", "PSNR", "SSIM", "CLIP", "FID", "Unjudged"]
    )
    buf.write("| " + " | ".join(header) + " |\n")
    buf.write("|" + "---|" * len(header) + "\n")
    for row in rows:
        cells = [
            row["paradigm"],
            row["model"],
            str(row["n"]),
            _fmt(row["rinv"], percent=True),
        ]
        cells += [_fmt(row[name]) for name in JUDGE_DIMENSIONS]
        cells += [
            _fmt(row["judge"]),
            _fmt(row["psnr"]),
            _fmt(row["ssim"]),
            _fmt(row["clip"]),
            _fmt(row["fid"]),
            str(row["unjudged"]),
        ]
        buf.write("| " + " | ".join(cells) + " |\n")

    buf.write(
        "\nJudge is the mean over judged artifacts of their five-dimension "
        "mean; because unjudged artifacts are excluded from every mean (count "
        "in the last column), this equals the mean of the per-dimension "
        "columns.\n"
    )

    buf.write("\n## Breakdown by subject\n\n")
    sub_header = ["Paradigm", "Model"]
    for subject in SUBJECT_ORDER:
        sub_header += [f"{subject} R_inv (%)", f"{subject} Judge"]
    buf.write("| " + " | ".join(sub_header) + " |\n")
    buf.write("|" + "---|" * len(sub_header) + "\n")
    models = sorted(by_subject)
    for model in models:
        paradigm, provider_id = model
        cells = [paradigm, provider_id]
        for subject in SUBJECT_ORDER:
            rate, judge, _ = by_subject[model].get(subject, (None, None, 0))
            cells += [_fmt(rate, percent=True), _fmt(judge)]
        buf.write("| " + " | ".join(cells) + " |\n")
    if models:
        cells = ["-", "Average"]
        for subject in SUBJECT_ORDER:
            rates = [
                by_subject[m][subject][0]
                for m in models
                if subject in by_subject[m] and by_subject[m][subject][0] is not None
            ]
            judges = [
                by_subject[m][subject][1]
                for m in models
                if subject in by_subject[m] and by_subject[m][subject][1] is not None
            ]
            cells += [_fmt(_mean(rates), percent=True), _fmt(_mean(judges))]
        buf.write("| " + " | ".join(cells) + " |\n")

    if adapted_total:
        buf.write(
            f"\n## Adaptation\n\nAdapted records: {adapted_total}; "
            f"no-op adaptations: {noop_count}\n"
        )
    path.write_text(buf.getvalue(), encoding="utf-8")


def _write_report_csv(path: Path, rows: list[dict]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["paradigm", "model", "n", "rinv_pct"]
            + list(JUDGE_DIMENSIONS)
            + ["judge_mean", "psnr", "ssim", "clip", "fid", "unjudged"]
        )
        for row in rows:
            writer.writerow(
                [
                    row["paradigm"],
                    row["model"],
                    row["n"],
                    _fmt(row["rinv"], percent=True),
                ]
                + [_fmt(row[name]) for name in JUDGE_DIMENSIONS]
                + [
                    _fmt(row["judge"]),
                    _fmt(row["psnr"]),
                    _fmt(row["ssim"]),
                    _fmt(row["clip"]),
                    _fmt(row["fid"]),
                    row["unjudged"],
                ]
            )


def _write_by_type_csv(path: Path, by_type: dict[tuple, dict[str, tuple]]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["paradigm", "model", "image_type", "rinv_pct", "judge_mean", "n"])
        for model in sorted(by_type):
            paradigm, provider_id = model
            for image_type in sorted(by_type[model]):
                rate, judge, n = by_type[model][image_type]
                writer.writerow(
                    [
                        paradigm,
                        provider_id,
                        image_type,
                        _fmt(rate, percent=True),
                        _fmt(judge),
                        n,
                    ]
                )
