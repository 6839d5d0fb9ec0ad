"""Stage orchestration over the manifest DAG.

curate -> quiz -> select -> gen-code/gen-pixel -> judge / validate /
metrics / adapt -> report. Each stage reads upstream manifests, fans out
per record, and rewrites its output manifests whole, so a rerun with the
same inputs and a warm cache is idempotent. Providers and the executor can
be injected for tests; otherwise they are built from config.
"""

from __future__ import annotations

import json
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Iterable

from . import adaptation, curation, imgcoder, inverseval, judge as judge_mod, quizgen, t2i
from .config import PipelineConfig, build_executor, build_providers
from .datamodel import (
    MetricRecord,
    ProblemRecord,
    RenderArtifact,
    TrainSample,
    load_manifest,
    write_manifest,
)
from .errors import (
    ConfigError,
    DependencyError,
    EmptyQuizError,
    JoinError,
    NoJsonFound,
    SchemaError,
    TooFewSamples,
    TransportError,
)
from .metrics import (
    GrayImage,
    cosine_score,
    export_embeddings,
    fid,
    psnr,
    resize_bilinear,
    spectrum_delta,
    ssim,
)
from .providers import ResponseCache
from .report import emit_report

log = logging.getLogger(__name__)

# stage -> {input key: upstream stage that produces it}
STAGE_DEPS: dict[str, dict[str, str]] = {
    "curate": {"in": "(source corpus)"},
    "quiz": {"in": "curate"},
    "select": {"quizzes": "quiz", "curated": "curate"},
    "gen-code": {"in": "select"},
    "gen-pixel": {"in": "select"},
    "judge": {"artifacts": "gen-code/gen-pixel", "records": "select"},
    "validate": {"artifacts": "gen-code/gen-pixel", "quizzes": "quiz"},
    "metrics": {"real": "(reference manifest)", "synth": "gen-code/gen-pixel"},
    "adapt": {"in": "select"},
    "report": {
        "records": "curate",
        "artifacts": "gen-code/gen-pixel",
        "judged": "judge",
        "outcomes": "validate",
    },
}


@dataclass
class StageSummary:
    stage: str
    processed: int
    succeeded: int
    failed: int
    wall_time_s: float
    extra: dict = field(default_factory=dict)


def _check_dependencies(stage: str, in_paths: dict) -> None:
    deps = STAGE_DEPS.get(stage, {})
    for key, paths in in_paths.items():
        for path in paths if isinstance(paths, (list, tuple)) else [paths]:
            if path is not None and not Path(path).exists():
                upstream = deps.get(key, "(unknown)")
                raise DependencyError(
                    f"stage {stage!r} input {key!r} missing: {path} "
                    f"(produced by upstream stage {upstream})"
                )


def _fan_out(items: Iterable, fn: Callable, concurrency: int) -> list:
    items = list(items)
    if concurrency <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=concurrency) as pool:
        return list(pool.map(fn, items))


def _need_provider(providers: dict, provider_id: str | None, purpose: str):
    if not provider_id:
        raise ConfigError(f"no provider configured for {purpose}")
    if provider_id not in providers:
        raise ConfigError(f"unknown provider id {provider_id!r} for {purpose}")
    return providers[provider_id]


def _load_records(paths: Path | list[Path], stage: str) -> list:
    records = []
    for path in paths if isinstance(paths, (list, tuple)) else [paths]:
        records.extend(load_manifest(path, stage).records)
    return records


def run_stage(
    stage_name: str,
    config: PipelineConfig,
    in_paths: dict,
    out_paths: dict,
    *,
    providers: dict | None = None,
    executor=None,
    options: dict | None = None,
) -> StageSummary:
    """Run one pipeline stage; see STAGE_DEPS for the declared DAG."""
    options = dict(options or {})
    _check_dependencies(stage_name, in_paths)
    if providers is None:
        cache = ResponseCache(config.resolve(config.cache_dir))
        providers = build_providers(config, cache)
    if executor is None and stage_name == "gen-code":
        executor = build_executor(config)

    runners = {
        "curate": _stage_curate,
        "quiz": _stage_quiz,
        "select": _stage_select,
        "gen-code": _stage_gen_code,
        "gen-pixel": _stage_gen_pixel,
        "judge": _stage_judge,
        "validate": _stage_validate,
        "metrics": _stage_metrics,
        "adapt": _stage_adapt,
        "report": _stage_report,
    }
    if stage_name not in runners:
        raise ConfigError(f"unknown stage {stage_name!r}")
    start = time.perf_counter()
    processed, succeeded, failed, extra = runners[stage_name](
        config, providers, executor, in_paths, out_paths, options
    )
    summary = StageSummary(
        stage=stage_name,
        processed=processed,
        succeeded=succeeded,
        failed=failed,
        wall_time_s=time.perf_counter() - start,
        extra=extra,
    )
    log.info(
        "stage %s: processed=%d succeeded=%d failed=%d (%.2fs)",
        stage_name, processed, succeeded, failed, summary.wall_time_s,
    )
    return summary


# --- stage implementations --------------------------------------------------


def _stage_curate(config, providers, executor, in_paths, out_paths, options):
    provider = _need_provider(providers, options.get("provider"), "curation")
    records = _load_records(in_paths["in"], "raw")
    kept, dropped = curation.curate_corpus(
        records, provider, concurrency=config.concurrency
    )
    min_clarity = options.get("min_clarity")
    max_complexity = options.get("max_complexity")
    if min_clarity is not None:
        filtered = [r for r in kept if r.curation.scene_clarity_score < min_clarity]
        kept = [r for r in kept if r.curation.scene_clarity_score >= min_clarity]
        dropped.extend(filtered)
    if max_complexity is not None:
        filtered = [r for r in kept if r.curation.visual_complexity_score > max_complexity]
        kept = [r for r in kept if r.curation.visual_complexity_score <= max_complexity]
        dropped.extend(filtered)
    write_manifest(out_paths["out"], kept)
    if out_paths.get("dropped"):
        write_manifest(out_paths["dropped"], dropped)
    unparseable = sum(
        1 for r in dropped if r.curation.reasoning == curation.UNPARSEABLE
    )
    return (
        len(records),
        len(records) - unparseable,
        unparseable,
        {"kept": len(kept), "dropped": len(dropped)},
    )


def _stage_quiz(config, providers, executor, in_paths, out_paths, options):
    provider = _need_provider(providers, options.get("provider"), "quiz generation")
    blind = _need_provider(
        providers, options.get("blind_provider"), "blind filtration"
    )
    trials = int(options.get("blind_trials", config.blind_trials))
    records = _load_records(in_paths["in"], "curated")

    def one(record: ProblemRecord):
        try:
            quiz_set = quizgen.generate_quiz_set(record, provider)
        except (TransportError, NoJsonFound, SchemaError, EmptyQuizError) as exc:
            log.warning("quiz generation failed for %s: %s", record.id, exc)
            return None
        return quizgen.blind_filter_set(quiz_set, blind, trials)

    results = _fan_out(records, one, config.concurrency)
    quiz_sets = [qs for qs in results if qs is not None]
    write_manifest(out_paths["out"], quiz_sets)
    failed = len(records) - len(quiz_sets)
    return len(records), len(quiz_sets), failed, {"quiz_sets": len(quiz_sets)}


def _stage_select(config, providers, executor, in_paths, out_paths, options):
    quiz_sets = _load_records(in_paths["quizzes"], "quizzes")
    curated = _load_records(in_paths["curated"], "curated")
    record_by_id = {r.id: r for r in curated}
    taxonomy_of = {
        r.id: r.curation.secondary_type
        for r in curated
        if r.curation is not None and r.curation.secondary_type
    }
    k = int(options.get("k_per_type", config.k_per_type))
    selected_sets = quizgen.select_by_density(quiz_sets, taxonomy_of, k)
    selected_records = []
    for quiz_set in selected_sets:
        record = record_by_id.get(quiz_set.problem_id)
        if record is None:
            raise JoinError(quiz_set.problem_id)
        selected_records.append(record)
    write_manifest(out_paths["out"], selected_records)
    if out_paths.get("out_quizzes"):
        write_manifest(out_paths["out_quizzes"], selected_sets)
    return len(quiz_sets), len(selected_sets), 0, {"selected": len(selected_sets)}


def _stage_gen_code(config, providers, executor, in_paths, out_paths, options):
    provider = _need_provider(providers, options.get("provider"), "code generation")
    records = _load_records(in_paths["in"], "selected")
    artifacts_dir = config.resolve(config.artifacts_dir)
    timeout_s = config.executor.timeout_s

    def one(record: ProblemRecord) -> RenderArtifact:
        return imgcoder.generate_figure(
            record, provider, executor,
            artifacts_dir=artifacts_dir, timeout_s=timeout_s,
        )

    artifacts = _fan_out(records, one, config.concurrency)
    write_manifest(out_paths["out"], artifacts)
    fallbacks = sum(1 for a in artifacts if a.is_fallback)
    return len(records), len(artifacts), 0, {"fallbacks": fallbacks}


def _stage_gen_pixel(config, providers, executor, in_paths, out_paths, options):
    provider = _need_provider(providers, options.get("provider"), "image generation")
    records = _load_records(in_paths["in"], "selected")
    artifacts_dir = config.resolve(config.artifacts_dir)

    def one(record: ProblemRecord) -> RenderArtifact:
        return t2i.generate_t2i_image(record, provider, artifacts_dir=artifacts_dir)

    artifacts = _fan_out(records, one, config.concurrency)
    write_manifest(out_paths["out"], artifacts)
    fallbacks = sum(1 for a in artifacts if a.is_fallback)
    return len(records), len(artifacts), 0, {"fallbacks": fallbacks}


def _stage_judge(config, providers, executor, in_paths, out_paths, options):
    provider = _need_provider(providers, options.get("provider"), "judging")
    artifacts = _load_records(in_paths["artifacts"], "artifacts")
    records = _load_records(in_paths["records"], "selected")
    record_by_id = {r.id: r for r in records}

    def one(artifact: RenderArtifact):
        record = record_by_id.get(artifact.problem_id)
        if record is None:
            raise JoinError(artifact.problem_id)
        return judge_mod.judge_artifact(artifact, record, provider)

    judged = _fan_out(artifacts, one, config.concurrency)
    write_manifest(out_paths["out"], judged)
    unjudged = sum(1 for j in judged if j.scores is None)
    return len(artifacts), len(judged) - unjudged, 0, {"unjudged": unjudged}


def _stage_validate(config, providers, executor, in_paths, out_paths, options):
    provider = _need_provider(providers, options.get("provider"), "inverse validation")
    artifacts = _load_records(in_paths["artifacts"], "artifacts")
    quiz_sets = _load_records(in_paths["quizzes"], "quizzes")
    quiz_by_id = {qs.problem_id: qs for qs in quiz_sets}

    def one(artifact: RenderArtifact):
        quiz_set = quiz_by_id.get(artifact.problem_id)
        if quiz_set is None:
            raise JoinError(artifact.problem_id)
        return inverseval.validate_image_quizzes(artifact, quiz_set, provider)

    outcomes = _fan_out(artifacts, one, config.concurrency)
    write_manifest(out_paths["out"], outcomes)
    passed = sum(1 for o in outcomes if o.all_correct)
    return len(artifacts), len(outcomes), 0, {"all_correct": passed}


def _stage_metrics(config, providers, executor, in_paths, out_paths, options):
    embedder = _need_provider(providers, options.get("embed_provider"), "embedding")
    references = _load_records(in_paths["real"], "references")
    artifacts = _load_records(in_paths["synth"], "artifacts")
    records = (
        _load_records(in_paths["records"], "selected")
        if in_paths.get("records")
        else []
    )
    question_by_id = {r.id: r.question for r in records}
    ref_by_id = {ref.problem_id: ref for ref in references}

    rows: list[MetricRecord] = []
    for artifact in artifacts:
        ref = ref_by_id.get(artifact.problem_id)
        row = MetricRecord(
            problem_id=artifact.problem_id, artifact_id=artifact.artifact_id
        )
        if ref is not None:
            real_img = GrayImage.from_png(ref.image_path)
            synth_img = GrayImage.from_png(artifact.image_path)
            synth_img = resize_bilinear(synth_img, real_img.width, real_img.height)
            row.psnr = psnr(real_img, synth_img)
            row.ssim = ssim(real_img, synth_img)
        question = question_by_id.get(artifact.problem_id)
        if question:
            row.cosine = cosine_score(
                Path(artifact.image_path), question, embedder
            )
        rows.append(row)
    write_manifest(out_paths["out"], rows)

    by_model: dict[str, dict] = {}
    real_paths = [Path(ref.image_path) for ref in references]
    real_grays = [GrayImage.from_png(p) for p in real_paths]
    model_groups: dict[tuple, list[RenderArtifact]] = {}
    for artifact in artifacts:
        model_groups.setdefault((artifact.paradigm, artifact.provider_id), []).append(
            artifact
        )
    for (paradigm, provider_id), group in sorted(model_groups.items()):
        side: dict[str, float] = {}
        synth_paths = [Path(a.image_path) for a in group]
        try:
            side["fid"] = fid(real_paths, synth_paths, embedder)
        except TooFewSamples as exc:
            log.warning("fid skipped for %s:%s: %s", paradigm, provider_id, exc)
        if real_grays:
            synth_grays = [GrayImage.from_png(p) for p in synth_paths]
            delta = spectrum_delta(
                real_grays, synth_grays, analysis_size=config.analysis_size
            )
            side["high_band_delta"] = delta.high_band_mean
        by_model[f"{paradigm}:{provider_id}"] = side

    summary = {
        "embed_provider": embedder.provider_id,
        "analysis_size": config.analysis_size,
        "preprocessing": "raw PNG bytes embedded; images resized bilinear for spectra",
        "by_model": by_model,
    }
    if out_paths.get("summary"):
        Path(out_paths["summary"]).write_text(
            json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
    if out_paths.get("embeddings"):
        image_sets = {"real": [(ref.problem_id, Path(ref.image_path)) for ref in references]}
        for (paradigm, provider_id), group in sorted(model_groups.items()):
            image_sets[f"{paradigm}:{provider_id}"] = [
                (a.problem_id, Path(a.image_path)) for a in group
            ]
        export_embeddings(image_sets, embedder, out_paths["embeddings"])
    return len(artifacts), len(rows), 0, {"models": len(by_model)}


def _stage_adapt(config, providers, executor, in_paths, out_paths, options):
    provider = _need_provider(providers, options.get("provider"), "adaptation")
    records = _load_records(in_paths["in"], "selected")
    artifacts = (
        _load_records(in_paths["artifacts"], "artifacts")
        if in_paths.get("artifacts")
        else []
    )
    image_by_problem: dict[str, str] = {}
    for artifact in sorted(artifacts, key=lambda a: a.artifact_id):
        image_by_problem.setdefault(artifact.problem_id, artifact.image_path)

    def one(record: ProblemRecord):
        try:
            result = adaptation.adapt_record(record, provider)
        except (TransportError, NoJsonFound, SchemaError) as exc:
            log.warning("adaptation failed for %s: %s", record.id, exc)
            return None
        return replace(record, adapted=result)

    results = _fan_out(records, one, config.concurrency)
    adapted = [r for r in results if r is not None]
    write_manifest(out_paths["out"], adapted)

    leaky = 0
    train_rows: list[TrainSample] = []
    for record in adapted:
        leaks = adaptation.verify_leak_free(record.adapted)
        if leaks:
            leaky += 1
            log.warning("leak check failed for %s: %s", record.id, leaks)
            continue
        image_path = image_by_problem.get(record.id)
        if image_path is None:
            continue
        train_rows.append(
            TrainSample(
                problem_id=record.id,
                question=record.adapted.multimodal_question,
                image_path=image_path,
                hidden_parameters=list(record.adapted.hidden_parameters),
            )
        )
    if out_paths.get("train_out"):
        write_manifest(out_paths["train_out"], train_rows)
    failed = len(records) - len(adapted)
    return (
        len(records),
        len(adapted),
        failed,
        {"leaky": leaky, "train_ready": len(train_rows)},
    )


def _stage_report(config, providers, executor, in_paths, out_paths, options):
    records = _load_records(in_paths["records"], "curated")
    artifacts = _load_records(in_paths["artifacts"], "artifacts")
    judged = _load_records(in_paths["judged"], "judged")
    outcomes = _load_records(in_paths["outcomes"], "outcomes")
    metric_rows = (
        _load_records(in_paths["metrics"], "metrics")
        if in_paths.get("metrics")
        else None
    )
    metrics_summary = None
    if in_paths.get("metrics_summary"):
        metrics_summary = json.loads(
            Path(in_paths["metrics_summary"]).read_text("utf-8")
        )
    adapted = (
        _load_records(in_paths["adapted"], "adapted")
        if in_paths.get("adapted")
        else None
    )
    paths = emit_report(
        records=records,
        artifacts=artifacts,
        judged=judged,
        outcomes=outcomes,
        metric_rows=metric_rows,
        metrics_summary=metrics_summary,
        adapted=adapted,
        out_dir=out_paths["out_dir"],
    )
    return len(outcomes), len(paths), 0, {str(k): str(v) for k, v in paths.items()}
