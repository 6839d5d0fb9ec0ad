"""Command-line entry point: ``sciforge <stage> [flags]``.

Global flags select the config file, seed, concurrency, and cache dir;
each stage subcommand names its input and output manifests. Exit code is 0
only when no per-record failures occurred (or --allow-partial is given).
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

from .config import PipelineConfig, load_config
from .datamodel import load_manifest, write_manifest
from .errors import SciforgeError
from .pipeline import run_stage

log = logging.getLogger(__name__)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sciforge",
        description="Generate and evaluate scientific diagrams from STEM problems.",
    )
    parser.add_argument("--config", type=Path, default=None, help="TOML config file")
    parser.add_argument("--seed", type=int, default=None, help="run seed")
    parser.add_argument("--concurrency", type=int, default=None)
    parser.add_argument("--cache-dir", type=Path, default=None)
    parser.add_argument("--allow-partial", action="store_true")
    parser.add_argument("-v", "--verbose", action="store_true")

    sub = parser.add_subparsers(dest="stage", required=True)

    p = sub.add_parser("curate", help="visualizability filtration + taxonomy")
    p.add_argument("--in", dest="in_path", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--dropped", type=Path, default=None)
    p.add_argument("--provider", required=True)
    p.add_argument("--min-clarity", type=int, default=None)
    p.add_argument("--max-complexity", type=int, default=None)

    p = sub.add_parser("quiz", help="generate quizzes and blind-filter them")
    p.add_argument("--in", dest="in_path", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--provider", required=True)
    p.add_argument("--blind-provider", required=True)
    p.add_argument("--blind-trials", type=int, default=None)

    p = sub.add_parser("select", help="density-based selection per image type")
    p.add_argument("--quizzes", type=Path, required=True)
    p.add_argument("--curated", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--out-quizzes", type=Path, default=None)
    p.add_argument("--k-per-type", type=int, default=None)

    p = sub.add_parser("gen-code", help="plan-then-code figure generation")
    p.add_argument("--in", dest="in_path", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--provider", required=True)

    p = sub.add_parser("gen-pixel", help="pixel-paradigm generation")
    p.add_argument("--in", dest="in_path", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--provider", required=True)

    p = sub.add_parser("judge", help="rubric judging of artifacts")
    p.add_argument("--artifacts", type=Path, nargs="+", required=True)
    p.add_argument("--records", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--provider", required=True)

    p = sub.add_parser("validate", help="inverse quiz validation")
    p.add_argument("--artifacts", type=Path, nargs="+", required=True)
    p.add_argument("--quizzes", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--provider", required=True)

    p = sub.add_parser("metrics", help="PSNR/SSIM/FID/cosine + spectra")
    p.add_argument("--real", type=Path, required=True)
    p.add_argument("--synth", type=Path, nargs="+", required=True)
    p.add_argument("--records", type=Path, default=None)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--summary", type=Path, default=None)
    p.add_argument("--embeddings", type=Path, default=None)
    p.add_argument("--embed-provider", required=True)

    p = sub.add_parser("adapt", help="multimodal adaptation + leak check")
    p.add_argument("--in", dest="in_path", type=Path, required=True)
    p.add_argument("--artifacts", type=Path, nargs="*", default=None)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--train-out", type=Path, default=None)
    p.add_argument("--provider", required=True)

    p = sub.add_parser("report", help="emit report.md / report.csv / by_type.csv")
    p.add_argument("--records", type=Path, required=True)
    p.add_argument("--artifacts", type=Path, nargs="+", required=True)
    p.add_argument("--judged", type=Path, required=True)
    p.add_argument("--outcomes", type=Path, required=True)
    p.add_argument("--metrics", type=Path, default=None)
    p.add_argument("--metrics-summary", type=Path, default=None)
    p.add_argument("--adapted", type=Path, default=None)
    p.add_argument("--out-dir", type=Path, required=True)

    p = sub.add_parser("review-export", help="export review flags to CSV")
    p.add_argument("--records", type=Path, required=True)
    p.add_argument("--quizzes", type=Path, default=None)
    p.add_argument("--out", type=Path, required=True)

    p = sub.add_parser("review-import", help="apply reviewed flags from CSV")
    p.add_argument("--records", type=Path, required=True)
    p.add_argument("--csv", dest="csv_path", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)

    return parser


def _stage_io(args) -> tuple[dict, dict, dict]:
    stage = args.stage
    if stage == "curate":
        return (
            {"in": args.in_path},
            {"out": args.out, "dropped": args.dropped},
            {
                "provider": args.provider,
                "min_clarity": args.min_clarity,
                "max_complexity": args.max_complexity,
            },
        )
    if stage == "quiz":
        options = {"provider": args.provider, "blind_provider": args.blind_provider}
        if args.blind_trials is not None:
            options["blind_trials"] = args.blind_trials
        return {"in": args.in_path}, {"out": args.out}, options
    if stage == "select":
        options = {}
        if args.k_per_type is not None:
            options["k_per_type"] = args.k_per_type
        return (
            {"quizzes": args.quizzes, "curated": args.curated},
            {"out": args.out, "out_quizzes": args.out_quizzes},
            options,
        )
    if stage in ("gen-code", "gen-pixel"):
        return {"in": args.in_path}, {"out": args.out}, {"provider": args.provider}
    if stage == "judge":
        return (
            {"artifacts": args.artifacts, "records": args.records},
            {"out": args.out},
            {"provider": args.provider},
        )
    if stage == "validate":
        return (
            {"artifacts": args.artifacts, "quizzes": args.quizzes},
            {"out": args.out},
            {"provider": args.provider},
        )
    if stage == "metrics":
        return (
            {"real": args.real, "synth": args.synth, "records": args.records},
            {"out": args.out, "summary": args.summary, "embeddings": args.embeddings},
            {"embed_provider": args.embed_provider},
        )
    if stage == "adapt":
        return (
            {"in": args.in_path, "artifacts": args.artifacts},
            {"out": args.out, "train_out": args.train_out},
            {"provider": args.provider},
        )
    if stage == "report":
        return (
            {
                "records": args.records,
                "artifacts": args.artifacts,
                "judged": args.judged,
                "outcomes": args.outcomes,
                "metrics": args.metrics,
                "metrics_summary": args.metrics_summary,
                "adapted": args.adapted,
            },
            {"out_dir": args.out_dir},
            {},
        )
    raise AssertionError(stage)


def _review_export(args) -> int:
    records = load_manifest(args.records, "curated").records
    quiz_counts = {}
    if args.quizzes:
        for quiz_set in load_manifest(args.quizzes, "quizzes").records:
            quiz_counts[quiz_set.problem_id] = quiz_set.valid_count
    with open(args.out, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["problem_id", "subject", "valid_count", "review_flag", "question"])
        for record in records:
            writer.writerow(
                [
                    record.id,
                    record.subject,
                    quiz_counts.get(record.id, ""),
                    record.review_flag,
                    record.question,
                ]
            )
    print(f"review-export: wrote {len(records)} rows to {args.out}")
    return 0


def _review_import(args) -> int:
    from dataclasses import replace

    records = load_manifest(args.records, "curated").records
    flags: dict[str, str] = {}
    with open(args.csv_path, encoding="utf-8", newline="") as fh:
        for row in csv.DictReader(fh):
            flags[row["problem_id"]] = row["review_flag"]
    updated = [
        replace(record, review_flag=flags.get(record.id, record.review_flag))
        for record in records
    ]
    write_manifest(args.out, updated)
    changed = sum(1 for before, after in zip(records, updated) if before != after)
    print(f"review-import: updated {changed} of {len(records)} records -> {args.out}")
    return 0


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        if args.stage == "review-export":
            return _review_export(args)
        if args.stage == "review-import":
            return _review_import(args)

        config = load_config(args.config) if args.config else PipelineConfig()
        if args.seed is not None:
            config.seed = args.seed
        if args.concurrency is not None:
            config.concurrency = args.concurrency
        if args.cache_dir is not None:
            config.cache_dir = str(args.cache_dir)

        in_paths, out_paths, options = _stage_io(args)
        summary = run_stage(args.stage, config, in_paths, out_paths, options=options)
        print(
            f"{summary.stage}: processed={summary.processed} "
            f"succeeded={summary.succeeded} failed={summary.failed} "
            f"wall={summary.wall_time_s:.2f}s extra={summary.extra}"
        )
        if summary.failed > 0 and not args.allow_partial:
            return 1
        return 0
    except SciforgeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
