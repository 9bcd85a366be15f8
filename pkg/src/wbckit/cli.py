"""Command-line entry point: split -> assign -> degrade -> evaluate -> leaderboard."""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from pathlib import Path

from . import config as cfg_mod
from .config import PipelineConfig, config_to_dict, dump_config, load_config
from .core import (
    Manifest,
    SplitName,
    ValidationError,
    parse_label,
    parse_manifest,
    parse_split,
    write_manifest,
)
from .evaluate import (
    per_class_summary,
    rank,
    score,
    validate_submission,
    write_leaderboard_csv,
)
from .pipeline import degrade_batch
from .severity import (
    ProtectionPolicy,
    SeverityFractions,
    apply_severity_plan,
    assign_severity,
    severity_histogram,
)
from .splitting import (
    SplitTargets,
    check_disjointness,
    plan_split,
    profiles_from_manifest,
    read_patients_csv,
    read_plan_csv,
    write_plan_csv,
)
from .synth import SynthSpec, default_mixture, generate_dataset

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_IO = 2


def _config_hash(config: PipelineConfig) -> str:
    blob = json.dumps(config_to_dict(config), sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def _log_run(args, config: PipelineConfig) -> None:
    seed = getattr(args, "seed", None)
    print(f"[wbckit] seed={seed} config_hash={_config_hash(config)}", file=sys.stderr)


def _load_pipeline_config(args) -> PipelineConfig:
    if getattr(args, "config", None):
        return load_config(args.config)
    return PipelineConfig()


def _parse_fraction_vector(text: str, n: int) -> list[float]:
    parts = text.split(",")
    if len(parts) != n:
        raise ValidationError(f"expected {n} comma-separated fractions, got {text!r}")
    try:
        return [float(p) for p in parts]
    except ValueError:
        raise ValidationError(f"non-numeric fraction in {text!r}") from None


def cmd_synth(args) -> int:
    config = PipelineConfig()
    _log_run(args, config)
    mixture = default_mixture()
    if args.class_mixture:
        mixture = {}
        for item in args.class_mixture.split(","):
            code, _, value = item.partition("=")
            mixture[parse_label(code.strip())] = float(value)
    spec = SynthSpec(
        n_patients=args.patients,
        n_images=args.images,
        mixture=mixture,
        seed=args.seed,
        side=args.side,
    )
    manifest = generate_dataset(spec, args.out)
    print(f"wrote {len(manifest)} images for {args.patients} patients under {args.out}")
    return EXIT_OK


def cmd_split(args) -> int:
    config = _load_pipeline_config(args)
    _log_run(args, config)
    manifest = None
    if args.patients_csv:
        patients = read_patients_csv(args.patients_csv)
    else:
        manifest = parse_manifest(args.manifest)
        patients = profiles_from_manifest(manifest)
    if args.fractions:
        values = _parse_fraction_vector(args.fractions, 4)
        fractions = dict(zip(SplitName, values))
    else:
        fractions = dict(config.patient_fractions)
    targets = SplitTargets(
        patient_fraction=fractions,
        rarity_exponent=args.rarity_exponent,
        restarts=args.restarts,
    )
    plan = plan_split(patients, targets, args.seed)
    write_plan_csv(plan, args.out)
    if args.stats:
        Path(args.stats).write_text(plan.stats_json() + "\n", encoding="utf-8")
    if manifest is not None:
        report = check_disjointness(plan, manifest)
        for violation in report.violations:
            print(f"violation: {violation}", file=sys.stderr)
        if not report.ok:
            return EXIT_VALIDATION
    sizes = {str(s): n for s, n in plan.split_sizes().items()}
    print(f"split sizes: {sizes} objective={plan.objective_score:.6f}")
    return EXIT_OK


def cmd_assign(args) -> int:
    config = _load_pipeline_config(args)
    _log_run(args, config)
    manifest = parse_manifest(args.manifest)
    if args.plan:
        assignment = read_plan_csv(args.plan)
        try:
            manifest = Manifest(tuple(r.with_split(assignment[r.patient_id]) for r in manifest))
        except KeyError as exc:
            raise ValidationError(f"patient {exc.args[0]!r} missing from split plan") from None
    if not manifest.has_split:
        raise ValidationError("manifest has no split column (pass --plan or tag it first)")

    overrides: dict[SplitName, SeverityFractions] = {}
    for item in args.fractions or []:
        split_token, _, vector = item.partition("=")
        overrides[parse_split(split_token)] = SeverityFractions(
            *_parse_fraction_vector(vector, 4)
        )
    policy = ProtectionPolicy(coverage_threshold=args.coverage_threshold)

    wanted = [parse_split(args.split)] if args.split else list(SplitName)
    tagged = []
    reports = {}
    for split in wanted:
        part = manifest.restrict_to_split(split)
        if len(part) == 0:
            continue
        fractions = overrides.get(split, config.severity_fractions[split])
        plan = assign_severity(part, fractions, policy, args.seed)
        tagged.append(apply_severity_plan(part, plan))
        hist = severity_histogram(plan, part)
        reports[str(split)] = {
            "quotas": {f"{c.value}/{s}": n for (c, s), n in sorted(
                plan.quotas.items(), key=lambda kv: (kv[0][0].value, kv[0][1]))},
            "protected_classes": sorted(c.value for c in plan.protected_classes),
            "histogram": hist.as_dict(),
        }
    by_id = {r.image_id: r for part in tagged for r in part}
    # Manifest order is preserved; with --split only that split is emitted.
    out_records = tuple(by_id[r.image_id] for r in manifest if r.image_id in by_id)
    write_manifest(Manifest(out_records), args.out)
    if args.report:
        Path(args.report).write_text(json.dumps(reports, indent=2) + "\n", encoding="utf-8")
    print(f"assigned severities for {len(by_id)} images -> {args.out}")
    return EXIT_OK


def cmd_degrade(args) -> int:
    config = _load_pipeline_config(args)
    _log_run(args, config)
    manifest = parse_manifest(args.manifest)
    result = degrade_batch(
        manifest, args.images, args.out, config, args.seed, workers=args.workers
    )
    for error in result.errors:
        print(f"error: {error}", file=sys.stderr)
    print(f"degraded {len(result.recipes)} images -> {args.out} "
          f"({len(result.errors)} error(s))")
    return EXIT_OK if result.ok else EXIT_VALIDATION


def cmd_evaluate(args) -> int:
    config = PipelineConfig()
    _log_run(args, config)
    truth = parse_manifest(args.truth)
    pred = validate_submission(args.pred, truth, team=args.team)
    report = score(pred, truth, zero_support_recall=args.zero_support_recall)
    if args.out:
        Path(args.out).write_text(report.to_json() + "\n", encoding="utf-8")
    print(json.dumps(report.to_dict()["macro"], indent=2))
    return EXIT_OK


def cmd_leaderboard(args) -> int:
    config = PipelineConfig()
    _log_run(args, config)
    truth = parse_manifest(args.truth)
    scored = []
    for path in args.pred:
        team = Path(path).stem
        pred = validate_submission(path, truth, team=team)
        scored.append((team, score(pred, truth)))
    rows = rank(scored)
    write_leaderboard_csv(rows, args.out)
    if args.per_class:
        summary = per_class_summary([rep for _, rep in scored])
        with open(args.per_class, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("class,mean_f1,min_f1,max_f1\n")
            for row in summary:
                fh.write(f"{row.label.value},{row.mean_f1:.3f},{row.min_f1:.3f},{row.max_f1:.3f}\n")
    for row in rows:
        print(f"{row.rank:>2} {row.team:<24} macro_f1={row.report.macro_f1:.3f}")
    return EXIT_OK


def cmd_dump_config(args) -> int:
    dump_config(PipelineConfig(), args.out)
    print(f"wrote default config -> {args.out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wbckit",
        description="Robust WBC classification benchmark machinery: patient-level "
                    "splitting, severity assignment, seeded degradation, evaluation.",
    )
    parser.add_argument("--json", action="store_true",
                        help="emit machine-readable JSON errors on stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a deterministic synthetic dataset")
    p.add_argument("--out", required=True)
    p.add_argument("--patients", type=int, required=True)
    p.add_argument("--images", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--side", type=int, default=cfg_mod.DEFAULT_IMAGE_SIDE)
    p.add_argument("--class-mixture", default=None,
                   help='e.g. "SNE=0.6,LY=0.4" (default: long-tailed benchmark mixture)')
    p.set_defaults(fn=cmd_synth)

    p = sub.add_parser("split", help="plan a patient-level group-stratified split")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--patients-csv", help="long-form CSV patient_id,label,count")
    src.add_argument("--manifest", help="aggregate patients from a manifest CSV")
    p.add_argument("--fractions", default=None,
                   help="patient fractions phase1_train,phase2_train,phase2_eval,phase2_test")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--restarts", type=int, default=64)
    p.add_argument("--rarity-exponent", type=float, default=1.0)
    p.add_argument("--out", required=True, help="plan CSV patient_id,split")
    p.add_argument("--stats", default=None, help="JSON stats output")
    p.add_argument("--config", default=None)
    p.set_defaults(fn=cmd_split)

    p = sub.add_parser("assign", help="assign severities per split")
    p.add_argument("--manifest", required=True)
    p.add_argument("--plan", default=None, help="split plan CSV to tag the manifest with")
    p.add_argument("--split", default=None, help="restrict to one split")
    p.add_argument("--fractions", action="append", default=None, metavar="SPLIT=p,m,mo,e",
                   help="override the per-split severity fractions")
    p.add_argument("--coverage-threshold", type=float, default=0.005)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--report", default=None, help="JSON quota report output")
    p.add_argument("--config", default=None)
    p.set_defaults(fn=cmd_assign)

    p = sub.add_parser("degrade", help="apply seeded degradation recipes")
    p.add_argument("--manifest", required=True)
    p.add_argument("--images", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--workers", type=int,
                   default=int(os.environ.get("WBCKIT_WORKERS", "1")))
    p.add_argument("--config", default=None)
    p.set_defaults(fn=cmd_degrade)

    p = sub.add_parser("evaluate", help="score one submission")
    p.add_argument("--truth", required=True)
    p.add_argument("--pred", required=True)
    p.add_argument("--team", default="")
    p.add_argument("--out", default=None, help="JSON report output")
    p.add_argument("--zero-support-recall", choices=["zero", "exclude"], default="zero")
    p.set_defaults(fn=cmd_evaluate)

    p = sub.add_parser("leaderboard", help="rank multiple submissions")
    p.add_argument("--truth", required=True)
    p.add_argument("--pred", nargs="+", required=True)
    p.add_argument("--out", required=True, help="leaderboard CSV output")
    p.add_argument("--per-class", default=None, help="per-class F1 summary CSV")
    p.set_defaults(fn=cmd_leaderboard)

    p = sub.add_parser("dump-config", help="write the default config JSON")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_dump_config)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ValidationError as exc:
        _report_error(args, "validation", exc)
        return EXIT_VALIDATION
    except OSError as exc:
        _report_error(args, "io", exc)
        return EXIT_IO


def _report_error(args, kind: str, exc: Exception) -> None:
    if getattr(args, "json", False):
        print(json.dumps({"error": {"kind": kind, "message": str(exc)}}), file=sys.stderr)
    else:
        print(f"error ({kind}): {exc}", file=sys.stderr)


if __name__ == "__main__":
    sys.exit(main())
