"""Challenge scoring: per-class metrics, macro aggregates, ranking and reports.

All metrics derive from exact integer confusion counts; macro averages always
run over all 13 classes with the zero-division-means-zero convention, so a
model that never predicts a rare class is fully penalized.
"""

from __future__ import annotations

import csv
import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .core import CLASS_CODES, ClassLabel, Manifest, ValidationError, parse_label

N_CLASSES = len(CLASS_CODES)


class SubmissionError(ValidationError):
    """Raised for any defect in a submission file; carries every issue found."""

    def __init__(self, path, issues: list[str]):
        self.issues = list(issues)
        super().__init__(f"{path}: invalid submission ({len(issues)} issue(s)):\n" +
                         "\n".join(f"  - {i}" for i in self.issues))


@dataclass(frozen=True)
class PredictionSet:
    entries: dict[str, ClassLabel]
    team: str = ""
    timestamp: Optional[str] = None


def validate_submission(path, truth: Manifest, team: str = "") -> PredictionSet:
    """Parse and strictly validate a submission CSV against the ground truth.

    Fail-closed: unknown/duplicate/missing ids, bad labels and malformed rows
    are all collected with line numbers and reported together.
    """
    path = Path(path)
    truth_ids = set(truth.image_ids())
    issues: list[str] = []
    entries: dict[str, ClassLabel] = {}
    first_line: dict[str, int] = {}
    with path.open("r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["image_id", "label"]:
            raise SubmissionError(path, [f"line 1: expected header image_id,label, got {header}"])
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2:
                issues.append(f"line {lineno}: expected 2 fields, got {len(row)}")
                continue
            image_id, token = row
            if image_id in first_line:
                issues.append(
                    f"line {lineno}: duplicate image_id {image_id!r} "
                    f"(first seen on line {first_line[image_id]})"
                )
                continue
            first_line[image_id] = lineno
            if image_id not in truth_ids:
                issues.append(f"line {lineno}: unknown image_id {image_id!r}")
                continue
            try:
                entries[image_id] = parse_label(token)
            except ValidationError:
                issues.append(f"line {lineno}: invalid label {token!r}")
    missing = sorted(truth_ids - set(first_line))
    if missing:
        shown = ", ".join(missing[:10]) + (", ..." if len(missing) > 10 else "")
        issues.append(f"missing prediction(s) for {len(missing)} image_id(s): {shown}")
    if issues:
        raise SubmissionError(path, issues)
    return PredictionSet(entries=entries, team=team)


@dataclass(frozen=True)
class ClassMetrics:
    support: int
    precision: float
    recall: float
    f1: float
    specificity: float


@dataclass(frozen=True)
class EvalReport:
    confusion: np.ndarray  # rows = true class, columns = predicted class
    per_class: dict[ClassLabel, ClassMetrics]
    macro_f1: float
    balanced_accuracy: float
    macro_precision: float
    macro_specificity: float

    @property
    def ranking_tuple(self) -> tuple[float, float, float, float]:
        return (self.macro_f1, self.balanced_accuracy,
                self.macro_precision, self.macro_specificity)

    def to_dict(self) -> dict:
        return {
            "per_class": {
                cls.value: {
                    "support": m.support,
                    "precision": m.precision,
                    "recall": m.recall,
                    "f1": m.f1,
                    "specificity": m.specificity,
                }
                for cls, m in self.per_class.items()
            },
            "macro": {
                "macro_f1": self.macro_f1,
                "balanced_accuracy": self.balanced_accuracy,
                "macro_precision": self.macro_precision,
                "macro_specificity": self.macro_specificity,
            },
            "confusion": self.confusion.tolist(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def confusion_matrix(pred: PredictionSet, truth: Manifest) -> np.ndarray:
    index = {cls: i for i, cls in enumerate(ClassLabel)}
    counts = np.zeros((N_CLASSES, N_CLASSES), dtype=np.int64)
    for r in truth:
        counts[index[r.label], index[pred.entries[r.image_id]]] += 1
    return counts


def score(pred: PredictionSet, truth: Manifest,
          zero_support_recall: str = "zero") -> EvalReport:
    """Compute the full evaluation report.

    `zero_support_recall` controls balanced accuracy when a class has no
    ground-truth images: "zero" counts its recall as 0 in the mean (default),
    "exclude" averages over supported classes only.
    """
    if zero_support_recall not in ("zero", "exclude"):
        raise ValidationError(f"unknown zero_support_recall mode {zero_support_recall!r}")
    cm = confusion_matrix(pred, truth)
    total = cm.sum()
    tp = np.diag(cm).astype(np.float64)
    support = cm.sum(axis=1).astype(np.float64)
    predicted = cm.sum(axis=0).astype(np.float64)
    fp = predicted - tp
    fn = support - tp
    tn = total - tp - fp - fn

    precision = _safe_div(tp, tp + fp)
    recall = _safe_div(tp, tp + fn)
    f1 = _safe_div(2 * precision * recall, precision + recall)
    specificity = _safe_div(tn, tn + fp)

    if np.any(support == 0):
        absent = [CLASS_CODES[i] for i in np.flatnonzero(support == 0)]
        warnings.warn(f"classes with zero support in ground truth: {absent}")

    if zero_support_recall == "exclude" and np.any(support > 0):
        balanced_accuracy = float(recall[support > 0].mean())
    else:
        balanced_accuracy = float(recall.mean())

    per_class = {
        cls: ClassMetrics(
            support=int(support[i]),
            precision=float(precision[i]),
            recall=float(recall[i]),
            f1=float(f1[i]),
            specificity=float(specificity[i]),
        )
        for i, cls in enumerate(ClassLabel)
    }
    return EvalReport(
        confusion=cm,
        per_class=per_class,
        macro_f1=float(f1.mean()),
        balanced_accuracy=balanced_accuracy,
        macro_precision=float(precision.mean()),
        macro_specificity=float(specificity.mean()),
    )


def _safe_div(num, den):
    return np.divide(num, den, out=np.zeros_like(num, dtype=np.float64), where=den > 0)


@dataclass(frozen=True)
class LeaderboardRow:
    rank: int
    team: str
    report: EvalReport


def rank(reports: list[tuple[str, EvalReport]]) -> list[LeaderboardRow]:
    """Order teams by descending ranking tuple; residual exact ties go
    alphabetically by team name."""
    if not reports:
        raise ValidationError("no reports to rank")
    ordered = sorted(
        reports,
        key=lambda tr: tuple(-x for x in tr[1].ranking_tuple) + (tr[0],),
    )
    return [LeaderboardRow(i + 1, team, rep) for i, (team, rep) in enumerate(ordered)]


def write_leaderboard_csv(rows: list[LeaderboardRow], path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("rank,team,macro_f1,balanced_accuracy,macro_precision,macro_specificity\n")
        for row in rows:
            r = row.report
            fh.write(
                f"{row.rank},{row.team},{r.macro_f1:.3f},{r.balanced_accuracy:.3f},"
                f"{r.macro_precision:.3f},{r.macro_specificity:.3f}\n"
            )


@dataclass(frozen=True)
class PerClassSummaryRow:
    label: ClassLabel
    mean_f1: float
    min_f1: float
    max_f1: float


def per_class_summary(reports: list[EvalReport]) -> list[PerClassSummaryRow]:
    """Mean/min/max per-class F1 across reports, easiest class first."""
    if not reports:
        raise ValidationError("no reports to summarize")
    rows = []
    for cls in ClassLabel:
        scores = [rep.per_class[cls].f1 for rep in reports]
        rows.append(PerClassSummaryRow(
            label=cls,
            mean_f1=float(np.mean(scores)),
            min_f1=float(min(scores)),
            max_f1=float(max(scores)),
        ))
    rows.sort(key=lambda r: (-r.mean_f1, r.label.value))
    return rows
