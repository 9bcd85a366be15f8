"""Patient-level group-stratified splitting.

Patients are indivisible groups; the planner apportions patient counts per
split by largest-remainder rounding and then steers per-class image shares
toward the split targets with a randomized greedy heuristic plus pairwise
swap refinement, repeated over several restarts.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

from .core import (
    ClassLabel,
    Manifest,
    SplitName,
    SPLIT_ORDER,
    ValidationError,
)
from .quotas import largest_remainder
from .rng import stream

# Pairwise swap refinement is O(n^2) per pass; skip it on rosters where the
# restart budget alone already averages out greedy noise.
_SWAP_REFINE_MAX_PATIENTS = 100


@dataclass(frozen=True)
class PatientProfile:
    """Per-patient image counts by class."""

    patient_id: str
    class_counts: dict[ClassLabel, int]

    def __post_init__(self):
        if sum(self.class_counts.values()) < 1:
            raise ValidationError(f"patient {self.patient_id!r} has no images")
        if any(v < 0 for v in self.class_counts.values()):
            raise ValidationError(f"patient {self.patient_id!r} has negative counts")


@dataclass(frozen=True)
class SplitTargets:
    patient_fraction: dict[SplitName, float]
    rarity_exponent: float = 1.0
    restarts: int = 64

    def __post_init__(self):
        total = sum(self.patient_fraction.get(s, 0.0) for s in SPLIT_ORDER)
        if abs(total - 1.0) > 1e-9:
            raise ValidationError(f"patient fractions sum to {total}, expected 1")
        if self.rarity_exponent <= 0:
            raise ValidationError("rarity_exponent must be positive")
        if self.restarts < 1:
            raise ValidationError("restarts must be positive")

    def fraction(self, split: SplitName) -> float:
        return self.patient_fraction.get(split, 0.0)


@dataclass(frozen=True)
class SplitPlan:
    assignment: dict[str, SplitName]
    per_split_class_counts: dict[SplitName, dict[ClassLabel, int]]
    objective_score: float
    seed: int

    def split_sizes(self) -> dict[SplitName, int]:
        sizes = {s: 0 for s in SPLIT_ORDER}
        for split in self.assignment.values():
            sizes[split] += 1
        return sizes

    def stats_json(self) -> str:
        return json.dumps(
            {
                "objective_score": self.objective_score,
                "seed": self.seed,
                "split_patient_counts": {str(s): n for s, n in self.split_sizes().items()},
                "per_split_class_counts": {
                    str(s): {c.value: n for c, n in counts.items() if n}
                    for s, counts in self.per_split_class_counts.items()
                },
            },
            indent=2,
        )


def split_objective(
    per_split_class_counts: dict[SplitName, dict[ClassLabel, int]],
    class_totals: dict[ClassLabel, int],
    targets: SplitTargets,
) -> float:
    """Weighted L1 deviation of per-class image shares from the split targets.

    Class weights are inverse-frequency (total^-rarity_exponent), normalized
    to sum to 1, so misplacing a rare class costs more than a common one.
    """
    weights = _class_weights(class_totals, targets.rarity_exponent)
    score = 0.0
    for split in SPLIT_ORDER:
        frac = targets.fraction(split)
        counts = per_split_class_counts.get(split, {})
        for cls, total in class_totals.items():
            if total == 0:
                continue
            share = counts.get(cls, 0) / total
            score += weights[cls] * abs(share - frac)
    return score


def _class_weights(class_totals, rarity_exponent):
    raw = {c: t ** (-rarity_exponent) for c, t in class_totals.items() if t > 0}
    norm = sum(raw.values())
    return {c: w / norm for c, w in raw.items()}


def patient_capacities(n_patients: int, targets: SplitTargets) -> dict[SplitName, int]:
    fracs = [targets.fraction(s) for s in SPLIT_ORDER]
    counts = largest_remainder(fracs, n_patients)
    return dict(zip(SPLIT_ORDER, counts))


def plan_split(
    patients: list[PatientProfile], targets: SplitTargets, seed: int
) -> SplitPlan:
    """Assign every patient to one split, minimizing the stratification objective.

    Deterministic for fixed (patients, targets, seed); the best plan over
    `targets.restarts` randomized greedy passes wins, ties going to the
    earliest restart.
    """
    if not patients:
        raise ValidationError("patient list is empty")
    ids = [p.patient_id for p in patients]
    if len(set(ids)) != len(ids):
        raise ValidationError("duplicate patient_id in input")

    n = len(patients)
    caps = patient_capacities(n, targets)
    nonzero_splits = sum(1 for s in SPLIT_ORDER if targets.fraction(s) > 0)
    if n < nonzero_splits:
        raise ValidationError(
            f"{n} patients cannot populate {nonzero_splits} splits with nonzero fractions"
        )

    class_totals: dict[ClassLabel, int] = {}
    for p in patients:
        for cls, cnt in p.class_counts.items():
            if cnt:
                class_totals[cls] = class_totals.get(cls, 0) + cnt
    weights = _class_weights(class_totals, targets.rarity_exponent)

    # Rarity priority: a patient holding a large share of a rare class is
    # placed early, while cheap-to-place patients fill leftover capacity.
    priority = []
    for p in patients:
        prio = max(
            (cnt / class_totals[cls]) * weights[cls]
            for cls, cnt in p.class_counts.items()
            if cnt
        )
        priority.append(prio)

    active = [s for s in SPLIT_ORDER if caps[s] > 0]
    best: Optional[tuple[float, list[int]]] = None
    for restart in range(targets.restarts):
        rng = stream(seed, "split-restart", restart)
        shuffled = rng.permutation(n)
        if restart == 0:
            # Pure rarity-ordered greedy; later restarts jitter the order to
            # escape its local optimum.
            order = sorted(shuffled, key=lambda i: -priority[i])
        else:
            jitter = rng.uniform(0.25, 1.75, size=n)
            order = sorted(shuffled, key=lambda i: -priority[i] * jitter[i])
        assignment = _greedy_pass(patients, order, active, caps, class_totals, weights, targets)
        if n <= _SWAP_REFINE_MAX_PATIENTS:
            _swap_refine(assignment, patients, class_totals, weights, targets)
        counts = _tally(patients, assignment)
        score = split_objective(counts, class_totals, targets)
        if best is None or score < best[0] - 1e-15:
            best = (score, list(assignment))

    score, assignment = best
    counts = _tally(patients, assignment)
    return SplitPlan(
        assignment={ids[i]: SPLIT_ORDER[assignment[i]] for i in range(n)},
        per_split_class_counts=counts,
        objective_score=score,
        seed=seed,
    )


def _greedy_pass(patients, order, active, caps, class_totals, weights, targets):
    remaining = dict(caps)
    counts = {s: {c: 0 for c in class_totals} for s in SPLIT_ORDER}
    assignment = [-1] * len(patients)
    for i in order:
        p = patients[i]
        best_split = None
        best_delta = None
        for s in active:
            if remaining[s] == 0:
                continue
            delta = _assign_delta(counts[s], p, targets.fraction(s), class_totals, weights)
            if best_delta is None or delta < best_delta - 1e-15:
                best_split, best_delta = s, delta
        remaining[best_split] -= 1
        assignment[i] = SPLIT_ORDER.index(best_split)
        for cls, cnt in p.class_counts.items():
            if cnt:
                counts[best_split][cls] += cnt
    return assignment


def _assign_delta(split_counts, patient, frac, class_totals, weights):
    delta = 0.0
    for cls, cnt in patient.class_counts.items():
        if not cnt:
            continue
        total = class_totals[cls]
        before = split_counts[cls] / total
        after = (split_counts[cls] + cnt) / total
        delta += weights[cls] * (abs(after - frac) - abs(before - frac))
    return delta


def _swap_refine(assignment, patients, class_totals, weights, targets):
    """First-improvement pairwise swaps until a local optimum (capacity-preserving)."""
    n = len(patients)
    counts = _tally(patients, assignment)
    score = split_objective(counts, class_totals, targets)
    improved = True
    while improved:
        improved = False
        for i in range(n):
            for j in range(i + 1, n):
                si, sj = assignment[i], assignment[j]
                if si == sj:
                    continue
                assignment[i], assignment[j] = sj, si
                trial_counts = _tally(patients, assignment)
                trial = split_objective(trial_counts, class_totals, targets)
                if trial < score - 1e-12:
                    score = trial
                    improved = True
                else:
                    assignment[i], assignment[j] = si, sj


def _tally(patients, assignment):
    counts = {s: {} for s in SPLIT_ORDER}
    for idx, p in enumerate(patients):
        split = SPLIT_ORDER[assignment[idx]]
        for cls, cnt in p.class_counts.items():
            if cnt:
                counts[split][cls] = counts[split].get(cls, 0) + cnt
    return counts


def profiles_from_manifest(manifest: Manifest) -> list[PatientProfile]:
    """Aggregate per-patient class counts, in first-appearance order."""
    by_patient: dict[str, dict[ClassLabel, int]] = {}
    for r in manifest:
        counts = by_patient.setdefault(r.patient_id, {})
        counts[r.label] = counts.get(r.label, 0) + 1
    return [PatientProfile(pid, counts) for pid, counts in by_patient.items()]


@dataclass
class DisjointnessReport:
    violations: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def check_disjointness(plan: SplitPlan, manifest: Manifest) -> DisjointnessReport:
    """Verify that no patient leaks across splits and split tags match the plan."""
    report = DisjointnessReport()
    for r in manifest:
        if r.patient_id not in plan.assignment:
            raise ValidationError(f"patient {r.patient_id!r} not present in split plan")
        planned = plan.assignment[r.patient_id]
        if r.split is not None and r.split != planned:
            report.violations.append(
                f"image {r.image_id}: tagged {r.split} but patient "
                f"{r.patient_id} is assigned to {planned}"
            )
    return report


def read_patients_csv(path) -> list[PatientProfile]:
    """Long-form patients CSV: header `patient_id,label,count`."""
    import csv
    from .core import parse_label

    by_patient: dict[str, dict[ClassLabel, int]] = {}
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["patient_id", "label", "count"]:
            raise ValidationError(f"{path}: expected header patient_id,label,count")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 3:
                raise ValidationError(f"{path}:{lineno}: expected 3 fields, got {len(row)}")
            pid, label_token, count_token = row
            try:
                count = int(count_token)
            except ValueError:
                raise ValidationError(f"{path}:{lineno}: count {count_token!r} not an integer") from None
            counts = by_patient.setdefault(pid, {})
            cls = parse_label(label_token)
            counts[cls] = counts.get(cls, 0) + count
    return [PatientProfile(pid, counts) for pid, counts in by_patient.items()]


def write_plan_csv(plan: SplitPlan, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("patient_id,split\n")
        for pid, split in plan.assignment.items():
            fh.write(f"{pid},{split}\n")


def read_plan_csv(path) -> dict[str, SplitName]:
    import csv
    from .core import parse_split

    assignment: dict[str, SplitName] = {}
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["patient_id", "split"]:
            raise ValidationError(f"{path}: expected header patient_id,split")
        for row in reader:
            if not row:
                continue
            assignment[row[0]] = parse_split(row[1])
    return assignment
