"""Per-class severity assignment with rare-class protection and pristine fallback."""

from __future__ import annotations

from dataclasses import dataclass, field

from .core import ClassLabel, Manifest, Severity, ValidationError
from .quotas import largest_remainder
from .rng import stream

SEVERITY_ORDER = (Severity.PRISTINE, Severity.MILD, Severity.MODERATE, Severity.EXTREME)


@dataclass(frozen=True)
class SeverityFractions:
    pristine: float
    mild: float
    moderate: float
    extreme: float

    def __post_init__(self):
        vals = self.as_tuple()
        if any(v < 0 or v > 1 for v in vals):
            raise ValidationError(f"severity fractions {vals} outside [0,1]")
        if abs(sum(vals) - 1.0) > 1e-9:
            raise ValidationError(f"severity fractions {vals} sum to {sum(vals)}, expected 1")

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.pristine, self.mild, self.moderate, self.extreme)


@dataclass(frozen=True)
class ProtectionPolicy:
    """Rare-class exemption from heavy degradation.

    Classes holding less than `coverage_threshold` of the split's images get
    `protected_fractions` (no moderate/extreme) instead of the split's own
    fractions; every class additionally keeps at least one pristine image
    when `guarantee_pristine_per_class` is set.
    """

    coverage_threshold: float = 0.005
    protected_fractions: SeverityFractions = field(
        default_factory=lambda: SeverityFractions(0.70, 0.30, 0.0, 0.0)
    )
    guarantee_pristine_per_class: bool = True

    def __post_init__(self):
        if self.protected_fractions.moderate != 0 or self.protected_fractions.extreme != 0:
            raise ValidationError("protected fractions must have zero moderate/extreme mass")


@dataclass(frozen=True)
class SeverityPlan:
    assignment: dict[str, Severity]
    quotas: dict[tuple[ClassLabel, Severity], int]
    protected_classes: frozenset[ClassLabel]
    seed: int


def assign_severity(
    manifest: Manifest,
    fractions: SeverityFractions,
    policy: ProtectionPolicy,
    seed: int,
) -> SeverityPlan:
    """Assign one severity per image of a single-split manifest.

    Quotas are largest-remainder per class; the per-class image order is an
    independent seeded shuffle, so one class's contents never influence
    another's assignment.
    """
    if len(manifest) == 0:
        raise ValidationError("manifest is empty")
    splits = {r.split for r in manifest}
    if len(splits) > 1:
        raise ValidationError(f"manifest spans multiple splits: {sorted(map(str, splits))}")

    total = len(manifest)
    by_class: dict[ClassLabel, list[str]] = {}
    for r in manifest:
        by_class.setdefault(r.label, []).append(r.image_id)

    assignment: dict[str, Severity] = {}
    quotas: dict[tuple[ClassLabel, Severity], int] = {}
    protected: set[ClassLabel] = set()
    for cls, ids in by_class.items():
        n = len(ids)
        if n / total < policy.coverage_threshold:
            protected.add(cls)
            class_fracs = policy.protected_fractions
        else:
            class_fracs = fractions
        counts = largest_remainder(class_fracs.as_tuple(), n)

        rng = stream(seed, "severity", cls.value)
        shuffled = [ids[i] for i in rng.permutation(n)]
        class_assignment: dict[str, Severity] = {}
        cursor = 0
        for sev, count in zip(SEVERITY_ORDER, counts):
            for image_id in shuffled[cursor:cursor + count]:
                class_assignment[image_id] = sev
            cursor += count

        if policy.guarantee_pristine_per_class and counts[0] == 0:
            fallback_id = min(ids)
            counts[class_assignment[fallback_id].value] -= 1
            counts[0] += 1
            class_assignment[fallback_id] = Severity.PRISTINE

        assignment.update(class_assignment)
        for sev, count in zip(SEVERITY_ORDER, counts):
            quotas[(cls, sev)] = count

    return SeverityPlan(
        assignment=assignment,
        quotas=quotas,
        protected_classes=frozenset(protected),
        seed=seed,
    )


def apply_severity_plan(manifest: Manifest, plan: SeverityPlan) -> Manifest:
    return Manifest(tuple(r.with_severity(plan.assignment[r.image_id]) for r in manifest))


@dataclass(frozen=True)
class SeverityHistogram:
    per_class: dict[ClassLabel, dict[Severity, int]]
    overall: dict[Severity, int]
    total: int

    def overall_fractions(self) -> dict[Severity, float]:
        return {s: c / self.total for s, c in self.overall.items()}

    def class_fractions(self, cls: ClassLabel) -> dict[Severity, float]:
        counts = self.per_class[cls]
        n = sum(counts.values())
        return {s: c / n for s, c in counts.items()}

    def as_dict(self) -> dict:
        return {
            "total": self.total,
            "overall": {str(s): c for s, c in self.overall.items()},
            "overall_fractions": {str(s): f for s, f in self.overall_fractions().items()},
            "per_class": {
                cls.value: {str(s): c for s, c in counts.items()}
                for cls, counts in self.per_class.items()
            },
        }


def severity_histogram(plan: SeverityPlan, manifest: Manifest) -> SeverityHistogram:
    """Per-class and overall severity counts for auditing realized fractions."""
    plan_ids = set(plan.assignment)
    manifest_ids = set(manifest.image_ids())
    if plan_ids != manifest_ids:
        missing = sorted(manifest_ids - plan_ids)[:5]
        extra = sorted(plan_ids - manifest_ids)[:5]
        raise ValidationError(
            f"plan does not cover manifest (missing {missing}, extra {extra})"
        )
    per_class: dict[ClassLabel, dict[Severity, int]] = {}
    overall = {s: 0 for s in SEVERITY_ORDER}
    for r in manifest:
        sev = plan.assignment[r.image_id]
        counts = per_class.setdefault(r.label, {s: 0 for s in SEVERITY_ORDER})
        counts[sev] += 1
        overall[sev] += 1
    return SeverityHistogram(per_class=per_class, overall=overall, total=len(manifest))
