"""Shared vocabulary: class labels, severity levels, manifests, CSV I/O."""

from __future__ import annotations

import csv
import enum
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional


class ValidationError(ValueError):
    """Raised when an input file or structure violates a contract."""


class ManifestError(ValidationError):
    pass


# The 13 WBC class codes, in the fixed vocabulary order used throughout.
CLASS_CODES = (
    "SNE", "BNE", "EO", "BA", "LY", "MO", "MMY",
    "MY", "PMY", "BL", "VLY", "PC", "PLY",
)

ClassLabel = enum.Enum("ClassLabel", {code: code for code in CLASS_CODES})
ClassLabel.__str__ = lambda self: self.value


def parse_label(token: str) -> ClassLabel:
    """Parse a class code, case-sensitively. Raises ValidationError otherwise."""
    try:
        return ClassLabel[token]
    except KeyError:
        raise ValidationError(f"unknown class label {token!r}") from None


class Severity(enum.IntEnum):
    PRISTINE = 0
    MILD = 1
    MODERATE = 2
    EXTREME = 3

    def __str__(self):
        return self.name.lower()


def parse_severity(token: str) -> Severity:
    if token.islower():
        try:
            return Severity[token.upper()]
        except KeyError:
            pass
    raise ValidationError(f"unknown severity {token!r}")


class SplitName(enum.Enum):
    PHASE1_TRAIN = "phase1_train"
    PHASE2_TRAIN = "phase2_train"
    PHASE2_EVAL = "phase2_eval"
    PHASE2_TEST = "phase2_test"

    def __str__(self):
        return self.value


SPLIT_ORDER = tuple(SplitName)


def parse_split(token: str) -> SplitName:
    try:
        return SplitName(token)
    except ValueError:
        raise ValidationError(f"unknown split {token!r}") from None


@dataclass(frozen=True)
class ImageRecord:
    """One labeled cell patch."""

    image_id: str
    patient_id: str
    label: ClassLabel
    source_path: Optional[Path] = None
    split: Optional[SplitName] = None
    severity: Optional[Severity] = None
    seed: Optional[int] = None

    def with_severity(self, severity: Severity) -> "ImageRecord":
        return replace(self, severity=severity)

    def with_split(self, split: SplitName) -> "ImageRecord":
        return replace(self, split=split)


@dataclass(frozen=True)
class Manifest:
    """Ordered collection of image records with unique ids."""

    records: tuple[ImageRecord, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "records", tuple(self.records))
        seen = set()
        for r in self.records:
            if r.image_id in seen:
                raise ManifestError(f"duplicate image_id {r.image_id!r}")
            seen.add(r.image_id)
        for attr in ("split", "severity", "seed"):
            tagged = sum(getattr(r, attr) is not None for r in self.records)
            if tagged not in (0, len(self.records)):
                raise ManifestError(
                    f"{attr} tag present on {tagged} of {len(self.records)} records; "
                    "must be all or none"
                )

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    @property
    def has_split(self) -> bool:
        return bool(self.records) and self.records[0].split is not None

    @property
    def has_severity(self) -> bool:
        return bool(self.records) and self.records[0].severity is not None

    @property
    def has_seed(self) -> bool:
        return bool(self.records) and self.records[0].seed is not None

    def image_ids(self) -> list[str]:
        return [r.image_id for r in self.records]

    def restrict_to_split(self, split: SplitName) -> "Manifest":
        return Manifest(tuple(r for r in self.records if r.split == split))

    def class_counts(self) -> dict[ClassLabel, int]:
        counts = {c: 0 for c in ClassLabel}
        for r in self.records:
            counts[r.label] += 1
        return counts


_REQUIRED_COLUMNS = ("image_id", "patient_id", "label")
_OPTIONAL_COLUMNS = ("split", "severity", "seed")


def parse_manifest(path) -> Manifest:
    """Read a manifest CSV.

    Header must be `image_id,patient_id,label` optionally followed by
    `split`, `severity` and `seed` columns in that order.
    """
    path = Path(path)
    with path.open("r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ManifestError(f"{path}: empty file, expected a CSV header") from None
        columns = _check_header(header, path)
        records = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(columns):
                raise ManifestError(
                    f"{path}:{lineno}: expected {len(columns)} fields, got {len(row)}"
                )
            values = dict(zip(columns, row))
            try:
                records.append(
                    ImageRecord(
                        image_id=values["image_id"],
                        patient_id=values["patient_id"],
                        label=parse_label(values["label"]),
                        split=parse_split(values["split"]) if "split" in values else None,
                        severity=parse_severity(values["severity"]) if "severity" in values else None,
                        seed=_parse_seed(values["seed"]) if "seed" in values else None,
                    )
                )
            except ValidationError as exc:
                raise ManifestError(f"{path}:{lineno}: {exc}") from None
        seen: dict[str, int] = {}
        for lineno_offset, r in enumerate(records):
            if r.image_id in seen:
                raise ManifestError(
                    f"{path}: duplicate image_id {r.image_id!r} "
                    f"(lines {seen[r.image_id]} and {lineno_offset + 2})"
                )
            seen[r.image_id] = lineno_offset + 2
        return Manifest(tuple(records))


def _check_header(header: list[str], path: Path) -> list[str]:
    if tuple(header[:3]) != _REQUIRED_COLUMNS:
        raise ManifestError(
            f"{path}: header must start with {','.join(_REQUIRED_COLUMNS)}, got {','.join(header)}"
        )
    extras = header[3:]
    allowed = [c for c in _OPTIONAL_COLUMNS]
    pos = 0
    for col in extras:
        while pos < len(allowed) and allowed[pos] != col:
            pos += 1
        if pos == len(allowed):
            raise ManifestError(f"{path}: unexpected or out-of-order column {col!r}")
        pos += 1
    return list(header)


def _parse_seed(token: str) -> int:
    try:
        value = int(token)
    except ValueError:
        raise ValidationError(f"seed {token!r} is not an integer") from None
    if not 0 <= value < 2**64:
        raise ValidationError(f"seed {value} outside 64-bit unsigned range")
    return value


def write_manifest(manifest: Manifest, path) -> None:
    """Write a manifest CSV (UTF-8, LF). Round-trips through parse_manifest."""
    path = Path(path)
    columns = list(_REQUIRED_COLUMNS)
    if manifest.has_split:
        columns.append("split")
    if manifest.has_severity:
        columns.append("severity")
    if manifest.has_seed:
        columns.append("seed")
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(columns) + "\n")
        for r in manifest.records:
            row = [r.image_id, r.patient_id, r.label.value]
            if manifest.has_split:
                row.append(str(r.split))
            if manifest.has_severity:
                row.append(str(r.severity))
            if manifest.has_seed:
                row.append(str(r.seed))
            fh.write(",".join(row) + "\n")
