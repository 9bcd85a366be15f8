"""Default benchmark configuration: split targets, severity fractions, operator ranges."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .core import Severity, SplitName, ValidationError
from .severity import SeverityFractions

DEFAULT_IMAGE_SIDE = 368

DEFAULT_PATIENT_FRACTIONS: dict[SplitName, float] = {
    SplitName.PHASE1_TRAIN: 0.15,
    SplitName.PHASE2_TRAIN: 0.45,
    SplitName.PHASE2_EVAL: 0.10,
    SplitName.PHASE2_TEST: 0.30,
}

DEFAULT_SEVERITY_FRACTIONS: dict[SplitName, SeverityFractions] = {
    SplitName.PHASE1_TRAIN: SeverityFractions(1.00, 0.00, 0.00, 0.00),
    SplitName.PHASE2_TRAIN: SeverityFractions(0.07, 0.55, 0.30, 0.08),
    SplitName.PHASE2_EVAL: SeverityFractions(0.40, 0.45, 0.12, 0.03),
    SplitName.PHASE2_TEST: SeverityFractions(0.35, 0.45, 0.15, 0.05),
}


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float

    def __post_init__(self):
        if self.lo > self.hi:
            raise ValidationError(f"interval low {self.lo} > high {self.hi}")

    def contains(self, x: float) -> bool:
        return self.lo <= x <= self.hi

    def sample(self, rng) -> float:
        return float(rng.uniform(self.lo, self.hi))


@dataclass(frozen=True)
class OperatorRanges:
    """Uniform sampling intervals for one severity level."""

    crop_ratio: Interval
    blur_sigma: Interval
    motion_kernel: Interval
    motion_prob: Interval
    noise_sigma: Interval
    poisson_rate: Interval
    saturation_delta: Interval
    gamma: Interval
    brightness_delta: Interval
    vignette_strength: Interval
    jitter_factor: Interval
    jitter_prob: Interval


ParamRanges = dict  # Severity -> OperatorRanges, for the three degraded levels

DEFAULT_PARAM_RANGES: ParamRanges = {
    Severity.MILD: OperatorRanges(
        crop_ratio=Interval(0.02, 0.10),
        blur_sigma=Interval(0.2, 1.0),
        motion_kernel=Interval(3, 15),
        motion_prob=Interval(0.1, 0.3),
        noise_sigma=Interval(2, 8),
        poisson_rate=Interval(0.5, 2.0),
        saturation_delta=Interval(-10, 10),
        gamma=Interval(0.9, 1.1),
        brightness_delta=Interval(-10, 10),
        vignette_strength=Interval(0.1, 0.3),
        jitter_factor=Interval(0.95, 1.05),
        jitter_prob=Interval(0.5, 1.0),
    ),
    Severity.MODERATE: OperatorRanges(
        crop_ratio=Interval(0.10, 0.20),
        blur_sigma=Interval(1.0, 2.0),
        motion_kernel=Interval(5, 25),
        motion_prob=Interval(0.3, 0.7),
        noise_sigma=Interval(8, 18),
        poisson_rate=Interval(2.0, 4.0),
        saturation_delta=Interval(-15, 15),
        gamma=Interval(0.8, 1.3),
        brightness_delta=Interval(-15, 15),
        vignette_strength=Interval(0.3, 0.6),
        jitter_factor=Interval(0.90, 1.10),
        jitter_prob=Interval(0.7, 1.0),
    ),
    Severity.EXTREME: OperatorRanges(
        crop_ratio=Interval(0.20, 0.30),
        blur_sigma=Interval(2.0, 3.0),
        motion_kernel=Interval(20, 35),
        motion_prob=Interval(0.7, 1.0),
        noise_sigma=Interval(18, 25.5),
        poisson_rate=Interval(3.5, 5.0),
        saturation_delta=Interval(-25, 25),
        gamma=Interval(0.5, 1.5),
        brightness_delta=Interval(-25, 25),
        vignette_strength=Interval(0.5, 0.8),
        jitter_factor=Interval(0.85, 1.15),
        jitter_prob=Interval(0.8, 1.0),
    ),
}


@dataclass(frozen=True)
class OperatorCountRule:
    """Inclusive bounds on the number of operators per recipe, by severity."""

    mild: tuple[int, int] = (1, 3)
    moderate: tuple[int, int] = (1, 4)
    extreme: tuple[int, int] = (3, 5)

    def __post_init__(self):
        for lo, hi in (self.mild, self.moderate, self.extreme):
            if not (1 <= lo <= hi <= 10):
                raise ValidationError(f"operator count bounds ({lo},{hi}) outside [1,10]")

    def bounds(self, severity: Severity) -> tuple[int, int]:
        return {
            Severity.MILD: self.mild,
            Severity.MODERATE: self.moderate,
            Severity.EXTREME: self.extreme,
        }[severity]


DEFAULT_COUNT_RULE = OperatorCountRule()


@dataclass(frozen=True)
class PipelineConfig:
    image_side: int = DEFAULT_IMAGE_SIDE
    patient_fractions: dict = field(default_factory=lambda: dict(DEFAULT_PATIENT_FRACTIONS))
    severity_fractions: dict = field(default_factory=lambda: dict(DEFAULT_SEVERITY_FRACTIONS))
    param_ranges: dict = field(default_factory=lambda: dict(DEFAULT_PARAM_RANGES))
    count_rule: OperatorCountRule = field(default_factory=OperatorCountRule)


def config_to_dict(cfg: PipelineConfig) -> dict:
    def interval(iv: Interval):
        return [iv.lo, iv.hi]

    return {
        "image_side": cfg.image_side,
        "patient_fractions": {str(s): cfg.patient_fractions[s] for s in cfg.patient_fractions},
        "severity_fractions": {
            str(s): list(f.as_tuple()) for s, f in cfg.severity_fractions.items()
        },
        "operator_count_rule": {
            "mild": list(cfg.count_rule.mild),
            "moderate": list(cfg.count_rule.moderate),
            "extreme": list(cfg.count_rule.extreme),
        },
        "param_ranges": {
            str(sev): {
                name: interval(getattr(ranges, name))
                for name in OperatorRanges.__dataclass_fields__
            }
            for sev, ranges in cfg.param_ranges.items()
        },
    }


def config_from_dict(data: dict) -> PipelineConfig:
    from .core import parse_severity, parse_split

    ranges = {}
    for sev_token, fields_ in data["param_ranges"].items():
        ranges[parse_severity(sev_token)] = OperatorRanges(
            **{name: Interval(*vals) for name, vals in fields_.items()}
        )
    rule = data["operator_count_rule"]
    return PipelineConfig(
        image_side=int(data["image_side"]),
        patient_fractions={
            parse_split(s): float(f) for s, f in data["patient_fractions"].items()
        },
        severity_fractions={
            parse_split(s): SeverityFractions(*vals)
            for s, vals in data["severity_fractions"].items()
        },
        param_ranges=ranges,
        count_rule=OperatorCountRule(
            mild=tuple(rule["mild"]),
            moderate=tuple(rule["moderate"]),
            extreme=tuple(rule["extreme"]),
        ),
    )


def dump_config(cfg: PipelineConfig, path) -> None:
    Path(path).write_text(json.dumps(config_to_dict(cfg), indent=2) + "\n", encoding="utf-8")


def load_config(path) -> PipelineConfig:
    return config_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
