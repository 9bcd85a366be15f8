"""Benchmark machinery for robust white-blood-cell classification.

Patient-level group-stratified splitting, severity assignment with rare-class
protection, seeded synthetic image degradation, and macro-F1 challenge
evaluation with tie-broken ranking.
"""

from .core import (
    CLASS_CODES,
    ClassLabel,
    ImageRecord,
    Manifest,
    ManifestError,
    Severity,
    SplitName,
    ValidationError,
    parse_manifest,
    write_manifest,
)
from .config import (
    DEFAULT_COUNT_RULE,
    DEFAULT_PARAM_RANGES,
    DEFAULT_PATIENT_FRACTIONS,
    DEFAULT_SEVERITY_FRACTIONS,
    OperatorCountRule,
    PipelineConfig,
)
from .splitting import PatientProfile, SplitPlan, SplitTargets, check_disjointness, plan_split
from .severity import (
    ProtectionPolicy,
    SeverityFractions,
    SeverityPlan,
    assign_severity,
    severity_histogram,
)
from .ops import DegradationRecipe, OperatorKind, apply_operator, apply_recipe, sample_recipe
from .pipeline import degrade_batch
from .evaluate import (
    EvalReport,
    PredictionSet,
    SubmissionError,
    per_class_summary,
    rank,
    score,
    validate_submission,
)

__version__ = "0.1.0"
