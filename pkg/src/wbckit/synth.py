"""Deterministic synthetic cell-patch generator for desk-scale pipeline runs.

The images are procedural stand-ins, not biology: a noisy background plus a
textured class-coded disk (hue and lobe count keyed to the class index), just
enough structure for degradation and evaluation machinery to chew on.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import ClassLabel, ImageRecord, Manifest, ValidationError
from .ops import quantize, _hsv_to_rgb
from .quotas import largest_remainder
from .rng import stream

# Long-tailed default mixture following the benchmark's published test-set
# class supports.
DEFAULT_CLASS_SUPPORTS: dict[str, int] = {
    "SNE": 8188, "LY": 4269, "MO": 1508, "BL": 902, "EO": 492, "BA": 303,
    "VLY": 253, "MY": 184, "MMY": 175, "BNE": 138, "PMY": 48, "PC": 15, "PLY": 2,
}


def default_mixture() -> dict[ClassLabel, float]:
    total = sum(DEFAULT_CLASS_SUPPORTS.values())
    return {ClassLabel[c]: n / total for c, n in DEFAULT_CLASS_SUPPORTS.items()}


@dataclass(frozen=True)
class SynthSpec:
    n_patients: int
    n_images: int
    mixture: dict  # ClassLabel -> fraction
    seed: int
    side: int = 368

    def __post_init__(self):
        if self.n_patients < 4:
            raise ValidationError("need at least 4 patients")
        if self.n_images < self.n_patients:
            raise ValidationError("need at least one image per patient")
        total = sum(self.mixture.values())
        if total <= 0 or any(v < 0 for v in self.mixture.values()):
            raise ValidationError("mixture fractions must be non-negative with positive sum")


def plan_synthetic_manifest(spec: SynthSpec) -> Manifest:
    """Lay out patients, class counts and image ids without rendering pixels."""
    classes = [c for c in ClassLabel if spec.mixture.get(c, 0) > 0]
    fracs = np.array([spec.mixture[c] for c in classes], dtype=np.float64)
    fracs /= fracs.sum()
    counts = largest_remainder(fracs.tolist(), spec.n_images)

    # Correlated patient profiles: each patient prefers a couple of classes.
    rng = stream(spec.seed, "synth-patients")
    affinity = rng.dirichlet(np.full(len(classes), 0.3), size=spec.n_patients)

    records = []
    img_idx = 0
    for cls, count in zip(classes, counts):
        ci = classes.index(cls)
        weights = affinity[:, ci] + 1e-9
        weights = weights / weights.sum()
        owners = stream(spec.seed, "synth-owners", cls.value).choice(
            spec.n_patients, size=count, p=weights
        )
        for owner in owners:
            records.append(ImageRecord(
                image_id=f"img_{img_idx:06d}",
                patient_id=f"pat_{int(owner):04d}",
                label=cls,
            ))
            img_idx += 1
    # Guarantee every patient owns at least one image by reassigning spares.
    owned = {r.patient_id for r in records}
    orphans = [f"pat_{i:04d}" for i in range(spec.n_patients) if f"pat_{i:04d}" not in owned]
    if len(orphans) > len(records):
        raise ValidationError("not enough images to cover every patient")
    patched = list(records)
    spare = 0
    counts_by_patient: dict[str, int] = {}
    for r in records:
        counts_by_patient[r.patient_id] = counts_by_patient.get(r.patient_id, 0) + 1
    for orphan in orphans:
        while counts_by_patient[patched[spare].patient_id] <= 1:
            spare += 1
        donor = patched[spare]
        counts_by_patient[donor.patient_id] -= 1
        patched[spare] = ImageRecord(donor.image_id, orphan, donor.label)
        spare += 1
    return Manifest(tuple(patched))


def render_patch(image_id: str, label: ClassLabel, seed: int, side: int) -> np.ndarray:
    """Procedural RGB patch: noisy background, textured hue-coded center disk."""
    rng = stream(seed, "synth-img", image_id)
    cls_idx = list(ClassLabel).index(label)
    h = np.full((side, side), (cls_idx / len(ClassLabel) * 6.0) % 6.0)
    yy, xx = np.mgrid[:side, :side].astype(np.float64)
    cy = cx = (side - 1) / 2.0
    r = np.hypot(yy - cy, xx - cx)

    radius = side * (0.22 + 0.10 * rng.random())
    lobes = 1 + cls_idx % 4
    angle = np.arctan2(yy - cy, xx - cx)
    wobble = 1.0 + 0.15 * np.sin(lobes * angle + 2 * np.pi * rng.random())
    disk = r < radius * wobble

    texture = 0.15 * np.sin(xx / (2.0 + 3.0 * rng.random())) * np.sin(yy / (2.0 + 3.0 * rng.random()))
    v = np.where(disk, 150.0 + 60.0 * texture * 255 / 150, 225.0)
    v = v + rng.normal(0.0, 6.0, size=v.shape)
    s = np.where(disk, 0.55 + 0.1 * texture, 0.08)
    rgb = _hsv_to_rgb(h, np.clip(s, 0.0, 1.0), np.clip(v, 0.0, 255.0))
    return quantize(rgb)


def generate_dataset(spec: SynthSpec, out_dir) -> Manifest:
    """Write PNGs plus manifest.csv under out_dir; fully seed-determined."""
    from .core import write_manifest
    from .pipeline import save_image

    out_dir = Path(out_dir)
    images_dir = out_dir / "images"
    images_dir.mkdir(parents=True, exist_ok=True)
    manifest = plan_synthetic_manifest(spec)
    for r in manifest:
        save_image(render_patch(r.image_id, r.label, spec.seed, spec.side),
                   images_dir / f"{r.image_id}.png")
    write_manifest(manifest, out_dir / "manifest.csv")
    return manifest
