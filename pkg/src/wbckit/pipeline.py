"""Batch degradation: seeded, embarrassingly parallel, scheduling-independent."""

from __future__ import annotations

import multiprocessing
import shutil
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

from .config import PipelineConfig
from .core import Manifest, Severity, ValidationError
from .ops import DegradationRecipe, apply_recipe, sample_recipe
from .rng import derive_seed

RECIPE_LOG_NAME = "recipes.jsonl"


def load_image(path) -> np.ndarray:
    with Image.open(path) as im:
        arr = np.asarray(im.convert("RGB") if im.mode != "RGB" else im)
    if arr.ndim != 3 or arr.shape[2] != 3 or arr.dtype != np.uint8:
        raise ValidationError(f"{path}: expected 8-bit RGB image, got {arr.dtype} {arr.shape}")
    return arr


def save_image(arr: np.ndarray, path) -> None:
    Image.fromarray(arr, mode="RGB").save(path, format="PNG")


@dataclass
class BatchResult:
    recipes: list[DegradationRecipe] = field(default_factory=list)
    errors: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.errors


@dataclass(frozen=True)
class _Task:
    image_id: str
    severity: Severity
    src: str
    dst: str
    seed: int
    param_ranges: dict
    count_rule: object


def _run_task(task: _Task):
    """Process one image; returns (image_id, recipe_dict | None, error | None)."""
    try:
        recipe = sample_recipe(
            task.image_id, task.severity, task.param_ranges, task.count_rule, task.seed
        )
        if task.severity == Severity.PRISTINE:
            shutil.copyfile(task.src, task.dst)
        else:
            img = load_image(task.src)
            save_image(apply_recipe(img, recipe), task.dst)
        return task.image_id, recipe.to_dict(), None
    except (OSError, ValidationError) as exc:
        return task.image_id, None, f"{task.image_id}: {exc}"


def degrade_batch(
    manifest: Manifest,
    images_dir,
    out_dir,
    config: PipelineConfig,
    seed: int,
    workers: int = 1,
) -> BatchResult:
    """Degrade every manifest image per its severity tag.

    Each image's work is a pure function of its own derived seed, so the
    output tree and the recipe log (written in manifest order) do not depend
    on the worker count. Unreadable images are logged and skipped.
    """
    if not manifest.has_severity:
        raise ValidationError("manifest has no severity column; run assignment first")
    images_dir = Path(images_dir)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    tasks = [
        _Task(
            image_id=r.image_id,
            severity=r.severity,
            src=str(r.source_path or images_dir / f"{r.image_id}.png"),
            dst=str(out_dir / f"{r.image_id}.png"),
            seed=derive_seed(seed, "image", r.image_id),
            param_ranges=config.param_ranges,
            count_rule=config.count_rule,
        )
        for r in manifest
    ]

    if workers <= 1:
        outcomes = [_run_task(t) for t in tasks]
    else:
        with multiprocessing.Pool(workers) as pool:
            outcomes = pool.map(_run_task, tasks)

    result = BatchResult()
    log_path = out_dir / RECIPE_LOG_NAME
    with log_path.open("w", encoding="utf-8", newline="\n") as log:
        for image_id, recipe_dict, error in outcomes:
            if error is not None:
                result.errors.append(error)
                continue
            recipe = DegradationRecipe.from_dict(recipe_dict)
            result.recipes.append(recipe)
            log.write(recipe.to_json() + "\n")
    return result
