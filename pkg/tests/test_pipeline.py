import json
from pathlib import Path

import numpy as np
import pytest

from wbckit.config import PipelineConfig
from wbckit.core import (
    ClassLabel,
    ImageRecord,
    Manifest,
    Severity,
    SplitName,
    ValidationError,
)
from wbckit.pipeline import RECIPE_LOG_NAME, degrade_batch, load_image, save_image
from wbckit.rng import stream


def make_dataset(tmp_path, n=10, side=32, severities=None):
    images_dir = tmp_path / "in"
    images_dir.mkdir()
    records = []
    for i in range(n):
        image_id = f"img_{i:03d}"
        arr = stream(1000 + i, "px").integers(0, 256, size=(side, side, 3)).astype(np.uint8)
        save_image(arr, images_dir / f"{image_id}.png")
        sev = severities[i] if severities else list(Severity)[i % 4]
        records.append(ImageRecord(image_id, f"p{i % 3}", list(ClassLabel)[i % 13],
                                   split=SplitName.PHASE2_TRAIN, severity=sev))
    return Manifest(tuple(records)), images_dir


def tree_bytes(root):
    return {p.name: p.read_bytes() for p in sorted(Path(root).iterdir())}


def test_worker_count_does_not_change_output(tmp_path):
    manifest, images_dir = make_dataset(tmp_path, n=8)
    cfg = PipelineConfig()
    out1, out2 = tmp_path / "w1", tmp_path / "w2"
    r1 = degrade_batch(manifest, images_dir, out1, cfg, seed=7, workers=1)
    r2 = degrade_batch(manifest, images_dir, out2, cfg, seed=7, workers=4)
    assert r1.ok and r2.ok
    assert tree_bytes(out1) == tree_bytes(out2)


def test_rerun_same_seed_identical(tmp_path):
    manifest, images_dir = make_dataset(tmp_path, n=6)
    cfg = PipelineConfig()
    out1, out2 = tmp_path / "a", tmp_path / "b"
    degrade_batch(manifest, images_dir, out1, cfg, seed=3)
    degrade_batch(manifest, images_dir, out2, cfg, seed=3)
    assert tree_bytes(out1) == tree_bytes(out2)
    assert (out1 / RECIPE_LOG_NAME).read_text() == (out2 / RECIPE_LOG_NAME).read_text()


def test_all_pristine_copies_bit_exactly(tmp_path):
    manifest, images_dir = make_dataset(tmp_path, n=5,
                                        severities=[Severity.PRISTINE] * 5)
    out = tmp_path / "out"
    result = degrade_batch(manifest, images_dir, out, PipelineConfig(), seed=1)
    assert result.ok
    for r in manifest:
        src = (images_dir / f"{r.image_id}.png").read_bytes()
        dst = (out / f"{r.image_id}.png").read_bytes()
        assert src == dst
    for recipe in result.recipes:
        assert recipe.steps == ()


def test_recipe_log_in_manifest_order(tmp_path):
    manifest, images_dir = make_dataset(tmp_path, n=7)
    out = tmp_path / "out"
    degrade_batch(manifest, images_dir, out, PipelineConfig(), seed=2, workers=3)
    ids = [json.loads(line)["image_id"]
           for line in (out / RECIPE_LOG_NAME).read_text().splitlines()]
    assert ids == manifest.image_ids()


def test_unreadable_image_logged_batch_continues(tmp_path):
    manifest, images_dir = make_dataset(tmp_path, n=4,
                                        severities=[Severity.MILD] * 4)
    (images_dir / "img_002.png").write_bytes(b"not a png")
    out = tmp_path / "out"
    result = degrade_batch(manifest, images_dir, out, PipelineConfig(), seed=5)
    assert not result.ok
    assert len(result.errors) == 1
    assert "img_002" in result.errors[0]
    assert len(result.recipes) == 3
    assert (out / "img_003.png").exists()


def test_requires_severity_column(tmp_path):
    m = Manifest((ImageRecord("a", "p", ClassLabel.SNE),))
    with pytest.raises(ValidationError, match="severity"):
        degrade_batch(m, tmp_path, tmp_path / "o", PipelineConfig(), seed=0)


def test_load_image_validates(tmp_path):
    bad = tmp_path / "bad.png"
    bad.write_bytes(b"nope")
    with pytest.raises(OSError):
        load_image(bad)


def test_degraded_images_differ_from_input(tmp_path):
    manifest, images_dir = make_dataset(tmp_path, n=6,
                                        severities=[Severity.EXTREME] * 6)
    out = tmp_path / "out"
    result = degrade_batch(manifest, images_dir, out, PipelineConfig(), seed=9)
    assert result.ok
    changed = sum(
        (images_dir / f"{r.image_id}.png").read_bytes() != (out / f"{r.image_id}.png").read_bytes()
        for r in manifest
    )
    assert changed == 6
