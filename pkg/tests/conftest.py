import numpy as np
import pytest

from wbckit.core import ClassLabel, ImageRecord, Manifest


def make_manifest(spec, split=None):
    """spec: list of (image_id, patient_id, label_code)."""
    return Manifest(tuple(
        ImageRecord(image_id=i, patient_id=p, label=ClassLabel[c], split=split)
        for i, p, c in spec
    ))


def uniform_manifest(n, label="SNE", split=None, prefix="img", patient="pat0"):
    return make_manifest(
        [(f"{prefix}_{i:05d}", patient, label) for i in range(n)], split=split
    )


@pytest.fixture
def rng():
    return np.random.default_rng(20260823)
