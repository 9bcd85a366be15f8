"""Largest-remainder integer apportionment, shared by splitter and severity assigner."""

from __future__ import annotations

import math
from typing import Sequence


def largest_remainder(fractions: Sequence[float], total: int) -> list[int]:
    """Apportion `total` items across categories proportionally to `fractions`.

    Floor quotas first, then hand leftovers to the largest fractional
    remainders; remainder ties break toward the lower category index, which
    keeps the result deterministic.
    """
    if total < 0:
        raise ValueError("total must be non-negative")
    ideal = [f * total for f in fractions]
    counts = [math.floor(x) for x in ideal]
    leftover = total - sum(counts)
    remainders = sorted(
        range(len(fractions)), key=lambda i: (-(ideal[i] - counts[i]), i)
    )
    for i in remainders[:leftover]:
        counts[i] += 1
    return counts
