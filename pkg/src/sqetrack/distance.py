"""Euclidean feature distances and intra-/inter-trajectory distance samples."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist, pdist

from .errors import ValidationError
from .trackmodel import Trajectory

MAX_PAIRS = 10_000

_INTRA = 0
_INTER = 1


@dataclass(frozen=True, eq=False)
class DistanceSamples:
    values: np.ndarray
    kind: str  # "intra" or "inter"
    ids: tuple[int, ...]
    subsampled: bool
    source_pair_count: int

    def __len__(self) -> int:
        return int(self.values.shape[0])


def feature_distance(f, g) -> float:
    f = np.asarray(f, dtype=np.float64)
    g = np.asarray(g, dtype=np.float64)
    if f.shape != g.shape:
        raise ValidationError(f"feature dimensions differ: {f.shape} vs {g.shape}")
    return float(np.sqrt(np.sum((f - g) ** 2)))


def pair_rng(seed: int, kind: int, a: int, b: int = -1) -> np.random.Generator:
    """Generator keyed by (seed, kind, ids); independent of evaluation order."""
    return np.random.default_rng(np.random.SeedSequence([seed, kind, a + 1, b + 1]))


def _cap(values: np.ndarray, max_pairs, rng_factory):
    total = values.shape[0]
    if max_pairs is None or total <= max_pairs:
        return values, False
    idx = rng_factory().choice(total, size=max_pairs, replace=False)
    idx.sort()
    return values[idx], True


def intra_distances(t: Trajectory, *, max_pairs: int | None = MAX_PAIRS, seed: int = 0) -> DistanceSamples:
    """All unordered pair distances within ``t`` (synthetic detections skipped).

    Fewer than two real detections gives an empty sample.
    """
    f = t.feature_matrix
    m = f.shape[0]
    total = m * (m - 1) // 2
    values = pdist(f) if m >= 2 else np.empty(0)
    values, sub = _cap(values, max_pairs, lambda: pair_rng(seed, _INTRA, t.id))
    return DistanceSamples(values, "intra", (t.id,), sub, total)


def inter_distances(a: Trajectory, b: Trajectory, *, max_pairs: int | None = MAX_PAIRS,
                    seed: int = 0) -> DistanceSamples:
    """All cross-pair distances between two trajectories, ordered by (a row, b row).

    The subsample (if any) is keyed on the unordered id pair, so swapping the
    arguments draws the same pairs.
    """
    if a.id == b.id:
        raise ValidationError("inter distances need two distinct trajectories")
    if a.id > b.id:
        a, b = b, a
    fa, fb = a.feature_matrix, b.feature_matrix
    if fa.shape[0] and fb.shape[0] and fa.shape[1] != fb.shape[1]:
        raise ValidationError("feature dimensions differ between trajectories")
    total = fa.shape[0] * fb.shape[0]
    values = cdist(fa, fb).ravel() if total else np.empty(0)
    values, sub = _cap(values, max_pairs, lambda: pair_rng(seed, _INTER, a.id, b.id))
    return DistanceSamples(values, "inter", (a.id, b.id), sub, total)
