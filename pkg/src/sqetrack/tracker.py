"""Appearance-only tracking-by-detection with tracklet merging and gap interpolation."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from ._backend import kernels
from .assignment import AssignmentProblem, solve_assignment
from .errors import ValidationError
from .trackmodel import Detection, DetectionStream, TrackSet, Trajectory


@dataclass(frozen=True)
class TrackerConfig:
    reid_threshold: float = 0.9
    merge_threshold: float = 1.0
    max_gap: int = 30

    def __post_init__(self):
        for name in ("reid_threshold", "merge_threshold"):
            val = getattr(self, name)
            if not (val > 0 and math.isfinite(val)):
                raise ValidationError(f"{name} must be positive, got {val}")
        if int(self.max_gap) != self.max_gap or self.max_gap < 0:
            raise ValidationError(f"max_gap must be a non-negative integer, got {self.max_gap}")

    def replace(self, **kw) -> "TrackerConfig":
        vals = {"reid_threshold": self.reid_threshold, "merge_threshold": self.merge_threshold,
                "max_gap": self.max_gap}
        vals.update(kw)
        return TrackerConfig(**vals)


class _Tracklet:
    __slots__ = ("dets", "sum", "count", "last")

    def __init__(self, det: Detection):
        self.dets = [det]
        self.sum = det.feature.astype(np.float64).copy()
        self.count = 1
        self.last = det.frame

    def add(self, det: Detection) -> None:
        self.dets.append(det)
        self.sum += det.feature
        self.count += 1
        self.last = det.frame


def associate(stream: DetectionStream, reid_threshold: float, max_gap: int) -> list[list[Detection]]:
    """Frame-by-frame assignment of detections to tracklets, in creation order."""
    tracklets: list[_Tracklet] = []
    active: list[int] = []
    for frame, dets in stream.frames:
        # a tracklet missing for more than max_gap frames is closed for good
        active = [k for k in active if frame - tracklets[k].last - 1 <= max_gap]
        if not dets:
            continue
        matched = [False] * len(dets)
        if active:
            reps = np.stack([tracklets[k].sum / tracklets[k].count for k in active])
            feats = np.stack([d.feature for d in dets])
            cost = cdist(reps, feats)
            pairs = solve_assignment(AssignmentProblem(cost, cost > reid_threshold))
            for r, c in pairs:
                tracklets[active[r]].add(dets[c])
                matched[c] = True
        for c, d in enumerate(dets):
            if not matched[c]:
                active.append(len(tracklets))
                tracklets.append(_Tracklet(d))
    return [t.dets for t in tracklets]


def _merge_groups(groups: list[list[Detection]], threshold: float) -> list[tuple[int, list[Detection]]]:
    """Greedy merging over detection groups listed in creation order.

    Returns the surviving (original index, detections) pairs in order.
    """
    mergeable = [k for k, g in enumerate(groups) if any(not d.synthetic for d in g)]
    if len(mergeable) < 2:
        return list(enumerate(groups))
    dim = next(d.feature for d in groups[mergeable[0]] if not d.synthetic).shape[0]
    sums = np.zeros((len(mergeable), dim))
    counts = np.zeros(len(mergeable))
    first = np.empty(len(mergeable), dtype=np.int64)
    last = np.empty(len(mergeable), dtype=np.int64)
    for row, k in enumerate(mergeable):
        real = [d.feature for d in groups[k] if not d.synthetic]
        sums[row] = np.sum(real, axis=0)
        counts[row] = len(real)
        first[row] = groups[k][0].frame
        last[row] = groups[k][-1].frame
    log = kernels.greedy_merge(sums, counts, first, last, float(threshold))
    out = [list(g) for g in groups]
    alive = [True] * len(groups)
    for a, b in log:
        ka, kb = mergeable[a], mergeable[b]
        out[ka] = sorted(out[ka] + out[kb], key=lambda d: d.frame)
        alive[kb] = False
    return [(k, g) for k, (g, keep) in enumerate(zip(out, alive)) if keep]


def merge_tracklets(ts: TrackSet, merge_threshold: float) -> TrackSet:
    """Merge frame-disjoint trajectories whose mean features are closer than the threshold.

    Closest pair first; the earlier trajectory (by first frame, then id)
    absorbs the later one and keeps its id. Trajectories whose spans overlap
    are never merged.
    """
    if not merge_threshold > 0:
        raise ValidationError("merge_threshold must be positive")
    order = sorted(ts.trajectories, key=lambda t: (t.first_frame, t.id))
    groups = _merge_groups([list(t.detections) for t in order], merge_threshold)
    trajs = [Trajectory(order[k].id, tuple(g)) for k, g in groups]
    return type(ts)(tuple(sorted(trajs, key=lambda t: t.id)), ts.feature_dim)


def _fill(dets) -> list[Detection]:
    out = [dets[0]]
    for prev, cur in zip(dets, dets[1:]):
        gap = cur.frame - prev.frame
        if gap > 1:
            b0 = np.array(prev.box)
            b1 = np.array(cur.box)
            for s in range(1, gap):
                w = s / gap
                box = tuple(float(v) for v in (1 - w) * b0 + w * b1)
                conf = (1 - w) * prev.confidence + w * cur.confidence
                out.append(Detection(prev.frame + s, box, conf, None, True))
        out.append(cur)
    return out


def interpolate(ts: TrackSet) -> TrackSet:
    """Fill frame gaps with linearly interpolated, featureless synthetic boxes."""
    trajs = tuple(Trajectory(t.id, tuple(_fill(t.detections))) for t in ts.trajectories)
    return type(ts)(trajs, ts.feature_dim)


def track(stream: DetectionStream, cfg: TrackerConfig = TrackerConfig()) -> TrackSet:
    """Associate, merge, interpolate. Output ids are 1, 2, ... in creation order."""
    groups = associate(stream, cfg.reid_threshold, cfg.max_gap)
    groups = _merge_groups(groups, cfg.merge_threshold)
    dim = next((ds[0].feature.shape[0] for _, ds in stream.frames if ds), None)
    trajs = tuple(Trajectory(k + 1, tuple(_fill(g))) for k, (_, g) in enumerate(groups))
    return TrackSet(trajs, dim)
