"""Ground-truth-free tracking quality score.

Each trajectory is checked for being a false alarm (short and with widely
spread intra distances) or for mixing two identities (bimodal intra
distances); each pair of remaining trajectories is checked for sharing an
identity (bimodal inter distances). The counts are combined with the number
of trajectories ``n`` and their mean length ``L`` as

    SQE = n * L / (n + k1 * L + k2 * (fp + dif + sim))
"""
from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass
from itertools import combinations
from pathlib import Path

import numpy as np
from scipy.spatial.distance import pdist

from . import gmm
from ._backend import kernels
from .distance import MAX_PAIRS, inter_distances, intra_distances
from .errors import EstimationInfeasibleError, ValidationError
from .gmm import MIN_FIT_SAMPLES, GmmFit, fit_gmm2, sample_stats
from .trackmodel import TrackSet, Trajectory, mean_length


@dataclass(frozen=True)
class SqeParams:
    delta_L: float = 15.0
    delta_D: float = 0.2
    delta_m: float = 0.3
    k1: float = 1.0
    k2: float = 2.0

    def __post_init__(self):
        for name, val in asdict(self).items():
            if not (val > 0 and math.isfinite(val)):
                raise ValidationError(f"{name} must be a positive finite number, got {val}")

    def with_k2(self, k2: float) -> "SqeParams":
        return SqeParams(self.delta_L, self.delta_D, self.delta_m, self.k1, k2)


@dataclass(frozen=True)
class Verdict:
    id: int
    length: int
    intra_std: float  # inf when fewer than two featured detections
    is_false_alarm: bool
    intra_mean_gap: float | None  # None when no mixture was fitted
    flagged_dif: bool


@dataclass(frozen=True)
class SqeReport:
    n: int
    L: float
    fp: int
    dif: int
    sim: int
    sqe: float
    params: SqeParams
    verdicts: tuple[Verdict, ...] = ()
    pair_flags: tuple[tuple[int, int], ...] = ()

    @property
    def errors(self) -> int:
        return self.fp + self.dif + self.sim


@dataclass(frozen=True)
class ErrorEstimate:
    n1: int
    n2: int
    idtp: int
    idfp: int


def sqe_value(n: int, L: float, fp: int, dif: int, sim: int, p: SqeParams) -> float:
    if n == 0 or L == 0:
        return 0.0
    return n * L / (n + p.k1 * L + p.k2 * (fp + dif + sim))


def _verdict(t: Trajectory, std: float, gap: float | None, p: SqeParams) -> Verdict:
    fa = t.length < p.delta_L and std > p.delta_D
    if fa:
        gap = None
    return Verdict(t.id, t.length, std, fa, gap, gap is not None and gap > p.delta_m)


def classify_trajectory(t: Trajectory, p: SqeParams, *, max_pairs: int | None = MAX_PAIRS,
                        seed: int = 0) -> Verdict:
    """False-alarm check, then (if not a false alarm) the two-identity check."""
    d = intra_distances(t, max_pairs=max_pairs, seed=seed)
    std = sample_stats(d).std if len(d) else math.inf
    gap = None
    if not (t.length < p.delta_L and std > p.delta_D) and len(d) >= MIN_FIT_SAMPLES:
        gap = fit_gmm2(d).mean_gap
    return _verdict(t, std, gap, p)


def pair_gap(a: Trajectory, b: Trajectory, *, max_pairs: int | None = MAX_PAIRS,
             seed: int = 0) -> float | None:
    d = inter_distances(a, b, max_pairs=max_pairs, seed=seed)
    if len(d) < MIN_FIT_SAMPLES:
        return None
    return fit_gmm2(d).mean_gap


def classify_pair(a: Trajectory, b: Trajectory, p: SqeParams, *,
                  max_pairs: int | None = MAX_PAIRS, seed: int = 0) -> bool:
    """True when the cross distances of ``a`` and ``b`` look bimodal."""
    gap = pair_gap(a, b, max_pairs=max_pairs, seed=seed)
    return gap is not None and gap > p.delta_m


def _overlap(a: Trajectory, b: Trajectory) -> bool:
    return a.first_frame <= b.last_frame and b.first_frame <= a.last_frame


class _Batch:
    """Stacks trajectory features once so the kernel computes distances and fits in bulk."""

    def __init__(self, trajs):
        mats = [t.feature_matrix for t in trajs]
        counts = np.array([m.shape[0] for m in mats], dtype=np.int64)
        self.counts = counts
        self.offsets = np.zeros(len(mats) + 1, dtype=np.int64)
        np.cumsum(counts, out=self.offsets[1:])
        dims = {m.shape[1] for m in mats if m.shape[0]}
        dim = dims.pop() if dims else 1
        self.feats = np.zeros((int(self.offsets[-1]), dim))
        for k, m in enumerate(mats):
            if m.shape[0]:
                self.feats[self.offsets[k]:self.offsets[k + 1]] = m

    def gaps(self, tasks) -> np.ndarray:
        if not tasks:
            return np.empty(0)
        arr = np.ascontiguousarray(tasks, dtype=np.int64).reshape(-1, 2)
        return kernels.batch_gaps(self.feats, self.offsets, arr, gmm.TOL, gmm.MAX_ITER,
                                  gmm.VAR_FLOOR)


def evaluate(ts: TrackSet, p: SqeParams = SqeParams(), *, seed: int = 0,
             max_pairs: int | None = MAX_PAIRS, overlapping_only: bool = False) -> SqeReport:
    """Score a track set without ground truth.

    Pair samples larger than ``max_pairs`` are subsampled deterministically
    from ``seed`` and the trajectory ids. ``overlapping_only`` restricts the
    shared-identity check to trajectories whose frame spans intersect.
    """
    trajs = sorted(ts.trajectories, key=lambda t: t.id)
    n = len(trajs)
    if n == 0:
        return SqeReport(0, 0.0, 0, 0, 0, 0.0, p)
    L = mean_length(ts)
    batch = _Batch(trajs)
    counts = batch.counts
    cap = math.inf if max_pairs is None else max_pairs

    # intra: std for everything, mixture only where the false-alarm test passes
    stds = np.full(n, math.inf)
    gaps: list[float | None] = [None] * n
    fit_tasks, fit_idx = [], []
    for k, t in enumerate(trajs):
        c = int(counts[k])
        if c < 2:
            continue
        pairs = c * (c - 1) // 2
        if pairs > cap:
            d = intra_distances(t, max_pairs=max_pairs, seed=seed)
            stds[k] = sample_stats(d).std
            if not (t.length < p.delta_L and stds[k] > p.delta_D):
                gaps[k] = fit_gmm2(d).mean_gap
            continue
        f = batch.feats[batch.offsets[k]:batch.offsets[k + 1]]
        stds[k] = _pdist_std(f)
        if t.length < p.delta_L and stds[k] > p.delta_D:
            continue
        if pairs >= MIN_FIT_SAMPLES:
            fit_tasks.append((k, k))
            fit_idx.append(k)
    for k, g in zip(fit_idx, batch.gaps(fit_tasks)):
        gaps[k] = float(g)
    verdicts = tuple(_verdict(t, float(stds[k]), gaps[k], p) for k, t in enumerate(trajs))

    # inter: every pair of non-false-alarm trajectories
    keep = [k for k, v in enumerate(verdicts) if not v.is_false_alarm]
    tasks, big = [], []
    for a, b in combinations(keep, 2):
        if overlapping_only and not _overlap(trajs[a], trajs[b]):
            continue
        m = int(counts[a]) * int(counts[b])
        if m < MIN_FIT_SAMPLES:
            continue
        (big if m > cap else tasks).append((a, b))
    flags = []
    for (a, b), g in zip(tasks, batch.gaps(tasks)):
        if g > p.delta_m:
            flags.append((trajs[a].id, trajs[b].id))
    for a, b in big:
        if classify_pair(trajs[a], trajs[b], p, max_pairs=max_pairs, seed=seed):
            flags.append((trajs[a].id, trajs[b].id))
    flags.sort()

    fp = sum(v.is_false_alarm for v in verdicts)
    dif = sum(v.flagged_dif for v in verdicts)
    sim = len(flags)
    return SqeReport(n, L, fp, dif, sim, sqe_value(n, L, fp, dif, sim, p), p, verdicts,
                     tuple(flags))


def _pdist_std(f: np.ndarray) -> float:
    return float(pdist(f).std())


# ----------------------------------------------------------------------------- error estimate


def split_from_pair_count(L: int, N: int) -> tuple[int, int]:
    """Integer (n1, n2), n1 >= n2, with n1 + n2 = L and n1 * n2 as close to N as possible."""
    if L < 0 or N < 0:
        raise ValidationError("L and N must be non-negative")
    disc = L * L - 4 * N
    if disc < 0:
        raise EstimationInfeasibleError(
            f"{N} cross pairs cannot come from a split of {L} detections (max {L * L // 4})"
        )
    root = (L + math.sqrt(disc)) / 2
    cands = {min(L, max(math.ceil(L / 2), c)) for c in (math.floor(root), math.ceil(root))}
    n1 = min(cands, key=lambda c: (abs(c * (L - c) - N), -c))
    return n1, L - n1


def estimate_errors(t: Trajectory, fit: GmmFit) -> ErrorEstimate:
    """Sizes of the two identity segments of a trajectory flagged as mixed.

    N counts the intra distances (all pairs, no subsampling) that the fit
    assigns to its larger-mean component.
    """
    d = intra_distances(t, max_pairs=None)
    if len(d) == 0:
        raise ValidationError(f"trajectory {t.id} has no intra distances")
    N = int(np.count_nonzero(fit.responsibilities(d.values)[:, 1] > 0.5))
    n1, n2 = split_from_pair_count(t.feature_matrix.shape[0], N)
    return ErrorEstimate(n1, n2, n1, n2)


# ----------------------------------------------------------------------------- serialization


def _num(x) -> str:
    return "" if x is None else repr(float(x))


def report_text(r: SqeReport) -> str:
    p = r.params
    lines = [
        f"n = {r.n}",
        f"L = {r.L!r}",
        f"fp = {r.fp}",
        f"dif = {r.dif}",
        f"sim = {r.sim}",
        f"sqe = {r.sqe!r}",
        f"delta_L = {p.delta_L!r}",
        f"delta_D = {p.delta_D!r}",
        f"delta_m = {p.delta_m!r}",
        f"k1 = {p.k1!r}",
        f"k2 = {p.k2!r}",
        "pair_flags = " + " ".join(f"{a}:{b}" for a, b in r.pair_flags),
    ]
    return "\n".join(lines) + "\n"


VERDICT_HEADER = ["id", "length", "intra_std", "is_false_alarm", "intra_mean_gap", "flagged_dif"]


def write_report(r: SqeReport, path, verdicts_path=None) -> None:
    Path(path).write_text(report_text(r))
    if verdicts_path is not None:
        with Path(verdicts_path).open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(VERDICT_HEADER)
            for v in r.verdicts:
                w.writerow([v.id, v.length, _num(v.intra_std), int(v.is_false_alarm),
                            _num(v.intra_mean_gap), int(v.flagged_dif)])


def parse_report_text(text: str) -> dict[str, str]:
    out = {}
    for line in text.splitlines():
        if "=" in line:
            k, v = line.split("=", 1)
            out[k.strip()] = v.strip()
    return out


__all__ = [
    "SqeParams", "Verdict", "SqeReport", "ErrorEstimate", "sqe_value", "classify_trajectory",
    "classify_pair", "pair_gap", "evaluate", "split_from_pair_count", "estimate_errors",
    "report_text", "write_report", "parse_report_text",
]
