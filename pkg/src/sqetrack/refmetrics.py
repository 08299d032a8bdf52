"""Supervised reference metrics: CLEAR MOT (MOTA, MOTP) and identity metrics (IDF1, IDP, IDR)."""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .assignment import AssignmentProblem, solve_assignment
from .errors import UndefinedInputError, ValidationError
from .trackmodel import GroundTruth, TrackSet

IOU_THRESHOLD = 0.5


@dataclass(frozen=True)
class ClearCounts:
    fn_total: int
    fp_total: int
    ids_total: int
    gt_total: int
    matched_distance_sum: float
    matched_count: int


@dataclass(frozen=True)
class IdCounts:
    idtp: int
    idfp: int
    idfn: int


def mota_from_counts(c: ClearCounts) -> float:
    if c.gt_total == 0:
        if c.fp_total == 0:
            return 1.0
        raise UndefinedInputError("MOTA is undefined without ground-truth boxes")
    return 1.0 - (c.fn_total + c.fp_total + c.ids_total) / c.gt_total


def motp_from_counts(c: ClearCounts) -> float:
    return c.matched_distance_sum / c.matched_count if c.matched_count else 0.0


def iou_matrix(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Pairwise IOU between (n, 4) and (m, 4) arrays of (left, top, width, height)."""
    a = np.asarray(a, dtype=np.float64).reshape(-1, 4)
    b = np.asarray(b, dtype=np.float64).reshape(-1, 4)
    ax2, ay2 = a[:, 0] + a[:, 2], a[:, 1] + a[:, 3]
    bx2, by2 = b[:, 0] + b[:, 2], b[:, 1] + b[:, 3]
    iw = np.minimum(ax2[:, None], bx2[None]) - np.maximum(a[:, None, 0], b[None, :, 0])
    ih = np.minimum(ay2[:, None], by2[None]) - np.maximum(a[:, None, 1], b[None, :, 1])
    inter = np.clip(iw, 0, None) * np.clip(ih, 0, None)
    union = (a[:, 2] * a[:, 3])[:, None] + (b[:, 2] * b[:, 3])[None] - inter
    return inter / union


def _check_threshold(t: float) -> None:
    if not 0.0 < t < 1.0:
        raise ValidationError(f"iou_threshold must lie in (0, 1), got {t}")


def _frame_table(ts: TrackSet):
    """frame -> (ids array, boxes array), ids ascending."""
    out = {}
    for frame, rows in ts.frame_index().items():
        ids = np.array([tid for tid, _ in rows], dtype=np.int64)
        boxes = np.array([d.box for _, d in rows], dtype=np.float64)
        out[frame] = (ids, boxes)
    return out


def clear_mot(gt: GroundTruth, hyp: TrackSet, iou_threshold: float = IOU_THRESHOLD):
    """CLEAR MOT counts with match carry-over; returns (counts, mota, motp).

    A ground-truth object keeps its previous hypothesis while the pair still
    overlaps; the rest are matched by minimum (1 - IOU). An identity switch is
    counted when an object is matched to a hypothesis different from the last
    one it was matched to (at any earlier frame).
    """
    _check_threshold(iou_threshold)
    g_frames = _frame_table(gt)
    h_frames = _frame_table(hyp)
    empty = (np.empty(0, dtype=np.int64), np.empty((0, 4)))
    last: dict[int, int] = {}
    fn = fp = ids = gt_total = matched = 0
    dist_sum = 0.0
    for frame in sorted(set(g_frames) | set(h_frames)):
        g_ids, g_boxes = g_frames.get(frame, empty)
        h_ids, h_boxes = h_frames.get(frame, empty)
        gt_total += len(g_ids)
        iou = iou_matrix(g_boxes, h_boxes)
        ok = iou >= iou_threshold
        pairs: list[tuple[int, int]] = []
        g_free = np.ones(len(g_ids), dtype=bool)
        h_free = np.ones(len(h_ids), dtype=bool)
        h_pos = {int(h): j for j, h in enumerate(h_ids)}
        for i, g in enumerate(g_ids):
            j = h_pos.get(last.get(int(g), -1))
            if j is not None and h_free[j] and ok[i, j]:
                pairs.append((i, j))
                g_free[i] = h_free[j] = False
        gi = np.flatnonzero(g_free)
        hj = np.flatnonzero(h_free)
        if gi.size and hj.size:
            sub = AssignmentProblem(1.0 - iou[np.ix_(gi, hj)], ~ok[np.ix_(gi, hj)])
            for r, c in solve_assignment(sub):
                i, j = int(gi[r]), int(hj[c])
                g, h = int(g_ids[i]), int(h_ids[j])
                if g in last and last[g] != h:
                    ids += 1
                pairs.append((i, j))
        for i, j in pairs:
            last[int(g_ids[i])] = int(h_ids[j])
            dist_sum += 1.0 - float(iou[i, j])
        matched += len(pairs)
        fn += len(g_ids) - len(pairs)
        fp += len(h_ids) - len(pairs)
    counts = ClearCounts(fn, fp, ids, gt_total, dist_sum, matched)
    return counts, mota_from_counts(counts), motp_from_counts(counts)


def overlap_counts(gt: TrackSet, hyp: TrackSet, iou_threshold: float = IOU_THRESHOLD) -> np.ndarray:
    """m[g, h] = number of frames where gt trajectory g and hypothesis h overlap at the threshold.

    Rows and columns follow ``gt.trajectories`` and ``hyp.trajectories`` order.
    """
    g_row = {t.id: k for k, t in enumerate(gt.trajectories)}
    h_col = {t.id: k for k, t in enumerate(hyp.trajectories)}
    m = np.zeros((gt.n, hyp.n), dtype=np.int64)
    h_frames = _frame_table(hyp)
    for frame, (g_ids, g_boxes) in _frame_table(gt).items():
        if frame not in h_frames:
            continue
        h_ids, h_boxes = h_frames[frame]
        gi, hj = np.nonzero(iou_matrix(g_boxes, h_boxes) >= iou_threshold)
        rows = [g_row[int(g)] for g in g_ids[gi]]
        cols = [h_col[int(h)] for h in h_ids[hj]]
        np.add.at(m, (rows, cols), 1)
    return m


def id_counts_from_overlaps(m: np.ndarray, gt_total: int, hyp_total: int) -> IdCounts:
    """Truth-to-result counts from the overlap matrix.

    Minimising missed plus false frames over the dummy-padded trajectory
    assignment is the same as maximising the matched-frame total, so a
    rectangular max-weight matching on ``m`` suffices.
    """
    idtp = 0
    if m.size:
        pairs = solve_assignment(AssignmentProblem(-m.astype(np.float64)), tie_break=False)
        idtp = int(sum(m[r, c] for r, c in pairs))
    return IdCounts(idtp, hyp_total - idtp, gt_total - idtp)


def id_scores(c: IdCounts) -> tuple[float, float, float]:
    """(idf1, idp, idr); both-empty gives 1, empty truth with hypotheses gives 0."""
    if c.idtp + c.idfp + c.idfn == 0:
        return 1.0, 1.0, 1.0
    idf1 = 2 * c.idtp / (2 * c.idtp + c.idfp + c.idfn)
    idp = c.idtp / (c.idtp + c.idfp) if c.idtp + c.idfp else 0.0
    idr = c.idtp / (c.idtp + c.idfn) if c.idtp + c.idfn else 0.0
    return idf1, idp, idr


def id_metrics(gt: GroundTruth, hyp: TrackSet, iou_threshold: float = IOU_THRESHOLD):
    """Global truth-to-result identity matching; returns (counts, idf1, idp, idr)."""
    _check_threshold(iou_threshold)
    m = overlap_counts(gt, hyp, iou_threshold)
    counts = id_counts_from_overlaps(m, gt.total_detections(), hyp.total_detections())
    return (counts, *id_scores(counts))


@dataclass(frozen=True)
class SupervisedRow:
    sequence: str
    idf1: float
    idp: float
    idr: float
    mota: float
    motp: float
    fn: int
    fp: int
    ids: int


CSV_HEADER = ["sequence", "IDF1", "IDP", "IDR", "MOTA", "MOTP", "FN", "FP", "IDS"]


def evaluate_supervised(gt: GroundTruth, hyp: TrackSet, sequence: str = "seq",
                        iou_threshold: float = IOU_THRESHOLD) -> SupervisedRow:
    clear, mota, motp = clear_mot(gt, hyp, iou_threshold)
    _, idf1, idp, idr = id_metrics(gt, hyp, iou_threshold)
    return SupervisedRow(sequence, idf1, idp, idr, mota, motp,
                         clear.fn_total, clear.fp_total, clear.ids_total)


def write_supervised_csv(rows, path) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for r in rows:
            w.writerow([r.sequence, repr(r.idf1), repr(r.idp), repr(r.idr), repr(r.mota),
                        repr(r.motp), r.fn, r.fp, r.ids])
