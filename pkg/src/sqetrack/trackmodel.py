"""Detections, trajectories and track sets, with MOTChallenge-style file I/O.

Tracks file rows are ``frame,id,bb_left,bb_top,bb_width,bb_height,conf,x,y,z``
(the last three are ignored on read and written as -1). Feature files hold
``frame,id,f_1,...,f_N``. Floats are written with ``repr`` so a save/load cycle
is lossless.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable

import numpy as np

from .errors import ParseError, UndefinedInputError, ValidationError

Box = tuple[float, float, float, float]


def as_feature(values) -> np.ndarray:
    """Read-only float64 copy of ``values``; rejects empty or non-finite vectors."""
    arr = np.array(values, dtype=np.float64).reshape(-1)
    if arr.size == 0:
        raise ValidationError("feature vector must have dimension >= 1")
    if not np.all(np.isfinite(arr)):
        raise ValidationError("feature vector has non-finite entries")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Detection:
    frame: int
    box: Box
    confidence: float = 1.0
    feature: np.ndarray | None = None
    # interpolated boxes: no feature, never enter distance statistics
    synthetic: bool = False

    def __post_init__(self):
        if int(self.frame) != self.frame or self.frame < 0:
            raise ValidationError(f"frame must be a non-negative integer, got {self.frame!r}")
        box = tuple(float(b) for b in self.box)
        if len(box) != 4:
            raise ValidationError("box must be (left, top, width, height)")
        if not (box[2] > 0 and box[3] > 0):
            raise ValidationError(f"box width/height must be positive, got {box}")
        if not all(math.isfinite(b) for b in box):
            raise ValidationError(f"box has non-finite entries: {box}")
        if not 0.0 <= self.confidence <= 1.0:
            raise ValidationError(f"confidence must lie in [0, 1], got {self.confidence}")
        object.__setattr__(self, "frame", int(self.frame))
        object.__setattr__(self, "box", box)
        object.__setattr__(self, "confidence", float(self.confidence))
        if self.feature is not None:
            object.__setattr__(self, "feature", as_feature(self.feature))

    def __eq__(self, other):
        if not isinstance(other, Detection):
            return NotImplemented
        if (self.frame, self.box, self.confidence, self.synthetic) != (
            other.frame, other.box, other.confidence, other.synthetic
        ):
            return False
        if self.feature is None or other.feature is None:
            return self.feature is None and other.feature is None
        return np.array_equal(self.feature, other.feature)

    __hash__ = None  # type: ignore[assignment]


@dataclass(frozen=True)
class Trajectory:
    id: int
    detections: tuple[Detection, ...]

    def __post_init__(self):
        if int(self.id) != self.id or self.id < 0:
            raise ValidationError(f"trajectory id must be a non-negative integer, got {self.id!r}")
        dets = tuple(self.detections)
        if not dets:
            raise ValidationError(f"trajectory {self.id} has no detections")
        for prev, cur in zip(dets, dets[1:]):
            if cur.frame <= prev.frame:
                raise ValidationError(
                    f"trajectory {self.id}: frames must be strictly increasing "
                    f"({prev.frame} then {cur.frame})"
                )
        object.__setattr__(self, "id", int(self.id))
        object.__setattr__(self, "detections", dets)

    def __len__(self) -> int:
        return len(self.detections)

    @property
    def length(self) -> int:
        return len(self.detections)

    @property
    def first_frame(self) -> int:
        return self.detections[0].frame

    @property
    def last_frame(self) -> int:
        return self.detections[-1].frame

    @cached_property
    def frames(self) -> np.ndarray:
        return np.array([d.frame for d in self.detections], dtype=np.int64)

    @cached_property
    def boxes(self) -> np.ndarray:
        return np.array([d.box for d in self.detections], dtype=np.float64).reshape(-1, 4)

    @cached_property
    def feature_matrix(self) -> np.ndarray:
        """Features of the non-synthetic detections, one row each.

        Raises ValidationError if a real detection lacks a feature.
        """
        rows = []
        for d in self.detections:
            if d.synthetic:
                continue
            if d.feature is None:
                raise ValidationError(
                    f"trajectory {self.id}: detection at frame {d.frame} has no feature"
                )
            rows.append(d.feature)
        if not rows:
            return np.empty((0, 0))
        return np.vstack(rows)

    def with_id(self, new_id: int) -> "Trajectory":
        return Trajectory(new_id, self.detections)


@dataclass(frozen=True)
class TrackSet:
    trajectories: tuple[Trajectory, ...] = ()
    feature_dim: int | None = field(default=None)

    def __post_init__(self):
        trajs = tuple(self.trajectories)
        ids = [t.id for t in trajs]
        if len(set(ids)) != len(ids):
            raise ValidationError("trajectory ids must be unique")
        dims = {
            d.feature.shape[0]
            for t in trajs
            for d in t.detections
            if d.feature is not None
        }
        if len(dims) > 1:
            raise ValidationError(f"feature dimensions differ across detections: {sorted(dims)}")
        dim = dims.pop() if dims else None
        if self.feature_dim is not None and dim is not None and dim != self.feature_dim:
            raise ValidationError(f"declared feature_dim {self.feature_dim} but features have {dim}")
        object.__setattr__(self, "trajectories", trajs)
        object.__setattr__(self, "feature_dim", dim if dim is not None else self.feature_dim)

    def __len__(self) -> int:
        return len(self.trajectories)

    def __iter__(self):
        return iter(self.trajectories)

    @property
    def n(self) -> int:
        return len(self.trajectories)

    @property
    def ids(self) -> list[int]:
        return [t.id for t in self.trajectories]

    def by_id(self) -> dict[int, Trajectory]:
        return {t.id: t for t in self.trajectories}

    def total_detections(self) -> int:
        return sum(t.length for t in self.trajectories)

    def sorted(self) -> "TrackSet":
        return type(self)(tuple(sorted(self.trajectories, key=lambda t: t.id)), self.feature_dim)

    def frame_index(self) -> dict[int, list[tuple[int, Detection]]]:
        """frame -> [(trajectory id, detection)], ids ascending."""
        out: dict[int, list[tuple[int, Detection]]] = {}
        for t in sorted(self.trajectories, key=lambda t: t.id):
            for d in t.detections:
                out.setdefault(d.frame, []).append((t.id, d))
        return out


class GroundTruth(TrackSet):
    """Annotated trajectories; features, if any, are ignored by the metrics."""


def mean_length(ts: TrackSet) -> float:
    if ts.n == 0:
        raise UndefinedInputError("mean length of an empty track set is undefined")
    return sum(t.length for t in ts.trajectories) / ts.n


# ----------------------------------------------------------------------------- I/O


def _rows(path):
    path = Path(path)
    with path.open(newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            cells = [c.strip() for c in row]
            if not cells or all(c == "" for c in cells) or cells[0].startswith("#"):
                continue
            yield lineno, cells


def _is_header(cells) -> bool:
    return cells[0].lower() == "frame"


def _parse_int(path, lineno, text):
    try:
        val = float(text)
    except ValueError:
        raise ParseError(path, lineno, f"not a number: {text!r}") from None
    if not val.is_integer():
        raise ParseError(path, lineno, f"expected an integer, got {text!r}")
    return int(val)


def _parse_float(path, lineno, text):
    try:
        return float(text)
    except ValueError:
        raise ParseError(path, lineno, f"not a number: {text!r}") from None


def _read_track_rows(path):
    """Yield (lineno, frame, id, box, conf) from a tracks-layout file."""
    first = True
    for lineno, cells in _rows(path):
        if first and _is_header(cells):
            first = False
            continue
        first = False
        if not 7 <= len(cells) <= 10:
            raise ParseError(path, lineno, f"expected 7-10 columns, got {len(cells)}")
        frame = _parse_int(path, lineno, cells[0])
        tid = _parse_int(path, lineno, cells[1])
        box = tuple(_parse_float(path, lineno, c) for c in cells[2:6])
        conf = _parse_float(path, lineno, cells[6])
        yield lineno, frame, tid, box, conf


def load_features(path) -> dict[tuple[int, int], np.ndarray]:
    feats: dict[tuple[int, int], np.ndarray] = {}
    dim = None
    first = True
    for lineno, cells in _rows(path):
        if first and _is_header(cells):
            first = False
            continue
        first = False
        if len(cells) < 3:
            raise ParseError(path, lineno, "feature row needs frame, id and at least one value")
        frame = _parse_int(path, lineno, cells[0])
        tid = _parse_int(path, lineno, cells[1])
        vals = [_parse_float(path, lineno, c) for c in cells[2:]]
        if dim is None:
            dim = len(vals)
        elif len(vals) != dim:
            raise ValidationError(
                f"{path}:{lineno}: feature dimension {len(vals)} differs from {dim}"
            )
        if (frame, tid) in feats:
            raise ValidationError(f"{path}:{lineno}: duplicate feature row for ({frame}, {tid})")
        try:
            feats[(frame, tid)] = as_feature(vals)
        except ValidationError as exc:
            raise ValidationError(f"{path}:{lineno}: {exc}") from None
    return feats


def load_trackset(tracks_path, features_path=None, *, require_all_features: bool = True,
                  cls=TrackSet) -> TrackSet:
    """Load a tracks file (and optionally its features) into a track set.

    With ``require_all_features=False`` rows lacking a feature row are loaded as
    synthetic (interpolated) detections, which is how tracker output is stored.
    """
    feats = load_features(features_path) if features_path is not None else None
    groups: dict[int, list[Detection]] = {}
    seen: set[tuple[int, int]] = set()
    for lineno, frame, tid, box, conf in _read_track_rows(tracks_path):
        key = (frame, tid)
        if key in seen:
            raise ValidationError(f"{tracks_path}:{lineno}: duplicate (frame, id) = {key}")
        seen.add(key)
        feature = None
        synthetic = False
        if feats is not None:
            feature = feats.get(key)
            if feature is None:
                if require_all_features:
                    raise ValidationError(f"{tracks_path}:{lineno}: no feature row for {key}")
                synthetic = True
        try:
            det = Detection(frame, box, conf, feature, synthetic)
        except ValidationError as exc:
            raise ValidationError(f"{tracks_path}:{lineno}: {exc}") from None
        groups.setdefault(tid, []).append(det)
    if feats is not None:
        extra = set(feats) - seen
        if extra:
            raise ValidationError(f"{features_path}: feature rows without detections: {sorted(extra)[:5]}")
    trajs = []
    for tid in sorted(groups):
        dets = sorted(groups[tid], key=lambda d: d.frame)
        trajs.append(Trajectory(tid, tuple(dets)))
    return cls(tuple(trajs))


def load_groundtruth(path) -> GroundTruth:
    return load_trackset(path, None, cls=GroundTruth)


def _fmt(x: float) -> str:
    return repr(float(x))


def save_trackset(ts: TrackSet, tracks_path, features_path=None) -> None:
    """Write tracks (and, if requested, features of non-synthetic detections)."""
    rows = sorted(
        ((d.frame, t.id, d) for t in ts.trajectories for d in t.detections),
        key=lambda r: (r[0], r[1]),
    )
    with Path(tracks_path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        for frame, tid, d in rows:
            w.writerow([frame, tid, *(_fmt(b) for b in d.box), _fmt(d.confidence), -1, -1, -1])
    if features_path is not None:
        with Path(features_path).open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            for frame, tid, d in rows:
                if d.feature is not None:
                    w.writerow([frame, tid, *(_fmt(v) for v in d.feature)])


# ----------------------------------------------------------------------------- streams


@dataclass(frozen=True)
class DetectionStream:
    """Per-frame detections for the tracker, frames ascending."""

    frames: tuple[tuple[int, tuple[Detection, ...]], ...]

    def __post_init__(self):
        frames = tuple((int(f), tuple(ds)) for f, ds in self.frames)
        dims = set()
        for (f, ds), nxt in zip(frames, frames[1:] + ((None, ()),)):
            if nxt[0] is not None and nxt[0] <= f:
                raise ValidationError("detection stream frames must be strictly ascending")
            for d in ds:
                if d.frame != f:
                    raise ValidationError(f"detection frame {d.frame} filed under frame {f}")
                if d.feature is None:
                    raise ValidationError(f"detection at frame {f} has no feature")
                dims.add(d.feature.shape[0])
        if len(dims) > 1:
            raise ValidationError(f"feature dimensions differ in stream: {sorted(dims)}")
        object.__setattr__(self, "frames", frames)

    @classmethod
    def from_detections(cls, dets: Iterable[Detection]) -> "DetectionStream":
        by_frame: dict[int, list[Detection]] = {}
        for d in dets:
            by_frame.setdefault(d.frame, []).append(d)
        return cls(tuple((f, tuple(by_frame[f])) for f in sorted(by_frame)))

    def __len__(self) -> int:
        return len(self.frames)

    def total(self) -> int:
        return sum(len(ds) for _, ds in self.frames)


def load_detections(detections_path, features_path) -> DetectionStream:
    """Detections file (tracks layout, id column -1) plus features keyed by (frame, row index).

    Several detections share id -1 within a frame, so feature rows are matched
    to detection rows by order of appearance within each frame.
    """
    feats_rows: dict[int, list[np.ndarray]] = {}
    dim = None
    first = True
    for lineno, cells in _rows(features_path):
        if first and _is_header(cells):
            first = False
            continue
        first = False
        if len(cells) < 3:
            raise ParseError(features_path, lineno, "feature row needs frame, id and values")
        frame = _parse_int(features_path, lineno, cells[0])
        vals = [_parse_float(features_path, lineno, c) for c in cells[2:]]
        if dim is None:
            dim = len(vals)
        elif len(vals) != dim:
            raise ValidationError(f"{features_path}:{lineno}: feature dimension mismatch")
        feats_rows.setdefault(frame, []).append(as_feature(vals))
    dets = []
    used: dict[int, int] = {}
    for lineno, frame, _tid, box, conf in _read_track_rows(detections_path):
        k = used.get(frame, 0)
        rows = feats_rows.get(frame, [])
        if k >= len(rows):
            raise ValidationError(f"{detections_path}:{lineno}: no feature row for detection")
        used[frame] = k + 1
        dets.append(Detection(frame, box, conf, rows[k]))
    for frame, rows in feats_rows.items():
        if used.get(frame, 0) != len(rows):
            raise ValidationError(f"{features_path}: frame {frame} has unmatched feature rows")
    return DetectionStream.from_detections(dets)


def save_detections(stream: DetectionStream, detections_path, features_path) -> None:
    with Path(detections_path).open("w", newline="") as fh, Path(features_path).open(
        "w", newline=""
    ) as gh:
        w = csv.writer(fh, lineterminator="\n")
        g = csv.writer(gh, lineterminator="\n")
        for frame, ds in stream.frames:
            for d in ds:
                w.writerow([frame, -1, *(_fmt(b) for b in d.box), _fmt(d.confidence), -1, -1, -1])
                g.writerow([frame, -1, *(_fmt(v) for v in d.feature)])

