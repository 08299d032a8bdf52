"""Parameter sweeps scored by SQE (and optionally by ground truth), alternating
two-parameter tuning, and SQE-vs-IDF1 agreement reports."""
from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.stats import spearmanr

from .errors import SqeTrackError, ValidationError
from .refmetrics import clear_mot, id_metrics
from .sqe import SqeParams, SqeReport, evaluate
from .tracker import TrackerConfig, track
from .trackmodel import DetectionStream, GroundTruth

PARAMETERS = ("reid_threshold", "merge_threshold")
ALIASES = {"reid": "reid_threshold", "merge": "merge_threshold"}
K2_REID = 2.0
K2_MERGE = 10.0
STEP = 0.05


class SweepError(SqeTrackError):
    def __init__(self, parameter: str, value: float, cause: Exception):
        self.parameter = parameter
        self.value = value
        super().__init__(f"{parameter}={value!r}: {type(cause).__name__}: {cause}")


@dataclass(frozen=True)
class GridSpec:
    parameter: str
    start: float
    stop: float
    step: float = STEP

    def __post_init__(self):
        param = ALIASES.get(self.parameter, self.parameter)
        if param not in PARAMETERS:
            raise ValidationError(f"unknown parameter {self.parameter!r}")
        if not (math.isfinite(self.start) and math.isfinite(self.stop) and self.start < self.stop):
            raise ValidationError(f"grid needs start < stop, got {self.start}..{self.stop}")
        if not (self.step > 0 and math.isfinite(self.step)):
            raise ValidationError(f"grid step must be positive, got {self.step}")
        if self.start <= 0:
            raise ValidationError("threshold grids must start above zero")
        object.__setattr__(self, "parameter", param)

    def values(self) -> list[float]:
        """Inclusive of ``stop`` when it falls on the grid; rounded to kill float drift."""
        count = int(math.floor((self.stop - self.start) / self.step + 1e-9)) + 1
        return [round(self.start + k * self.step, 10) for k in range(count)]


@dataclass(frozen=True)
class SweepRow:
    value: float
    sqe: float
    idf1: float | None
    mota: float | None
    report: SqeReport


@dataclass(frozen=True)
class SweepResult:
    parameter: str
    rows: tuple[SweepRow, ...]
    name: str = ""

    @property
    def values(self) -> list[float]:
        return [r.value for r in self.rows]

    @property
    def has_truth(self) -> bool:
        return bool(self.rows) and all(r.idf1 is not None for r in self.rows)

    @property
    def argmax_sqe(self) -> float:
        return _argmax(self.rows, lambda r: r.sqe)

    @property
    def argmax_idf1(self) -> float | None:
        return _argmax(self.rows, lambda r: r.idf1) if self.has_truth else None

    def row_at(self, value: float) -> SweepRow:
        for r in self.rows:
            if r.value == value:
                return r
        raise KeyError(value)


def _argmax(rows, key) -> float:
    """Value of the best row; ties go to the smallest parameter value."""
    best = max(key(r) for r in rows)
    return min(r.value for r in rows if key(r) == best)


def point_seed(seed: int, value: float) -> int:
    """Per-grid-point seed derived from the global seed and the parameter value."""
    ss = np.random.SeedSequence([seed, int(round(value * 1_000_000))])
    return int(ss.generate_state(1)[0])


def evaluate_point(stream: DetectionStream, cfg: TrackerConfig, p: SqeParams,
                   gt: GroundTruth | None, *, seed: int, value: float,
                   max_pairs: int | None = None) -> SweepRow:
    kw = {} if max_pairs is None else {"max_pairs": max_pairs}
    ts = track(stream, cfg)
    rep = evaluate(ts, p, seed=point_seed(seed, value), **kw)
    idf1 = mota = None
    if gt is not None:
        _, idf1, _, _ = id_metrics(gt, ts)
        _, mota, _ = clear_mot(gt, ts)
    return SweepRow(value, rep.sqe, idf1, mota, rep)


def sweep(stream: DetectionStream, grid: GridSpec, fixed: TrackerConfig, p: SqeParams,
          gt: GroundTruth | None = None, *, seed: int = 0, threads: int = 1,
          name: str = "", max_pairs: int | None = None) -> SweepResult:
    """Run the tracker at every grid value of one parameter and score each output.

    Rows come back in grid order whatever ``threads`` is.
    """
    values = grid.values()

    def run(v: float) -> SweepRow:
        try:
            cfg = fixed.replace(**{grid.parameter: v})
            return evaluate_point(stream, cfg, p, gt, seed=seed, value=v, max_pairs=max_pairs)
        except Exception as exc:  # noqa: BLE001 - re-raised with the grid value attached
            raise SweepError(grid.parameter, v, exc) from exc

    if threads > 1 and len(values) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = tuple(pool.map(run, values))
    else:
        rows = tuple(run(v) for v in values)
    return SweepResult(grid.parameter, rows, name)


@dataclass(frozen=True)
class TuneOutcome:
    baseline_params: tuple[float, float]
    customized_params: tuple[float, float]
    sweeps: tuple[SweepResult, ...]

    @property
    def rows(self) -> list[tuple[int, str, float, float]]:
        """(phase, parameter, value, sqe) for every evaluated point."""
        return [(k, s.parameter, r.value, r.sqe) for k, s in enumerate(self.sweeps) for r in s.rows]


def tune_alternating(stream: DetectionStream, baseline: TrackerConfig,
                     grids: tuple[GridSpec, GridSpec], p: SqeParams = SqeParams(),
                     rounds: int = 1, *, k2: tuple[float, float] = (K2_REID, K2_MERGE),
                     gt: GroundTruth | None = None, seed: int = 0, threads: int = 1,
                     max_pairs: int | None = None) -> TuneOutcome:
    """Alternately re-tune the REID threshold and the merge threshold by SQE.

    Each round sweeps ``grids[0]`` with the other parameter fixed, adopts the
    SQE argmax, then does the same for ``grids[1]``. ``k2`` gives the error
    weight used while sweeping each parameter.
    """
    if rounds < 1:
        raise ValidationError("rounds must be >= 1")
    if {g.parameter for g in grids} != set(PARAMETERS):
        raise ValidationError("need one grid per parameter")
    cfg = baseline
    done = []
    for _ in range(rounds):
        for grid in grids:
            weight = k2[0] if grid.parameter == "reid_threshold" else k2[1]
            res = sweep(stream, grid, cfg, p.with_k2(weight), gt, seed=seed, threads=threads,
                        max_pairs=max_pairs)
            done.append(res)
            cfg = cfg.replace(**{grid.parameter: res.argmax_sqe})
    return TuneOutcome(
        (baseline.reid_threshold, baseline.merge_threshold),
        (cfg.reid_threshold, cfg.merge_threshold),
        tuple(done),
    )


# ----------------------------------------------------------------------------- reports


@dataclass(frozen=True)
class AgreementRow:
    name: str
    parameter: str
    argmax_sqe: float
    argmax_idf1: float
    delta_parameter: float
    delta_idf1_points: float
    spearman: float


@dataclass(frozen=True)
class AgreementSummary:
    rows: tuple[AgreementRow, ...]
    param_tolerance: float
    idf1_tolerance: float

    @property
    def fraction_param_close(self) -> float:
        return sum(r.delta_parameter <= self.param_tolerance + 1e-9 for r in self.rows) / len(self.rows)

    @property
    def fraction_idf1_close(self) -> float:
        return sum(r.delta_idf1_points <= self.idf1_tolerance + 1e-9 for r in self.rows) / len(self.rows)

    @property
    def mean_spearman(self) -> float:
        vals = [r.spearman for r in self.rows if not math.isnan(r.spearman)]
        return float(np.mean(vals)) if vals else math.nan


def spearman(xs, ys) -> float:
    xs, ys = np.asarray(xs, dtype=float), np.asarray(ys, dtype=float)
    if xs.size < 2 or np.all(xs == xs[0]) or np.all(ys == ys[0]):
        return math.nan
    return float(spearmanr(xs, ys).statistic)


def agreement(s: SweepResult, name: str | None = None) -> AgreementRow:
    if not s.has_truth:
        raise ValidationError(f"sweep {s.name or name!r} has no ground-truth columns")
    a_sqe, a_idf1 = s.argmax_sqe, s.argmax_idf1
    d_idf1 = s.row_at(a_idf1).idf1 - s.row_at(a_sqe).idf1
    return AgreementRow(
        name if name is not None else s.name,
        s.parameter,
        a_sqe,
        a_idf1,
        round(abs(a_sqe - a_idf1), 10),
        100.0 * d_idf1,
        spearman([r.sqe for r in s.rows], [r.idf1 for r in s.rows]),
    )


def correlation_report(sweeps, out_path, *, param_tolerance: float = 0.25,
                       idf1_tolerance: float = 3.0) -> AgreementSummary:
    """Per-sweep SQE/IDF1 agreement as CSV at ``out_path``, summary text beside it."""
    sweeps = list(sweeps)
    if not sweeps:
        raise ValidationError("correlation report needs at least one sweep")
    rows = tuple(agreement(s, s.name or f"sweep{k}") for k, s in enumerate(sweeps))
    summary = AgreementSummary(rows, param_tolerance, idf1_tolerance)
    out = Path(out_path)
    with out.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["sequence", "parameter", "argmax_sqe", "argmax_idf1", "delta_parameter",
                    "delta_idf1", "spearman"])
        for r in rows:
            w.writerow([r.name, r.parameter, repr(r.argmax_sqe), repr(r.argmax_idf1),
                        repr(r.delta_parameter), repr(r.delta_idf1_points), repr(r.spearman)])
    summary_path(out).write_text(summary_text(summary))
    return summary


def summary_path(out_path) -> Path:
    out = Path(out_path)
    return out.with_name(out.name + ".summary.txt")


def summary_text(s: AgreementSummary) -> str:
    return (
        f"sweeps = {len(s.rows)}\n"
        f"fraction_delta_parameter_within_{s.param_tolerance!r} = {s.fraction_param_close!r}\n"
        f"fraction_delta_idf1_within_{s.idf1_tolerance!r} = {s.fraction_idf1_close!r}\n"
        f"mean_spearman = {s.mean_spearman!r}\n"
    )


SWEEP_HEADER = ["value", "sqe", "n", "L", "fp", "dif", "sim", "idf1", "mota"]


def write_sweep_csv(res: SweepResult, path) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([res.parameter, *SWEEP_HEADER[1:]])
        for r in res.rows:
            rep = r.report
            w.writerow([repr(r.value), repr(r.sqe), rep.n, repr(rep.L), rep.fp, rep.dif, rep.sim,
                        "" if r.idf1 is None else repr(r.idf1),
                        "" if r.mota is None else repr(r.mota)])
