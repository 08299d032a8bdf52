"""Command-line entry point: ``sqetrack <command> ...``.

Failures print one line ``sqetrack-error: type=<Name> message=<json string>``
to stderr and exit with status 1 (argument errors exit with 2).
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import harness, refmetrics, sqe, synth
from .config import Settings, load_settings
from .errors import ValidationError
from .tracker import TrackerConfig, track
from .trackmodel import (Detection, DetectionStream, TrackSet, Trajectory, load_detections,
                         load_groundtruth, load_trackset, save_trackset)


def _normalize_det(d: Detection) -> Detection:
    if d.feature is None:
        return d
    norm = float(np.linalg.norm(d.feature))
    feat = d.feature / norm if norm > 0 else d.feature
    return Detection(d.frame, d.box, d.confidence, feat, d.synthetic)


def _normalize_tracks(ts: TrackSet) -> TrackSet:
    return type(ts)(tuple(Trajectory(t.id, tuple(_normalize_det(d) for d in t.detections))
                          for t in ts.trajectories))


def _normalize_stream(s: DetectionStream) -> DetectionStream:
    return DetectionStream(tuple((f, tuple(_normalize_det(d) for d in ds)) for f, ds in s.frames))


def _stream(args, settings: Settings) -> DetectionStream:
    s = load_detections(args.detections, args.features)
    return _normalize_stream(s) if settings.normalize else s


def _grid(text: str, parameter: str) -> harness.GridSpec:
    try:
        start, stop, step = (float(v) for v in text.split(","))
    except ValueError:
        raise ValidationError(f"grid must be start,stop,step; got {text!r}") from None
    return harness.GridSpec(parameter, start, stop, step)


def _kv(path, pairs) -> None:
    Path(path).write_text("".join(f"{k} = {v}\n" for k, v in pairs))


# ----------------------------------------------------------------------------- commands


def cmd_track(args, settings: Settings) -> None:
    cfg = TrackerConfig(args.reid, args.merge, settings.max_gap)
    ts = track(_stream(args, settings), cfg)
    save_trackset(ts, args.out, args.out_features)


def cmd_sqe(args, settings: Settings) -> None:
    ts = load_trackset(args.tracks, args.features, require_all_features=False)
    if settings.normalize:
        ts = _normalize_tracks(ts)
    p = settings.sqe if args.k2 is None else settings.sqe.with_k2(args.k2)
    rep = sqe.evaluate(ts, p, seed=args.seed, max_pairs=settings.max_pairs,
                       overlapping_only=args.overlapping_only)
    sqe.write_report(rep, args.report, args.verdicts)


def cmd_eval(args, settings: Settings) -> None:
    gt = load_groundtruth(args.gt)
    hyp = load_trackset(args.tracks)
    row = refmetrics.evaluate_supervised(gt, hyp, args.sequence or Path(args.tracks).stem,
                                         args.iou)
    refmetrics.write_supervised_csv([row], args.report)


def cmd_sweep(args, settings: Settings) -> None:
    stream = _stream(args, settings)
    parameter = harness.ALIASES[args.param]
    grid = harness.GridSpec(parameter, args.start, args.stop, args.step)
    fixed = TrackerConfig(args.reid, args.merge, settings.max_gap)
    gt = load_groundtruth(args.gt) if args.gt else None
    res = harness.sweep(stream, grid, fixed, settings.sqe_for(parameter), gt, seed=args.seed,
                        threads=args.threads, max_pairs=settings.max_pairs)
    harness.write_sweep_csv(res, args.out)


def cmd_tune(args, settings: Settings) -> None:
    stream = _stream(args, settings)
    baseline = TrackerConfig(args.baseline_reid, args.baseline_merge, settings.max_gap)
    grids = (_grid(args.reid_grid, "reid_threshold"), _grid(args.merge_grid, "merge_threshold"))
    out = harness.tune_alternating(stream, baseline, grids, settings.sqe, args.rounds,
                                   k2=(settings.k2_reid, settings.k2_merge), seed=args.seed,
                                   threads=args.threads, max_pairs=settings.max_pairs)
    lines = [
        ("baseline_reid", repr(out.baseline_params[0])),
        ("baseline_merge", repr(out.baseline_params[1])),
        ("customized_reid", repr(out.customized_params[0])),
        ("customized_merge", repr(out.customized_params[1])),
        ("rounds", str(args.rounds)),
    ]
    _kv(args.out, lines)
    with Path(args.out).open("a") as fh:
        fh.write("\nphase,parameter,value,sqe\n")
        for phase, param, value, score in out.rows:
            fh.write(f"{phase},{param},{value!r},{score!r}\n")


def cmd_synth(args, settings: Settings) -> None:
    sc = synth.load_scenario(args.scenario)
    synth.write_scenario_outputs(sc, args.out_dir)


def cmd_chicheck(args, settings: Settings) -> None:
    sc = synth.load_scenario(args.scenario)
    if not sc.targets:
        raise ValidationError("scenario has no targets")
    first = synth.Scenario(sc.targets[:1], (), sc.seed, sc.feature_dim)
    res = synth.chi_check_intra(first, args.samples, seed=args.seed)
    rows = [("intra_ks_statistic", repr(res.ks_statistic)), ("intra_p_value", repr(res.p_value)),
            ("sample_count", str(res.sample_count)), ("dof", str(res.dof))]
    if len(sc.targets) >= 2:
        inter = synth.chi_check_inter(sc.targets[0], sc.targets[1], args.samples, seed=args.seed)
        rows += [("inter_ks_statistic", repr(inter.ks_statistic)),
                 ("inter_p_value", repr(inter.p_value))]
    _kv(args.report, rows)


# ----------------------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    def globals_(suppress: bool) -> argparse.ArgumentParser:
        # flags may go before or after the command; only the top level sets defaults
        g = argparse.ArgumentParser(add_help=False)
        d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
        g.add_argument("--seed", type=int, default=d(0), help="global seed (default 0)")
        g.add_argument("--threads", type=int, default=d(1), help="worker threads for sweeps")
        g.add_argument("--config", default=d(None),
                       help="settings file with [sqe], [tracker], [distance]")
        return g

    common = globals_(True)
    ap = argparse.ArgumentParser(prog="sqetrack", parents=[globals_(False)],
                                 description="Ground-truth-free tracking quality and tuning.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("track", parents=[common], help="run the tracker on detections")
    p.add_argument("--detections", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--reid", type=float, required=True)
    p.add_argument("--merge", type=float, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--out-features", help="also write features of the tracked detections")
    p.set_defaults(func=cmd_track)

    p = sub.add_parser("sqe", parents=[common], help="score a track set without ground truth")
    p.add_argument("--tracks", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--report", required=True)
    p.add_argument("--verdicts", help="per-trajectory verdict CSV")
    p.add_argument("--k2", type=float, help="error weight (default: k2_reid from config)")
    p.add_argument("--overlapping-only", action="store_true",
                   help="check shared identity only between time-overlapping trajectories")
    p.set_defaults(func=cmd_sqe)

    p = sub.add_parser("eval", parents=[common], help="supervised metrics against ground truth")
    p.add_argument("--tracks", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--iou", type=float, default=refmetrics.IOU_THRESHOLD)
    p.add_argument("--sequence", help="name for the CSV row (default: tracks file stem)")
    p.add_argument("--report", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sweep", parents=[common], help="grid over one tracker parameter")
    p.add_argument("--detections", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--param", choices=["reid", "merge"], required=True)
    p.add_argument("--start", type=float, required=True)
    p.add_argument("--stop", type=float, required=True)
    p.add_argument("--step", type=float, default=harness.STEP)
    p.add_argument("--reid", type=float, default=TrackerConfig.reid_threshold,
                   help="REID threshold while sweeping merge")
    p.add_argument("--merge", type=float, default=TrackerConfig.merge_threshold,
                   help="merge threshold while sweeping reid")
    p.add_argument("--gt")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("tune", parents=[common], help="alternating SQE tuning of both thresholds")
    p.add_argument("--detections", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--baseline-reid", type=float, required=True)
    p.add_argument("--baseline-merge", type=float, required=True)
    p.add_argument("--rounds", type=int, default=1)
    p.add_argument("--reid-grid", default="0.3,1.6,0.05")
    p.add_argument("--merge-grid", default="0.5,1.5,0.05")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_tune)

    p = sub.add_parser("synth", parents=[common], help="generate a synthetic scene")
    p.add_argument("--scenario", required=True)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("chicheck", parents=[common], help="KS test of distances against chi")
    p.add_argument("--scenario", required=True)
    p.add_argument("--samples", type=int, required=True)
    p.add_argument("--report", required=True)
    p.set_defaults(func=cmd_chicheck)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        settings = load_settings(args.config)
        args.func(args, settings)
    except Exception as exc:  # noqa: BLE001 - every failure becomes one parsable line
        print(f"sqetrack-error: type={type(exc).__name__} message={json.dumps(str(exc))}",
              file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
