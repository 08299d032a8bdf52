import math

import numpy as np
import pytest

from sqetrack.errors import ValidationError
from sqetrack.harness import (GridSpec, SweepError, SweepResult, SweepRow, agreement,
                              correlation_report, evaluate_point, point_seed, spearman,
                              summary_path, sweep, tune_alternating, write_sweep_csv)
from sqetrack.sqe import SqeParams, SqeReport
from sqetrack.synth import generate, make_scenario
from sqetrack.tracker import TrackerConfig


@pytest.fixture(scope="module")
def scene():
    sc = make_scenario(7, n_frames=120, concurrent=4, feature_dim=32, sigma=0.05,
                       miss_rate=0.05)
    gt, stream, _ = generate(sc)
    return gt, stream


def test_grid_values_are_inclusive_and_rounded():
    assert GridSpec("reid", 0.3, 0.5).values() == [0.3, 0.35, 0.4, 0.45, 0.5]
    assert len(GridSpec("reid_threshold", 0.3, 1.6).values()) == 27
    assert GridSpec("merge", 0.5, 0.6, 0.07).values() == [0.5, 0.57]


@pytest.mark.parametrize("args", [("speed", 0.1, 1.0), ("reid", 1.0, 0.5), ("reid", 0.1, 1.0, 0.0),
                                  ("reid", 0.0, 1.0)])
def test_bad_grids(args):
    with pytest.raises(ValidationError):
        GridSpec(*args)


def fake_rows(values, sqes, idf1s):
    rep = SqeReport(0, 0.0, 0, 0, 0, 0.0, SqeParams())
    return tuple(SweepRow(v, s, f, None, rep) for v, s, f in zip(values, sqes, idf1s))


def test_argmax_ties_go_to_smallest_value():
    res = SweepResult("reid_threshold", fake_rows([0.3, 0.4, 0.5], [1.0, 2.0, 2.0], [0.5, 0.5, 0.4]))
    assert res.argmax_sqe == 0.4
    assert res.argmax_idf1 == 0.3


def test_agreement_row():
    res = SweepResult("reid_threshold", fake_rows([0.3, 0.4, 0.5], [1.0, 3.0, 2.0], [0.6, 0.5, 0.7]),
                      "s1")
    row = agreement(res)
    assert row.argmax_sqe == 0.4 and row.argmax_idf1 == 0.5
    assert row.delta_parameter == 0.1
    assert row.delta_idf1_points == pytest.approx(20.0)
    assert row.spearman == pytest.approx(-0.5)


def test_spearman_constant_input_is_nan():
    assert math.isnan(spearman([1, 2, 3], [4, 4, 4]))
    assert spearman([1, 2, 3], [3, 5, 9]) == 1.0


def test_point_seed_depends_on_value_and_seed():
    assert point_seed(0, 0.3) == point_seed(0, 0.3)
    assert point_seed(0, 0.3) != point_seed(0, 0.35)
    assert point_seed(0, 0.3) != point_seed(1, 0.3)


def test_sweep_rows_follow_grid_order_and_threads_agree(scene):
    gt, stream = scene
    grid = GridSpec("reid", 0.3, 1.2, 0.3)
    a = sweep(stream, grid, TrackerConfig(merge_threshold=0.5), SqeParams(), gt)
    b = sweep(stream, grid, TrackerConfig(merge_threshold=0.5), SqeParams(), gt, threads=3)
    assert a.values == grid.values() == b.values
    assert [(r.sqe, r.idf1, r.mota) for r in a.rows] == [(r.sqe, r.idf1, r.mota) for r in b.rows]
    assert a.has_truth and all(0 <= r.idf1 <= 1 for r in a.rows)


def test_sweep_without_truth(scene):
    _, stream = scene
    res = sweep(stream, GridSpec("merge", 0.5, 0.6), TrackerConfig(), SqeParams(k2=10))
    assert not res.has_truth and res.argmax_idf1 is None
    with pytest.raises(ValidationError):
        agreement(res)


def test_failures_carry_the_grid_value(scene, monkeypatch):
    _, stream = scene

    def boom(*a, **k):
        raise RuntimeError("tracker died")

    monkeypatch.setattr("sqetrack.harness.track", boom)
    with pytest.raises(SweepError) as err:
        sweep(stream, GridSpec("reid", 0.5, 0.6), TrackerConfig(), SqeParams())
    assert err.value.parameter == "reid_threshold" and err.value.value == 0.5


def test_tune_adopts_sqe_argmax_in_turn(scene):
    gt, stream = scene
    grids = (GridSpec("reid", 0.4, 1.2, 0.2), GridSpec("merge", 0.4, 1.2, 0.2))
    out = tune_alternating(stream, TrackerConfig(1.6, 1.6), grids, gt=gt)
    reid_sweep, merge_sweep = out.sweeps
    assert out.baseline_params == (1.6, 1.6)
    assert out.customized_params == (reid_sweep.argmax_sqe, merge_sweep.argmax_sqe)
    assert reid_sweep.rows[0].report.params.k2 == 2 and merge_sweep.rows[0].report.params.k2 == 10
    # the merge sweep ran at the adopted reid value
    cfg = TrackerConfig(reid_sweep.argmax_sqe, merge_sweep.values[0])
    row = evaluate_point(stream, cfg, SqeParams(k2=10), None, seed=0, value=merge_sweep.values[0])
    assert row.sqe == merge_sweep.rows[0].sqe
    assert len(out.rows) == 10
    with pytest.raises(ValidationError):
        tune_alternating(stream, TrackerConfig(), (grids[0], grids[0]))


def test_reports_are_written(tmp_path, scene):
    gt, stream = scene
    res = sweep(stream, GridSpec("reid", 0.5, 1.0, 0.25), TrackerConfig(merge_threshold=0.5),
                SqeParams(), gt, name="scene7")
    write_sweep_csv(res, tmp_path / "s.csv")
    lines = (tmp_path / "s.csv").read_text().splitlines()
    assert lines[0] == "reid_threshold,sqe,n,L,fp,dif,sim,idf1,mota" and len(lines) == 4
    summary = correlation_report([res], tmp_path / "c.csv")
    assert summary.fraction_param_close in (0.0, 1.0)
    text = summary_path(tmp_path / "c.csv").read_text()
    assert text.startswith("sweeps = 1\n") and "mean_spearman" in text
    assert (tmp_path / "c.csv").read_text().splitlines()[1].startswith("scene7,reid_threshold,")


def test_sweep_is_deterministic(scene):
    gt, stream = scene
    grid = GridSpec("reid", 0.6, 0.8, 0.1)
    a = sweep(stream, grid, TrackerConfig(), SqeParams(), seed=4)
    b = sweep(stream, grid, TrackerConfig(), SqeParams(), seed=4)
    assert [r.report for r in a.rows] == [r.report for r in b.rows]
    assert np.all(np.isfinite([r.sqe for r in a.rows]))
