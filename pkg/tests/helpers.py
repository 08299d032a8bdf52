"""Small builders shared by the tests."""
import numpy as np

from sqetrack.trackmodel import Detection, GroundTruth, TrackSet, Trajectory

BOX = (0.0, 0.0, 10.0, 20.0)


def traj(tid, feats, start=0, box=BOX, frames=None):
    feats = np.atleast_2d(np.asarray(feats, dtype=float))
    frames = list(range(start, start + len(feats))) if frames is None else list(frames)
    return Trajectory(tid, tuple(Detection(f, box, 1.0, z) for f, z in zip(frames, feats)))


def boxes_traj(tid, frames, boxes):
    return Trajectory(tid, tuple(Detection(f, b) for f, b in zip(frames, boxes)))


def tset(*trajs, cls=TrackSet):
    return cls(tuple(trajs))


def unit(dim, k):
    v = np.zeros(dim)
    v[k] = 1.0
    return v


def noisy(rng, mu, count, sigma):
    mu = np.asarray(mu, dtype=float)
    return mu + sigma * rng.standard_normal((count, mu.shape[0]))


def micro_scene(rng, max_targets=3, max_frames=12):
    """Targets on fixed boxes; hypotheses copy them with jitter, dropouts and id churn."""
    n_targets = int(rng.integers(1, max_targets + 1))
    n_frames = int(rng.integers(1, max_frames + 1))
    gt_rows, hyp_rows = {}, {}
    for g in range(1, n_targets + 1):
        start = int(rng.integers(0, n_frames))
        stop = int(rng.integers(start + 1, n_frames + 1))
        base = (30.0 * g, 0.0, 10.0, 10.0)
        for f in range(start, stop):
            gt_rows.setdefault(g, []).append((f, base))
            if rng.random() < 0.2:
                continue
            h = int(rng.integers(1, 5))
            shift = float(rng.choice([0.0, 1.0, 6.0]))
            hyp_rows.setdefault(h, {}).setdefault(f, (base[0] + shift, 0.0, 10.0, 10.0))
    for _ in range(int(rng.integers(0, 3))):
        h, f = int(rng.integers(1, 6)), int(rng.integers(0, n_frames))
        hyp_rows.setdefault(h, {}).setdefault(f, (float(rng.uniform(0, 120)), 0.0, 10.0, 10.0))
    gt = tset(*(boxes_traj(g, [f for f, _ in r], [b for _, b in r]) for g, r in gt_rows.items()),
              cls=GroundTruth)
    hyp = tset(*(boxes_traj(h, sorted(r), [r[f] for f in sorted(r)])
                 for h, r in sorted(hyp_rows.items())))
    return gt, hyp

# one summary line per acceptance criterion, echoed at the end of the run
ACCEPTANCE_LINES = []
