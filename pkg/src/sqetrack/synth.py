"""Synthetic scenes under an isotropic Gaussian appearance model, plus checks
that feature distances follow the chi laws the model implies.

A target's feature at each frame is an independent draw from
``N(mu, diag(sigma**2))``. Within one target, ``(z_i - z_j) / sqrt(2 sigma**2)``
is standard normal per dimension, so its norm is chi with N degrees of
freedom; across targets the same holds after removing ``mu_a - mu_b`` and
scaling by ``sqrt(sigma_a**2 + sigma_b**2)``.
"""
from __future__ import annotations

import configparser
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.special import gammainc, kolmogorov

from .distance import DistanceSamples, intra_distances
from .errors import ValidationError
from .gmm import GmmFit, fit_gmm2
from .trackmodel import (Detection, DetectionStream, GroundTruth, TrackSet, Trajectory,
                         save_detections, save_trackset)

FEATURE_DIM = 128
SIGMA = 0.05
MIN_KS_SAMPLES = 100


@dataclass(frozen=True, eq=False)
class TargetModel:
    mu: np.ndarray
    sigma: np.ndarray
    box_path: np.ndarray  # (last - first + 1, 4), one box per frame of the lifespan
    lifespan: tuple[int, int]
    # frames (inside the lifespan) where the detector misses this target
    missed: frozenset[int] = frozenset()

    def __post_init__(self):
        mu = np.asarray(self.mu, dtype=np.float64).reshape(-1)
        sigma = np.broadcast_to(np.asarray(self.sigma, dtype=np.float64), mu.shape).copy()
        if not np.all(sigma > 0):
            raise ValidationError("sigma entries must be positive")
        first, last = (int(v) for v in self.lifespan)
        if first < 0 or last < first:
            raise ValidationError(f"invalid lifespan {self.lifespan}")
        boxes = np.asarray(self.box_path, dtype=np.float64).reshape(-1, 4)
        if boxes.shape[0] != last - first + 1:
            raise ValidationError("box_path needs one box per frame of the lifespan")
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "box_path", boxes)
        object.__setattr__(self, "lifespan", (first, last))
        object.__setattr__(self, "missed", frozenset(int(f) for f in self.missed))

    @property
    def frames(self) -> range:
        return range(self.lifespan[0], self.lifespan[1] + 1)

    def alive(self, frame: int) -> bool:
        return self.lifespan[0] <= frame <= self.lifespan[1]

    def box(self, frame: int) -> tuple[float, float, float, float]:
        return tuple(float(v) for v in self.box_path[frame - self.lifespan[0]])


@dataclass(frozen=True)
class IdentitySwitch:
    """From ``at_frame`` on, hypothesis ``track_id`` follows ``to_target`` and vice versa."""

    track_id: int
    at_frame: int
    to_target: int


@dataclass(frozen=True)
class FalseAlarm:
    """A hypothesis with no real target, features spread ``sigma_scale`` times wider."""

    length: int
    sigma_scale: float
    start_frame: int = 0


@dataclass(frozen=True)
class Fragmentation:
    track_id: int
    at_frame: int


Corruption = IdentitySwitch | FalseAlarm | Fragmentation


@dataclass(frozen=True, eq=False)
class Scenario:
    targets: tuple[TargetModel, ...]
    corruptions: tuple = ()
    seed: int = 0
    feature_dim: int = FEATURE_DIM
    # Poisson mean of unassociated clutter detections per frame
    clutter_rate: float = 0.0
    frame_size: tuple[float, float] = (1920.0, 1080.0)

    def __post_init__(self):
        object.__setattr__(self, "targets", tuple(self.targets))
        object.__setattr__(self, "corruptions", tuple(self.corruptions))
        for t in self.targets:
            if t.mu.shape[0] != self.feature_dim:
                raise ValidationError(
                    f"target feature dimension {t.mu.shape[0]} != feature_dim {self.feature_dim}"
                )
        for c in self.corruptions:
            if isinstance(c, (IdentitySwitch, Fragmentation)):
                if not 1 <= c.track_id <= len(self.targets):
                    raise ValidationError(f"{c} refers to an unknown track")
            if isinstance(c, IdentitySwitch) and not 1 <= c.to_target <= len(self.targets):
                raise ValidationError(f"{c} refers to an unknown target")
            if isinstance(c, FalseAlarm) and (c.length < 1 or not c.sigma_scale > 0):
                raise ValidationError(f"invalid false alarm {c}")

    @property
    def n_frames(self) -> int:
        return max((t.lifespan[1] + 1 for t in self.targets), default=0)

    def with_corruptions(self, *extra) -> "Scenario":
        return Scenario(self.targets, self.corruptions + tuple(extra), self.seed,
                        self.feature_dim, self.clutter_rate, self.frame_size)


@dataclass(frozen=True)
class ChiCheckResult:
    ks_statistic: float
    p_value: float
    sample_count: int
    dof: int


# ----------------------------------------------------------------------------- construction


def random_unit(rng: np.random.Generator, dim: int) -> np.ndarray:
    v = rng.standard_normal(dim)
    return v / np.linalg.norm(v)


def linear_path(start, velocity, size, n: int) -> np.ndarray:
    k = np.arange(n)[:, None]
    xy = np.asarray(start, dtype=np.float64) + k * np.asarray(velocity, dtype=np.float64)
    wh = np.broadcast_to(np.asarray(size, dtype=np.float64), (n, 2))
    return np.hstack([xy, wh])


def make_scenario(seed: int, *, n_frames: int = 300, concurrent: int = 5,
                  lifespan: tuple[int, int] = (20, 60), sigma: float = SIGMA,
                  feature_dim: int = FEATURE_DIM, miss_rate: float = 0.0,
                  occlusion_rate: float = 0.0, occlusion_length: tuple[int, int] = (35, 50),
                  clutter_rate: float = 0.0, corruptions=()) -> Scenario:
    """Scene with about ``concurrent`` targets visible at any time.

    Each of ``concurrent`` slots hosts a chain of targets: when one leaves,
    the next enters after a short pause. Targets have random unit-norm mean
    features, linear box motion, independent per-frame misses and, with
    probability ``occlusion_rate``, one long occlusion in the middle of the
    lifespan.
    """
    if n_frames < 1 or concurrent < 1:
        raise ValidationError("n_frames and concurrent must be positive")
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0x5CE4E]))
    lo, hi = lifespan
    targets = []
    for _slot in range(concurrent):
        f = int(rng.integers(0, hi // 2 + 1))
        while f < n_frames:
            span = int(rng.integers(lo, hi + 1))
            occluded = set()
            if rng.random() < occlusion_rate:
                occ = int(rng.integers(occlusion_length[0], occlusion_length[1] + 1))
                span += occ
                start = f + span // 2 - occ // 2
                occluded = set(range(start, start + occ))
            last = min(n_frames - 1, f + span - 1)
            n = last - f + 1
            start_xy = (rng.uniform(0, 1800), rng.uniform(0, 900))
            vel = rng.uniform(-3, 3, size=2)
            size = (rng.uniform(40, 80), rng.uniform(100, 180))
            misses = {fr for fr in range(f, last + 1) if rng.random() < miss_rate}
            missed = (misses | occluded) & set(range(f + 1, last))
            targets.append(TargetModel(random_unit(rng, feature_dim), sigma,
                                       linear_path(start_xy, vel, size, n), (f, last),
                                       frozenset(missed)))
            f = last + 1 + int(rng.integers(1, 10))
    targets.sort(key=lambda t: (t.lifespan[0], t.lifespan[1]))
    return Scenario(tuple(targets), tuple(corruptions), seed, feature_dim, clutter_rate)


# ----------------------------------------------------------------------------- generation


def _draw(rng, t: TargetModel, count: int, scale: float = 1.0) -> np.ndarray:
    return t.mu + scale * t.sigma * rng.standard_normal((count, t.mu.shape[0]))


def generate(sc: Scenario) -> tuple[GroundTruth, DetectionStream, TrackSet]:
    """Ground truth, the raw detection stream, and a corrupted hypothesis set.

    The hypothesis starts as one trajectory per target over its detected
    frames (ids 1..T in target order, same features as the stream); the
    corruptions are then applied in order. Extra trajectories get ids T+1, ...
    """
    rng = np.random.default_rng(np.random.SeedSequence([sc.seed, 0x6E4]))
    gt_trajs = []
    per_target: list[list[Detection]] = []
    by_frame: dict[int, list[Detection]] = {}
    for k, t in enumerate(sc.targets, start=1):
        frames = list(t.frames)
        feats = _draw(rng, t, len(frames))
        gt_trajs.append(Trajectory(k, tuple(Detection(f, t.box(f)) for f in frames)))
        dets = [Detection(f, t.box(f), 1.0, z) for f, z in zip(frames, feats) if f not in t.missed]
        per_target.append(dets)
        for d in dets:
            by_frame.setdefault(d.frame, []).append(d)
    if sc.clutter_rate > 0:
        w, h = sc.frame_size
        for f in range(sc.n_frames):
            for _ in range(int(rng.poisson(sc.clutter_rate))):
                mu = random_unit(rng, sc.feature_dim)
                z = mu + SIGMA * rng.standard_normal(sc.feature_dim)
                box = (rng.uniform(0, w - 60), rng.uniform(0, h - 150), 50.0, 120.0)
                by_frame.setdefault(f, []).append(Detection(f, box, 0.5, z))
    frames = []
    for f in sorted(by_frame):
        dets = by_frame[f]
        order = rng.permutation(len(dets))
        frames.append((f, tuple(dets[i] for i in order)))
    stream = DetectionStream(tuple(frames))

    tracks: dict[int, list[Detection]] = {k: list(d) for k, d in enumerate(per_target, start=1)}
    next_id = len(sc.targets) + 1
    for c in sc.corruptions:
        if isinstance(c, IdentitySwitch):
            _switch(tracks, c)
        elif isinstance(c, Fragmentation):
            head = [d for d in tracks[c.track_id] if d.frame < c.at_frame]
            tail = [d for d in tracks[c.track_id] if d.frame >= c.at_frame]
            if not head or not tail:
                raise ValidationError(f"{c} does not split track {c.track_id}")
            tracks[c.track_id] = head
            tracks[next_id] = tail
            next_id += 1
        elif isinstance(c, FalseAlarm):
            tracks[next_id] = _false_alarm(rng, sc, c)
            next_id += 1
        else:
            raise ValidationError(f"unknown corruption {c!r}")
    hyp = TrackSet(
        tuple(Trajectory(k, tuple(ds)) for k, ds in sorted(tracks.items()) if ds),
        sc.feature_dim,
    )
    return GroundTruth(tuple(gt_trajs)), stream, hyp


def _switch(tracks, c: IdentitySwitch) -> None:
    a, b = c.track_id, c.to_target
    if a == b:
        raise ValidationError("identity switch needs two different tracks")
    ta, tb = tracks[a], tracks[b]
    for name, tr in ((a, ta), (b, tb)):
        if not tr or not tr[0].frame < c.at_frame <= tr[-1].frame:
            raise ValidationError(f"track {name} is not alive on both sides of frame {c.at_frame}")
    tracks[a] = [d for d in ta if d.frame < c.at_frame] + [d for d in tb if d.frame >= c.at_frame]
    tracks[b] = [d for d in tb if d.frame < c.at_frame] + [d for d in ta if d.frame >= c.at_frame]


def _false_alarm(rng, sc: Scenario, c: FalseAlarm) -> list[Detection]:
    mu = random_unit(rng, sc.feature_dim)
    sigma = np.mean([t.sigma.mean() for t in sc.targets]) if sc.targets else SIGMA
    feats = mu + c.sigma_scale * sigma * rng.standard_normal((c.length, sc.feature_dim))
    w, h = sc.frame_size
    path = linear_path((rng.uniform(0, w - 100), rng.uniform(0, h - 200)),
                       rng.uniform(-3, 3, size=2), (50.0, 120.0), c.length)
    return [Detection(c.start_frame + i, tuple(path[i]), 0.5, feats[i]) for i in range(c.length)]


# ----------------------------------------------------------------------------- chi checks


def chi_cdf(x, dof: int) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    return gammainc(dof / 2.0, np.square(np.clip(x, 0, None)) / 2.0)


def ks_one_sample(values, cdf) -> tuple[float, float]:
    """Kolmogorov-Smirnov statistic against ``cdf`` and its asymptotic p-value."""
    x = np.sort(np.asarray(values, dtype=np.float64))
    n = x.size
    f = cdf(x)
    i = np.arange(1, n + 1)
    stat = float(max(np.max(i / n - f), np.max(f - (i - 1) / n)))
    p = float(np.clip(kolmogorov(math.sqrt(n) * stat), 0.0, 1.0))
    return stat, p


def _check_samples(samples: int) -> None:
    if samples < MIN_KS_SAMPLES:
        raise ValidationError(f"need at least {MIN_KS_SAMPLES} samples, got {samples}")


def chi_check_intra(sc: Scenario, samples: int, *, sigma_scale: float = 1.0,
                    seed: int | None = None) -> ChiCheckResult:
    """Standardised same-target distances against chi with N degrees of freedom.

    ``sigma_scale`` multiplies the sigma used for standardising (1 = true sigma).
    """
    _check_samples(samples)
    if len(sc.targets) != 1:
        raise ValidationError("chi_check_intra needs a single-target scenario")
    t = sc.targets[0]
    rng = np.random.default_rng(np.random.SeedSequence([sc.seed if seed is None else seed, 0x1C]))
    d = _draw(rng, t, samples) - _draw(rng, t, samples)
    r = np.linalg.norm(d / (math.sqrt(2.0) * sigma_scale * t.sigma), axis=1)
    stat, p = ks_one_sample(r, lambda x: chi_cdf(x, t.mu.shape[0]))
    return ChiCheckResult(stat, p, samples, t.mu.shape[0])


def chi_check_inter(a: TargetModel, b: TargetModel, samples: int, *, seed: int = 0,
                    mean_shift: bool = True) -> ChiCheckResult:
    """Standardised cross-target distances against chi with N degrees of freedom.

    With ``mean_shift=False`` the mean difference is not removed, which
    gives a non-central law whenever the targets are apart.
    """
    _check_samples(samples)
    if a.mu.shape != b.mu.shape:
        raise ValidationError("targets have different feature dimensions")
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0x1E]))
    d = _draw(rng, a, samples) - _draw(rng, b, samples)
    if mean_shift:
        d = d - (a.mu - b.mu)
    r = np.linalg.norm(d / np.sqrt(a.sigma ** 2 + b.sigma ** 2), axis=1)
    stat, p = ks_one_sample(r, lambda x: chi_cdf(x, a.mu.shape[0]))
    return ChiCheckResult(stat, p, samples, a.mu.shape[0])


# ----------------------------------------------------------------------------- bimodality


def switched_trajectory(length_a: int, length_b: int, separation: float, sigma: float, *,
                        feature_dim: int = FEATURE_DIM, seed: int = 0) -> Trajectory:
    """One trajectory following target A, then target B at ``separation`` from A.

    ``sigma`` is the scale of the noise vector's norm, so each dimension
    gets ``sigma / sqrt(feature_dim)``.
    """
    if separation < 0:
        raise ValidationError("separation must be non-negative")
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0xB1]))
    mu_a = random_unit(rng, feature_dim)
    mu_b = mu_a + separation * random_unit(rng, feature_dim)
    s = sigma / math.sqrt(feature_dim)
    feats = np.vstack([
        mu_a + s * rng.standard_normal((length_a, feature_dim)),
        mu_b + s * rng.standard_normal((length_b, feature_dim)),
    ])
    dets = tuple(Detection(f, (0.0, 0.0, 10.0, 10.0), 1.0, z) for f, z in enumerate(feats))
    return Trajectory(1, dets)


def bimodality_demo(length_each: int, separation: float, sigma: float, *,
                    length_b: int | None = None, feature_dim: int = FEATURE_DIM,
                    seed: int = 0) -> tuple[DistanceSamples, GmmFit]:
    """Intra distances of a switched trajectory and the mixture fitted to them."""
    t = switched_trajectory(length_each, length_each if length_b is None else length_b,
                            separation, sigma, feature_dim=feature_dim, seed=seed)
    d = intra_distances(t, max_pairs=None)
    return d, fit_gmm2(d)


# ----------------------------------------------------------------------------- scenario files


def _floats(text: str) -> list[float]:
    return [float(v) for v in text.replace(",", " ").split()]


def load_scenario(path) -> Scenario:
    """Read a scenario file.

    Either a ``[random]`` section (keyword arguments of :func:`make_scenario`)
    or explicit ``[target.K]`` sections; ``[corruption.K]`` sections are
    applied in K order in both cases. ``seed`` lives in ``[scenario]``.
    """
    cp = configparser.ConfigParser()
    with Path(path).open() as fh:
        cp.read_file(fh)
    if not cp.has_section("scenario") or not cp.has_option("scenario", "seed"):
        raise ValidationError(f"{path}: [scenario] section with a seed is required")
    head = cp["scenario"]
    seed = head.getint("seed")
    dim = head.getint("feature_dim", FEATURE_DIM)
    corruptions = [_corruption(cp[s]) for s in _numbered(cp, "corruption")]
    if cp.has_section("random"):
        r = cp["random"]
        kw = {}
        for key in ("n_frames", "concurrent"):
            if key in r:
                kw[key] = r.getint(key)
        for key in ("sigma", "miss_rate", "occlusion_rate", "clutter_rate"):
            if key in r:
                kw[key] = r.getfloat(key)
        for key in ("lifespan", "occlusion_length"):
            if key in r:
                lo, hi = (int(v) for v in _floats(r[key]))
                kw[key] = (lo, hi)
        return make_scenario(seed, feature_dim=dim, corruptions=corruptions, **kw)
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0x7A]))
    targets = []
    for name in _numbered(cp, "target"):
        s = cp[name]
        first, last = s.getint("first"), s.getint("last")
        mu_text = s.get("mu", "random").strip()
        mu = random_unit(rng, dim) if mu_text == "random" else np.array(_floats(mu_text))
        sigma = _floats(s.get("sigma", str(SIGMA)))
        box = _floats(s.get("box", "100 100 50 120"))
        vel = _floats(s.get("velocity", "0 0"))
        missed = [int(v) for v in _floats(s.get("missed", ""))]
        targets.append(TargetModel(mu, sigma if len(sigma) > 1 else sigma[0],
                                   linear_path(box[:2], vel, box[2:], last - first + 1),
                                   (first, last), frozenset(missed)))
    return Scenario(tuple(targets), tuple(corruptions), seed, dim,
                    head.getfloat("clutter_rate", 0.0))


def _numbered(cp, prefix: str) -> list[str]:
    names = [s for s in cp.sections() if s.startswith(prefix + ".")]
    try:
        return sorted(names, key=lambda s: int(s.split(".", 1)[1]))
    except ValueError:
        raise ValidationError(f"{prefix} sections must be numbered, e.g. [{prefix}.1]") from None


def _corruption(s) -> Corruption:
    kind = s.get("type", "").strip()
    if kind == "identity_switch":
        return IdentitySwitch(s.getint("track"), s.getint("at_frame"), s.getint("to_target"))
    if kind == "false_alarm":
        return FalseAlarm(s.getint("length"), s.getfloat("sigma_scale"), s.getint("start_frame", 0))
    if kind == "fragmentation":
        return Fragmentation(s.getint("track"), s.getint("at_frame"))
    raise ValidationError(f"unknown corruption type {kind!r}")


def write_scenario_outputs(sc: Scenario, out_dir) -> dict[str, Path]:
    """Generate and write gt, detections, detection features, hypothesis tracks and features."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    gt, stream, hyp = generate(sc)
    paths = {
        "gt": out / "gt.txt",
        "detections": out / "det.txt",
        "detection_features": out / "det_features.txt",
        "hypothesis": out / "hyp.txt",
        "hypothesis_features": out / "hyp_features.txt",
    }
    save_trackset(gt, paths["gt"])
    save_detections(stream, paths["detections"], paths["detection_features"])
    save_trackset(hyp, paths["hypothesis"], paths["hypothesis_features"])
    return paths

