"""Two-component 1-D Gaussian mixture by EM, and the sample statistics used to
spot false alarms."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._backend import kernels
from .errors import ValidationError

TOL = 1e-6
MAX_ITER = 200
VAR_FLOOR = 1e-8
MIN_FIT_SAMPLES = 4


@dataclass(frozen=True)
class SampleStats:
    mean: float
    std: float
    count: int


@dataclass(frozen=True, eq=False)
class GmmFit:
    means: tuple[float, float]
    variances: tuple[float, float]
    weights: tuple[float, float]
    log_likelihood: float
    iterations: int
    converged: bool
    # per-sample mean log-likelihood before each M-step, plus the final value
    history: np.ndarray

    @property
    def mean_gap(self) -> float:
        return self.means[1] - self.means[0]

    def responsibilities(self, xs) -> np.ndarray:
        """Posterior probability of each component, shape (n, 2)."""
        x = np.asarray(xs, dtype=np.float64)[:, None]
        mu = np.asarray(self.means)
        var = np.asarray(self.variances)
        with np.errstate(divide="ignore"):
            logp = np.log(self.weights) - 0.5 * np.log(2 * np.pi * var) - (x - mu) ** 2 / (2 * var)
        logp -= logp.max(axis=1, keepdims=True)
        p = np.exp(logp)
        return p / p.sum(axis=1, keepdims=True)

    def __eq__(self, other):
        if not isinstance(other, GmmFit):
            return NotImplemented
        return (
            self.means == other.means
            and self.variances == other.variances
            and self.weights == other.weights
            and self.log_likelihood == other.log_likelihood
            and self.iterations == other.iterations
            and self.converged == other.converged
            and np.array_equal(self.history, other.history)
        )


def _values(xs) -> np.ndarray:
    vals = getattr(xs, "values", xs)
    return np.ascontiguousarray(vals, dtype=np.float64).reshape(-1)


def sample_stats(xs) -> SampleStats:
    x = _values(xs)
    if x.size == 0:
        raise ValidationError("sample statistics need at least one value")
    return SampleStats(float(x.mean()), float(x.std()), int(x.size))


def fit_gmm2(xs, *, tol: float = TOL, max_iter: int = MAX_ITER, var_floor: float = VAR_FLOOR) -> GmmFit:
    """Fit a two-component mixture to the values in ``xs`` (array or DistanceSamples).

    Initial means sit at the 25th/75th percentiles (min/max if those coincide),
    both variances at a quarter of the sample variance, equal weights.
    Constant data short-circuits to a degenerate fit with both means at the value.
    """
    x = _values(xs)
    if x.size < MIN_FIT_SAMPLES:
        raise ValidationError(f"need at least {MIN_FIT_SAMPLES} samples to fit, got {x.size}")
    if not np.all(np.isfinite(x)):
        raise ValidationError("samples must be finite")
    mu1, mu2, v1, v2, w1, w2, ll, it, conv, hist = kernels.fit2(x, tol, max_iter, var_floor)
    if mu2 < mu1:
        mu1, mu2, v1, v2, w1, w2 = mu2, mu1, v2, v1, w2, w1
    return GmmFit(
        (float(mu1), float(mu2)),
        (float(v1), float(v2)),
        (float(w1), float(w2)),
        float(ll) * x.size,
        int(it),
        bool(conv),
        np.asarray(hist),
    )


def mean_gap(fit: GmmFit) -> float:
    return fit.means[1] - fit.means[0]
