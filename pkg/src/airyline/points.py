"""Airy point configurations: counting statistics and point locations.

Samples of the Airy point process are approximated by rescaled GUE edge
eigenvalues ``n^{1/6} (lambda_i - 2 sqrt n)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .airy import KAPPA, expected_count, expected_count_exact
from .dyson import rescaled_top_eigenvalues
from .errors import ConfigError
from .parallel import run_replicas_array
from .rng import RngStream
from .stats import is_nonincreasing, make_report, require_replicas, survival, tail_fit


@dataclass
class PointSample:
    """Top points of one configuration, sorted decreasing."""

    points: np.ndarray
    kappa: float = KAPPA

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=float)
        if np.any(np.diff(self.points) > 0):
            raise ConfigError("point sample must be sorted decreasing")

    def count_above(self, a: float) -> int:
        return int(np.count_nonzero(self.points >= -a))

    def window(self, lo: float, hi: float) -> np.ndarray:
        """Points in ``[lo, hi]``, ascending."""
        p = self.points[(self.points >= lo) & (self.points <= hi)]
        return p[::-1]


@dataclass
class CountStats:
    a: float
    counts: np.ndarray
    eta: float | None = None
    summary: dict = field(default_factory=dict)

    @property
    def mean(self) -> float:
        return float(np.mean(self.counts))

    @property
    def variance(self) -> float:
        return float(np.var(self.counts, ddof=1)) if len(self.counts) > 1 else 0.0


def sample_airy_points(n: int, top: int, replicas: int, rng: RngStream,
                       threads: int = 1) -> list[PointSample]:
    """``replicas`` rescaled GUE edge configurations with ``top`` points each."""
    if top > n:
        raise ConfigError("cannot take more points than the matrix dimension")
    arr = run_replicas_array(lambda ss: rescaled_top_eigenvalues(n, ss, top), replicas, rng, threads)
    return [PointSample(row) for row in arr]


def _as_array(samples) -> list[np.ndarray]:
    return [s.points if isinstance(s, PointSample) else np.asarray(s, dtype=float) for s in samples]


def count_statistics(samples: Sequence, a: float, c1: float = 1.0, c2: float = 1.0,
                     mean_tolerance: float = 2.0) -> CountStats:
    """Mean and variance of ``N_a``, the number of points at or above ``-a``.

    Flags: ``mean_ok`` when the mean is within ``mean_tolerance`` of the
    leading-order count, ``variance_ok`` when the variance is at most
    ``c1 log a + c2``.  Deviation frequencies ``P(|N_a - E N_a| > x)`` for
    ``x = 1, 2, 3`` are included.
    """
    counts = np.array([int(np.count_nonzero(p >= -a)) for p in _as_array(samples)])
    st = CountStats(float(a), counts)
    if counts.size == 0:
        st.summary = {"mean": 0.0, "variance": 0.0}
        return st
    mean = float(counts.mean())
    var = st.variance
    target = expected_count(a)
    dev = np.abs(counts - mean)
    st.summary = {
        "mean": mean, "variance": var, "expected_leading": target,
        "expected_kernel_integral": expected_count_exact(a),
        "mean_ok": abs(mean - target) <= mean_tolerance,
        "variance_bound": c1 * math.log(max(a, 1.0)) + c2,
        "variance_ok": var <= c1 * math.log(max(a, 1.0)) + c2,
        "deviation_freq": {x: float(np.mean(dev > x)) for x in (1, 2, 3)},
    }
    return st


def count_variance_growth(samples: Sequence, a_list=(4.0, 8.0, 16.0), max_step: float = 2.0):
    """Variance of ``N_a`` over a doubling sequence of ``a``; passes when each step grows ``<= max_step``."""
    var = [count_statistics(samples, a).variance for a in a_list]
    steps = np.diff(var)
    return make_report(
        "count-variance", "logarithmic variance growth of point counts",
        {"a_list": list(a_list), "max_step": max_step},
        {"variance": var, "increments": steps},
        {"bounded_growth": bool(np.all(steps <= max_step))}, len(samples))


def point_location_test(samples: Sequence, k_max: int, median_bound: float = 2.0,
                        min_replicas: int = 100):
    """Distribution of ``m_i = i^{1/3} |A_i + kappa i^{2/3}|`` for ``i <= k_max``.

    Passes when every median is below ``median_bound``, every per-index
    survival function is nonincreasing and the pooled log-survival has a
    negative slope in ``m``.
    """
    require_replicas(len(samples), min_replicas, "point_location_test")
    pts = np.stack([p[:k_max] for p in _as_array(samples)])
    if pts.shape[1] < k_max:
        raise ConfigError(f"samples carry fewer than {k_max} points")
    i = np.arange(1, k_max + 1)
    m = i ** (1.0 / 3.0) * np.abs(pts + KAPPA * i ** (2.0 / 3.0))
    med = np.median(m, axis=0)
    grid = np.linspace(0.0, float(np.quantile(m, 0.99)), 30)
    monotone = all(is_nonincreasing(survival(m[:, c], grid)) for c in range(k_max))
    slope, _, used = tail_fit(m, 1.0)
    return make_report(
        "point-locations", "points sit near -kappa i^{2/3} with exponential tails",
        {"k_max": k_max, "median_bound": median_bound},
        {"medians": med, "median_max": float(med.max()), "tail_slope_m": slope,
         "survival_at_0": float(survival(m, [0.0])[0]), "fit_points": used},
        {"medians_bounded": med.max() <= median_bound, "survival_monotone": monotone,
         "negative_slope": slope < 0}, len(samples))
