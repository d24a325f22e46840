"""Brownian bridges and nonintersecting bridge systems by rejection.

All samplers here are pure functions of their inputs and an
:class:`~airyline.rng.RngStream`; the same stream reproduces the same output.

Avoidance is imposed at grid times (``avoidance="grid"``).  The alternative
``avoidance="bridge"`` additionally rejects each proposal with the exact
probability that the piecewise Brownian-bridge interpolation crosses between
grid times: for a gap process with endpoints ``a, b > 0`` over a step ``h`` and
quadratic-variation rate ``s2`` that probability is ``exp(-2ab / (s2 h))``.
For two lines (or one line over a piecewise-linear floor) this reproduces the
continuum conditioning exactly; for three or more lines the per-pair factors
are multiplied as if independent, which is an approximation.
"""
from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from . import kernels
from .errors import ConfigError, InsufficientDataError, PreconditionError, RejectionFailure
from .grid import BridgeSpec, GridSpec, LineEnsemble, Path
from .rng import as_generator
from .stats import ks_two_sample, make_report, require_replicas, tail_fit

AVOIDANCE_MODES = ("grid", "bridge")
MAX_ATTEMPTS = 10**6
_MAX_BATCH = 4096


def bridge_batch(gen: np.random.Generator, starts, ends, grid: GridSpec, variance: float,
                 size: int) -> np.ndarray:
    """``size`` independent bridge systems, shape ``(size, k, grid.size)``.

    A Brownian path built from Gaussian increments, minus its linear
    interpolation through the final value, is a Brownian bridge with exact
    grid marginals.
    """
    starts = np.atleast_1d(np.asarray(starts, dtype=float))
    ends = np.atleast_1d(np.asarray(ends, dtype=float))
    k, steps = starts.size, grid.steps
    frac = np.linspace(0.0, 1.0, steps + 1)
    out = np.empty((size, k, steps + 1))
    out[:, :, 0] = 0.0
    inc = gen.standard_normal((size, k, steps))
    np.cumsum(inc, axis=2, out=out[:, :, 1:])
    out *= math.sqrt(variance * grid.spacing)
    out -= out[:, :, -1:] * frac
    out += starts[None, :, None] + (ends - starts)[None, :, None] * frac
    # pin exactly: the affine correction above is exact only up to rounding
    out[:, :, 0] = starts
    out[:, :, -1] = ends
    return out


def sample_brownian_bridge(spec: BridgeSpec, rng) -> Path:
    gen = as_generator(rng)
    v = bridge_batch(gen, [spec.start_value], [spec.end_value], spec.grid, spec.variance, 1)
    return Path(spec.grid, v[0, 0], spec.variance, spec.slope)


def _check_specs(specs: Sequence[BridgeSpec], lower_boundary: Path | None):
    if not specs:
        raise ConfigError("need at least one bridge spec")
    grid, var = specs[0].grid, specs[0].variance
    if any(s.grid != grid for s in specs) or any(s.variance != var for s in specs):
        raise ConfigError("all bridges must share one grid and one variance")
    a = np.array([s.start_value for s in specs])
    b = np.array([s.end_value for s in specs])
    if np.any(np.diff(a) > 0) or np.any(np.diff(b) > 0):
        raise PreconditionError("bridge endpoints must be listed top line first (nonincreasing)")
    if np.any(np.diff(a) == 0) or np.any(np.diff(b) == 0):
        raise PreconditionError(
            "coincident endpoints give zero acceptance probability; "
            "use the matrix constructions in airyline.dyson for melons")
    lower = None
    if lower_boundary is not None:
        if lower_boundary.grid != grid:
            raise ConfigError("lower boundary must live on the bridges' grid")
        lower = lower_boundary.values
        if not (a[-1] > lower[0] and b[-1] > lower[-1]):
            raise PreconditionError("bottom bridge must start and end above the lower boundary")
    return grid, var, a, b, lower


def crossing_log_weight(paths: np.ndarray, lower, variance: float, h: float) -> np.ndarray:
    """Log-probability that the bridge interpolation of each system avoids crossing.

    ``paths`` is ``(batch, k, N)`` and must already be ordered at grid times.
    """
    logw = np.zeros(paths.shape[0])
    if paths.shape[1] > 1:
        gap = paths[:, :-1, :] - paths[:, 1:, :]
        x = gap[:, :, :-1] * gap[:, :, 1:] / (variance * h)
        logw += np.log1p(-np.exp(-x)).sum(axis=(1, 2))
    if lower is not None:
        gap = paths[:, -1, :] - lower[None, :]
        x = 2.0 * gap[:, :-1] * gap[:, 1:] / (variance * h)
        logw += np.log1p(-np.exp(-x)).sum(axis=1)
    return logw


def _accept(gen, paths, lower, avoidance, variance, h):
    ok = kernels.ordered_mask(paths, lower)
    if avoidance == "bridge":
        u = gen.random(paths.shape[0])
        idx = np.flatnonzero(ok)
        if idx.size:
            ok[idx] = np.log(u[idx]) < crossing_log_weight(paths[idx], lower, variance, h)
    return ok


def propose_and_test(specs, lower_boundary=None, trials: int = 1, rng=None,
                     avoidance: str = "grid", batch: int = 8192) -> int:
    """Run ``trials`` independent proposals of the rejection loop; return the number accepted."""
    if avoidance not in AVOIDANCE_MODES:
        raise ConfigError(f"avoidance must be one of {AVOIDANCE_MODES}")
    grid, var, a, b, lower = _check_specs(specs, lower_boundary)
    gen = as_generator(rng)
    accepted, done = 0, 0
    while done < trials:
        m = min(batch, trials - done)
        paths = bridge_batch(gen, a, b, grid, var, m)
        accepted += int(_accept(gen, paths, lower, avoidance, var, grid.spacing).sum())
        done += m
    return accepted


def sample_nonintersecting_bridges(specs: Sequence[BridgeSpec], lower_boundary: Path | None = None,
                                   max_attempts: int = MAX_ATTEMPTS, rng=None,
                                   avoidance: str = "grid", return_attempts: bool = False):
    """Independent bridges conditioned to stay ordered (and above ``lower_boundary``).

    Proposals are drawn in batches whose sizes double up to a fixed cap, and
    the first accepted proposal in stream order is returned; the schedule is
    fixed, so the output is a deterministic function of the stream.  Raises
    :class:`RejectionFailure` after ``max_attempts`` proposals.
    """
    if avoidance not in AVOIDANCE_MODES:
        raise ConfigError(f"avoidance must be one of {AVOIDANCE_MODES}")
    grid, var, a, b, lower = _check_specs(specs, lower_boundary)
    gen = as_generator(rng)
    slopes = (b - a) / grid.length
    attempts, size = 0, 1
    while attempts < max_attempts:
        m = min(size, max_attempts - attempts)
        paths = bridge_batch(gen, a, b, grid, var, m)
        if len(specs) == 1 and lower is None and avoidance == "grid":
            ok = np.ones(m, dtype=bool)
        else:
            ok = _accept(gen, paths, lower, avoidance, var, grid.spacing)
        hit = np.flatnonzero(ok)
        if hit.size:
            attempts += int(hit[0]) + 1
            out = [Path(grid, paths[hit[0], i], var, float(slopes[i])) for i in range(len(specs))]
            return (out, attempts) if return_attempts else out
        attempts += m
        size = min(2 * size, _MAX_BATCH)
    raise RejectionFailure(attempts)


def two_bridge_acceptance(dx: float, dy: float, variance: float, horizon: float) -> float:
    """Probability that two independent bridges with start gap ``dx`` and end gap ``dy`` never meet.

    The gap is a Brownian bridge from ``dx`` to ``dy`` with rate ``2 variance``;
    by reflection it hits zero with probability ``exp(-2 dx dy / (2 v T))``.
    """
    if dx <= 0 or dy <= 0:
        return 0.0
    return -math.expm1(-dx * dy / (variance * horizon))


def dominance_test(sample_a, sample_b, level: float = 0.01):
    """One-sided check that ``sample_b`` stochastically dominates ``sample_a``.

    Uses the one-sided two-sample Kolmogorov–Smirnov test whose alternative is
    that ``sample_a`` exceeds ``sample_b`` somewhere; passes when that
    alternative is not detected at ``level``.
    """
    a = np.asarray(sample_a, dtype=float).ravel()
    b = np.asarray(sample_b, dtype=float).ravel()
    if a.size == 0 or b.size == 0:
        raise InsufficientDataError("dominance test needs two nonempty samples")
    stat, p = ks_two_sample(a, b, alternative="less")
    return make_report(
        "dominance", "monotone coupling: raised boundary data raise each line",
        {"level": level, "n_a": a.size, "n_b": b.size},
        {"ks_statistic": stat, "p_value": p},
        {"not_exceeded": p >= level}, min(a.size, b.size), thresholds={"level": level})


def _as_paths(paths) -> list[Path]:
    out = []
    for p in paths:
        if isinstance(p, LineEnsemble):
            out.extend(p.lines)
        else:
            out.append(p)
    return out


def increment_statistic(values, grid: GridSpec, k: int = 1, slopes=None) -> np.ndarray:
    """Per-row ``sup_{grid pairs} |dB - b dt| / sqrt(k dt log(1 + 1/dt))``."""
    values = np.atleast_2d(np.asarray(values, dtype=float))
    lags = np.arange(grid.size) * grid.spacing
    inv = np.zeros(grid.size)
    inv[1:] = 1.0 / np.sqrt(k * lags[1:] * np.log1p(1.0 / lags[1:]))
    drift = np.zeros(values.shape[0]) if slopes is None else np.asarray(slopes) * grid.spacing
    return kernels.lag_sup(values, drift, inv)


def increment_tail_scan(paths, k: int = 1, slope_correction: bool = True,
                        min_replicas: int = 100):
    """Normalised increment statistic of each path, with a Gaussian-type tail fit.

    Passes when the fitted slope of the log-survival against ``m**2`` is
    negative.  The curvature of log-survival against ``m**2`` is also
    reported (negative means concave).
    """
    paths = _as_paths(paths)
    require_replicas(len(paths), min_replicas, "increment_tail_scan")
    grid = paths[0].grid
    if any(p.grid != grid for p in paths):
        raise ConfigError("all paths must share one grid")
    vals = np.stack([p.values for p in paths])
    slopes = np.array([p.slope for p in paths]) if slope_correction else None
    stat = increment_statistic(vals, grid, k, slopes)
    slope, intercept, used = tail_fit(stat, 2.0)
    x = np.sort(stat)
    n = x.size
    idx = np.arange(n // 2, n - 10)
    curv = float(np.polyfit(x[idx] ** 2, np.log((n - idx) / n), 2)[0]) if idx.size > 3 else 0.0
    q = np.quantile(stat, [0.5, 0.9, 0.99])
    return make_report(
        "increment-tail", "Gaussian-type tails of normalised bridge increments",
        {"k": k, "slope_correction": slope_correction, "steps": grid.steps},
        {"tail_slope_m2": slope, "intercept": intercept, "fit_points": used,
         "curvature_m2": curv, "median": q[0], "q90": q[1], "q99": q[2]},
        {"negative_slope": slope < 0}, n, thresholds={"tail_slope_m2": "< 0"})
