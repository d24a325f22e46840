"""Dyson Brownian motion, Brownian melons and the edge rescaling.

Convention: a Hermitian Brownian motion has real diagonal entries of
variance ``t`` and complex off-diagonal entries with ``E|H_ij|^2 = t``, so
each eigenvalue moves like a variance-1 Brownian motion between
interactions and the top eigenvalue at time 1 sits near ``2 sqrt(n)``.

Eigenvalue paths are exact at the requested times.  A walk that starts at
``t0 > 0`` starts from the diagonal matrix of a GUE spectrum scaled by
``sqrt(t0)``; this is exact because the GUE increments are unitarily
invariant, so later eigenvalues depend on the starting matrix only through
its spectrum.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.linalg import eigh, eigvalsh_tridiagonal

from .errors import ConfigError, NumericalError, RangeError
from .grid import GridSpec, LineEnsemble
from .rng import RngStream, as_generator
from .stats import is_nonincreasing, make_report, require_replicas, survival, tail_fit

_SQRT_HALF = math.sqrt(0.5)


def gue_lower(gen: np.random.Generator, n: int, lead=()) -> np.ndarray:
    """Lower triangle (with diagonal) of GUE matrices; the upper part is zero.

    LAPACK's Hermitian solvers read only one triangle, so this is all they
    need.  ``lead`` prepends batch axes.
    """
    z = gen.standard_normal(tuple(lead) + (n, n))
    lo = np.tril(z, -1)
    h = (lo + 1j * np.swapaxes(np.triu(z, 1), -1, -2)) * _SQRT_HALF
    idx = np.arange(n)
    h[..., idx, idx] = z[..., idx, idx]
    return h


def gue_matrix(gen: np.random.Generator, n: int) -> np.ndarray:
    """Full Hermitian GUE matrix."""
    lo = gue_lower(gen, n)
    return lo + np.conj(np.tril(lo, -1)).T


def sample_gue_spectrum(n: int, rng, size: int | None = None) -> np.ndarray:
    """GUE eigenvalues, sorted decreasing, from the tridiagonal model.

    Householder reduction of a GUE matrix gives a real tridiagonal matrix with
    ``N(0, 1)`` diagonal and off-diagonals ``chi_{2(n-i)} / sqrt(2)``; its
    spectrum has the GUE law.  Returns shape ``(n,)`` or ``(size, n)``.
    """
    if n < 1:
        raise ConfigError("GUE dimension must be at least 1")
    gen = as_generator(rng)
    m = 1 if size is None else size
    d = gen.standard_normal((m, n))
    e = np.sqrt(gen.chisquare(2.0 * np.arange(n - 1, 0, -1), size=(m, n - 1)) * 0.5)
    out = np.empty((m, n))
    for r in range(m):
        out[r] = eigvalsh_tridiagonal(d[r], e[r], lapack_driver="stemr")[::-1] if n > 1 else d[r]
    return out[0] if size is None else out


def _eigs_desc(h: np.ndarray) -> np.ndarray:
    try:
        w = np.linalg.eigvalsh(h, UPLO="L")
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise NumericalError(f"Hermitian eigensolver failed: {exc}", matrix=h) from exc
    w = w[..., ::-1]
    if w.shape[-1] > 1 and not np.all(np.diff(w, axis=-1) < 0):
        bad = np.argwhere(~np.all(np.diff(w, axis=-1) < 0, axis=-1))
        raise NumericalError("eigenvalue collision in Dyson path", matrix=h[tuple(bad[0])])
    return w


def walk_eigenvalues(n: int, times, gen: np.random.Generator, keep: int | None = None) -> np.ndarray:
    """Eigenvalues of one Hermitian Brownian motion at increasing ``times``.

    Returns ``(keep, len(times))``, top line first.  ``times[0] = 0`` gives
    all-zero eigenvalues there.
    """
    times = np.asarray(times, dtype=float)
    if times[0] < 0 or np.any(np.diff(times) <= 0):
        raise ConfigError("walk times must be nonnegative and strictly increasing")
    keep = n if keep is None else keep
    out = np.empty((keep, times.size))
    idx = np.arange(n)
    h = np.zeros((n, n), dtype=complex)
    if times[0] > 0:
        h[idx, idx] = math.sqrt(times[0]) * sample_gue_spectrum(n, gen)
        out[:, 0] = np.sort(h[idx, idx].real)[::-1][:keep]
    else:
        out[:, 0] = 0.0
    dt = np.diff(times)
    incs = gue_lower(gen, n, (dt.size,)) * np.sqrt(dt)[:, None, None]
    path = h[None] + np.cumsum(incs, axis=0)
    if n == 1:
        out[:, 1:] = path[:, 0, 0].real[None]
    else:
        out[:, 1:] = _eigs_desc(path)[:, :keep].T
    return out


def walk_batch(n: int, times, streams: Sequence, keep: int | None = None) -> np.ndarray:
    """``walk_eigenvalues`` for each stream: shape ``(len(streams), keep, len(times))``."""
    return np.stack([walk_eigenvalues(n, times, as_generator(s), keep) for s in streams])


def sample_dyson_paths(n: int, grid: GridSpec, rng, keep: int | None = None) -> LineEnsemble:
    """Dyson Brownian motion on ``grid`` as eigenvalues of a Hermitian walk."""
    if grid.t_start < 0:
        raise ConfigError("Dyson paths need t_start >= 0")
    vals = walk_eigenvalues(n, grid.times, as_generator(rng), keep)
    return LineEnsemble(grid, vals, ordered=True, variance=1.0, meta={"n": n, "kind": "dyson"})


@dataclass
class HermitianWalk:
    """Matrix states of a Hermitian Brownian motion at the grid times."""

    n: int
    grid: GridSpec
    states: np.ndarray
    convention: str = "diag var dt, offdiag E|h|^2 = dt"

    def eigenvalues(self) -> np.ndarray:
        """``(n, grid.size)``, top first; the zero start state gives zeros."""
        out = np.zeros((self.n, self.grid.size))
        out[:, 1:] = _eigs_desc(self.states[1:]).T
        return out


def hermitian_walk(n: int, grid: GridSpec, rng) -> HermitianWalk:
    gen = as_generator(rng)
    if grid.t_start != 0:
        raise ConfigError("matrix walks start from zero at t_start = 0")
    incs = gue_lower(gen, n, (grid.steps,)) * math.sqrt(grid.spacing)
    lo = np.concatenate([np.zeros((1, n, n), complex), np.cumsum(incs, axis=0)])
    full = lo + np.conj(np.swapaxes(np.tril(lo, -1), -1, -2))
    return HermitianWalk(n, grid, full)


def melon_values(k: int, grid: GridSpec, variance: float, gen: np.random.Generator) -> np.ndarray:
    """One k-melon as eigenvalues of a Hermitian Brownian bridge, ``(k, grid.size)``."""
    if k < 1:
        raise ConfigError("melon needs k >= 1")
    frac = np.linspace(0.0, 1.0, grid.size)
    incs = gue_lower(gen, k, (grid.steps,)) * math.sqrt(grid.spacing * variance)
    w = np.concatenate([np.zeros((1, k, k), complex), np.cumsum(incs, axis=0)])
    b = w - frac[:, None, None] * w[-1][None]
    out = np.zeros((k, grid.size))
    if k == 1:
        out[0, 1:-1] = b[1:-1, 0, 0].real
    else:
        out[:, 1:-1] = _eigs_desc(b[1:-1]).T
    return out


def sample_melon(k: int, grid: GridSpec, variance: float, rng) -> LineEnsemble:
    """Brownian k-melon of the given variance, pinned to 0 at both grid ends."""
    if not np.isfinite(grid.t_start) or not np.isfinite(grid.t_end):
        raise ConfigError("melon grid must be finite")
    vals = melon_values(k, grid, variance, as_generator(rng))
    return LineEnsemble(grid, vals, ordered=True, variance=variance, meta={"kind": "melon"})


# ---------------------------------------------------------------- edge scaling

def source_times(n: int, t):
    """Dyson time ``1 + 2 t n^{-1/3}`` corresponding to rescaled time ``t``."""
    return 1.0 + 2.0 * np.asarray(t, dtype=float) * n ** (-1.0 / 3.0)


def rescaled_times(n: int, tau):
    return (np.asarray(tau, dtype=float) - 1.0) * n ** (1.0 / 3.0) / 2.0


def rescale_values(values, tau, n: int) -> np.ndarray:
    """``(W(tau) - 2 sqrt(n) - 2 t n^{1/6}) n^{1/6}`` with ``t`` the rescaled time of ``tau``."""
    t = rescaled_times(n, tau)
    return (np.asarray(values) - 2.0 * math.sqrt(n) - 2.0 * t * n ** (1.0 / 6.0)) * n ** (1.0 / 6.0)


def airy_window_grid(n: int, t_start: float, t_end: float, steps: int) -> GridSpec:
    """Dyson-time grid covering rescaled times ``[t_start, t_end]``."""
    return GridSpec(float(source_times(n, t_start)), float(source_times(n, t_end)), steps)


def rescale_to_airy(dyson: LineEnsemble, k_keep: int, n: int | None = None,
                    window: tuple[float, float] | None = None) -> LineEnsemble:
    """Top ``k_keep`` lines of a Dyson ensemble in edge coordinates (variance 2)."""
    n = int(n if n is not None else dyson.meta["n"])
    if k_keep > min(n, dyson.n_lines):
        raise ConfigError(f"cannot keep {k_keep} lines of a {n}-line ensemble")
    grid = dyson.grid
    vals = dyson.values[:k_keep]
    t = rescaled_times(n, grid.times)
    if window is not None:
        lo, hi = window
        tol = 1e-9 * max(1.0, abs(lo), abs(hi))
        if lo < t[0] - tol or hi > t[-1] + tol:
            raise RangeError(f"rescaled window {window} outside source grid [{t[0]}, {t[-1]}]")
        keep = (t >= lo - tol) & (t <= hi + tol)
        idx = np.flatnonzero(keep)
        vals, t = vals[:, idx], t[idx]
        tau = grid.times[idx]
    else:
        tau = grid.times
    new_grid = GridSpec(float(t[0]), float(t[-1]), t.size - 1)
    out = rescale_values(vals, tau, n)
    return LineEnsemble(new_grid, out, ordered=True, variance=2.0,
                        meta={"n": n, "kind": "rescaled-dyson"})


def rescaled_top_eigenvalues(n: int, streams: Sequence, k: int = 1) -> np.ndarray:
    """``n^{1/6}(lambda_i - 2 sqrt n)`` for the top ``k`` GUE eigenvalues, one row per stream."""
    out = np.empty((len(streams), k))
    for r, s in enumerate(streams):
        out[r] = (sample_gue_spectrum(n, s)[:k] - 2.0 * math.sqrt(n)) * n ** (1.0 / 6.0)
    return out


# ---------------------------------------------------------------- tail tests

def edge_tail_test(n: int, k: int, replicas: int, rng: RngStream, m_grid=None):
    """Upper-tail decay of ``m = n^{1/6} |W_k(1) - 2 sqrt n|`` against ``m^{3/2}``."""
    require_replicas(replicas, 100, "edge_tail_test")
    from .parallel import replica_streams
    lam = rescaled_top_eigenvalues(n, replica_streams(rng, replicas), k)[:, k - 1]
    m = np.abs(lam)
    m_grid = np.linspace(0.0, np.quantile(m, 0.999), 40) if m_grid is None else np.asarray(m_grid)
    surv = survival(m, m_grid)
    slope, intercept, used = tail_fit(m, 1.5)
    return make_report(
        "edge-tail", "stretched-exponential edge tails of the k-th Dyson line",
        {"n": n, "k": k}, {"tail_slope_m32": slope, "intercept": intercept, "fit_points": used,
                           "survival_at_0": float(survival(m, [0.0])[0]),
                           "m_grid": m_grid, "survival": surv},
        {"negative_slope": slope < 0, "survival_monotone": is_nonincreasing(surv),
         "survival_at_0_is_1": survival(m, [0.0])[0] == 1.0},
        replicas, rng.seed, thresholds={"tail_slope_m32": "< 0"})


def dyson_increment_sample(n: int, k: int, t: float, s: float, streams: Sequence) -> np.ndarray:
    """``W_k(t+s) - W_k(t) - s sqrt(n/t)`` for each replica stream.

    Draws per stream match ``walk_eigenvalues(n, [t, t + s])``; the
    eigensolves are batched over the streams.
    """
    if not (t > 0 and s > 0):
        raise ConfigError("increment needs t > 0 and s > 0")
    m = len(streams)
    start = np.empty((m, n))
    h = np.empty((m, n, n), dtype=complex)
    idx = np.arange(n)
    for r, st in enumerate(streams):
        gen = as_generator(st)
        start[r] = math.sqrt(t) * sample_gue_spectrum(n, gen)
        h[r] = gue_lower(gen, n) * math.sqrt(s)
    h[:, idx, idx] += start
    w0 = start[:, k - 1]
    if n == 1:
        w1 = h[:, 0, 0].real
    else:
        # only the top k eigenvalues are needed
        w1 = np.array([eigh(a, lower=True, eigvals_only=True, subset_by_index=[n - k, n - 1],
                            driver="evx", check_finite=False)[0] for a in h])
    return w1 - w0 - s * math.sqrt(n / t)


def dyson_increment_test(n: int, k: int, t: float, s_list, replicas: int, rng: RngStream,
                         threads: int = 1):
    """Tail shape of normalised Dyson increments ``|dW - s sqrt(n/t)| / sqrt(s)``."""
    require_replicas(replicas, 100, "dyson_increment_test")
    from .parallel import run_replicas_array
    stats, checks = {}, {}
    q99 = []
    for j, s in enumerate(s_list):
        inc = run_replicas_array(
            lambda ss, s=s: dyson_increment_sample(n, k, t, s, ss), replicas, rng.child("s", j),
            threads)
        m = np.abs(inc) / math.sqrt(s)
        slope, _, used = tail_fit(m, 1.5)
        q = float(np.quantile(m, 0.99))
        q99.append(q)
        stats[f"s={s:.6g}"] = {"tail_slope_m32": slope, "q99": q, "fit_points": used,
                               "survival_at_0": float(survival(m, [0.0])[0])}
        checks[f"negative_slope[s={s:.6g}]"] = slope < 0
    stats["q99_spread"] = max(q99) / min(q99)
    return make_report(
        "dyson-increment", "stretched-exponential tails of short Dyson increments",
        {"n": n, "k": k, "t": t, "s_list": list(s_list)}, stats, checks, replicas, rng.seed,
        thresholds={"tail_slope_m32": "< 0"})


def envelope_times(n: int, points: int = 41) -> np.ndarray:
    return np.logspace(-1.0 / 3.0 * math.log10(n), 1.0 / 3.0 * math.log10(n), points)


def envelope(n: int, t, m: float, b: float):
    t = np.asarray(t, dtype=float)
    lt = np.abs(np.log(t))
    return (2.0 * math.sqrt(n) * np.sqrt(t)
            + np.sqrt(t) * n ** (-1.0 / 6.0) * (m + b * np.log(n ** (1.0 / 3.0) * lt + 1.0) ** (2.0 / 3.0)))


def envelope_test(n: int, replicas: int, m_list, rng: RngStream, b: float = 1.0,
                  points: int = 41, threads: int = 1):
    """Fraction of Dyson top-line paths that cross the iterated-log envelope, per ``m``.

    ``b`` is a free constant of the envelope; it is a parameter here rather
    than a fitted value.  Passes when the fraction is nonincreasing in ``m``
    and strictly smaller at the largest ``m`` than at the smallest.
    """
    require_replicas(replicas, 100, "envelope_test")
    from .parallel import run_replicas_array
    times = envelope_times(n, points)
    top = run_replicas_array(lambda ss: walk_batch(n, times, ss, keep=1)[:, 0, :],
                             replicas, rng, threads)
    m_list = [float(m) for m in m_list]
    frac = np.array([np.mean(np.any(top > envelope(n, times, m, b)[None], axis=1))
                     for m in m_list])
    pos = frac > 0
    slope = None
    if pos.sum() >= 2:
        slope = float(np.polyfit(np.array(m_list)[pos] ** 1.5, np.log(frac[pos]), 1)[0])
    checks = {"monotone": is_nonincreasing(frac), "decays": frac[-1] < frac[0]}
    if slope is not None:
        checks["negative_slope"] = slope < 0
    return make_report(
        "envelope", "iterated-logarithm envelope for the top Dyson line",
        {"n": n, "b": b, "m_list": m_list, "time_points": points},
        {"crossing_fraction": frac, "log_fraction_slope_m32": slope},
        checks, replicas, rng.seed)
