"""Bridge representation: resample an ensemble between grid times by Brownian bridges.

Given the values of the top ``2k`` lines at ``s_j = t j / ell``, each slab
``[s_{j-1}, s_j]`` is filled with variance-2 Brownian bridges through those
values.  Bridges whose lines are linked in the jam graph for that slab are
sampled jointly, conditioned not to intersect; all other bridges are
independent.  Lines in different components may cross.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import kernels
from .bridges import AVOIDANCE_MODES, MAX_ATTEMPTS, bridge_batch, sample_nonintersecting_bridges
from .dyson import airy_window_grid, rescale_values, walk_eigenvalues
from .errors import ConfigError, RejectionFailure
from .grid import BridgeSpec, GridSpec, LineEnsemble
from .jam import JamGraph, jam_graph_from_values
from .rng import RngStream, as_generator
from .stats import bonferroni, ks_two_sample, make_report, require_replicas


@dataclass(frozen=True)
class BridgeRepConfig:
    """Parameters of the representation.

    ``delta`` and ``ell`` default to ``k^{-1/3 - gamma/4}`` and
    ``ceil(t k^{2/3 + gamma})``.  ``substeps`` is the number of grid steps
    inside each slab.  ``delta = 0`` is allowed and switches all
    conditioning off.
    """

    k: int
    t: float
    gamma: float = 1.0
    delta: float | None = None
    ell: int | None = None
    substeps: int = 4
    variance: float = 2.0
    avoidance: str = "grid"
    max_attempts: int = MAX_ATTEMPTS

    def __post_init__(self):
        if self.k < 1:
            raise ConfigError("k must be at least 1")
        if not self.t > 0:
            raise ConfigError("horizon t must be positive")
        if self.gamma <= 0:
            raise ConfigError("gamma must be positive")
        if self.substeps < 1:
            raise ConfigError("substeps must be positive")
        if self.avoidance not in AVOIDANCE_MODES:
            raise ConfigError(f"avoidance must be one of {AVOIDANCE_MODES}")
        if self.delta is not None and self.delta < 0:
            raise ConfigError("delta must be nonnegative")
        if self.ell is not None and self.ell < 1:
            raise ConfigError("ell must be at least 1")

    @property
    def delta_value(self) -> float:
        return self.k ** (-1.0 / 3.0 - self.gamma / 4.0) if self.delta is None else float(self.delta)

    @property
    def ell_value(self) -> int:
        if self.ell is not None:
            return int(self.ell)
        return int(math.ceil(self.t * self.k ** (2.0 / 3.0 + self.gamma) - 1e-9))

    @property
    def slab_grid(self) -> GridSpec:
        return GridSpec(0.0, self.t, self.ell_value)

    @property
    def fine_grid(self) -> GridSpec:
        return GridSpec(0.0, self.t, self.ell_value * self.substeps)

    def as_dict(self) -> dict:
        return {"k": self.k, "t": self.t, "gamma": self.gamma, "delta": self.delta_value,
                "ell": self.ell_value, "substeps": self.substeps, "variance": self.variance,
                "avoidance": self.avoidance, "max_attempts": self.max_attempts}


@dataclass
class BoundarySamples:
    """Values of lines ``1..2k`` at the slab boundaries, shape ``(2k, ell + 1)``."""

    values: np.ndarray
    grid: GridSpec

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape[1] != self.grid.size:
            raise ConfigError("boundary columns must match the slab grid")
        if self.values.shape[0] > 1 and not np.all(np.diff(self.values, axis=0) < 0):
            raise ConfigError("boundary values must be strictly decreasing in the line index")


def default_n(k: int) -> int:
    return max(200, 25 * k)


def boundary_from_finite_n(n: int, config: BridgeRepConfig, rng) -> BoundarySamples:
    """Rescaled Dyson values of the top ``2k`` lines at the slab boundaries."""
    k2 = 2 * config.k
    if n < 4 * config.k:
        raise ConfigError(f"n = {n} is too small for 2k = {k2} edge lines (need n >= 4k)")
    sg = config.slab_grid
    src = airy_window_grid(n, 0.0, config.t, config.ell_value)
    w = walk_eigenvalues(n, src.times, as_generator(rng), keep=k2)
    return BoundarySamples(rescale_values(w, src.times, n), sg)


def direct_ensemble(n: int, k: int, grid: GridSpec, rng) -> LineEnsemble:
    """Top ``k`` rescaled Dyson lines sampled directly on ``grid`` (rescaled times)."""
    src = airy_window_grid(n, grid.t_start, grid.t_end, grid.steps)
    w = walk_eigenvalues(n, src.times, as_generator(rng), keep=k)
    return LineEnsemble(grid, rescale_values(w, src.times, n), ordered=True, variance=2.0,
                        meta={"n": n, "kind": "rescaled-dyson"})


def sample_bridge_representation(boundary: BoundarySamples, config: BridgeRepConfig,
                                 rng: RngStream) -> LineEnsemble:
    """Bridge representation of the boundary data.

    Each ``(slab, component)`` draws from its own child stream.  Rejection
    failures are recorded in ``meta["failures"]`` as ``(slab, first line,
    last line)``; the affected values are NaN and ``meta["partial"]`` is set.
    """
    vals_b = boundary.values
    k2, ell = vals_b.shape[0], vals_b.shape[1] - 1
    if ell != config.ell_value:
        raise ConfigError(f"boundary has {ell} slabs, config expects {config.ell_value}")
    delta, sub, var = config.delta_value, config.substeps, config.variance
    graph = jam_graph_from_values(vals_b, delta)
    h = config.t / ell
    slab = GridSpec(0.0, h, sub)
    fine = config.fine_grid
    out = np.empty((k2, fine.size))
    out[:, ::sub] = vals_b
    failures = []
    for j in range(1, ell + 1):
        a, b = vals_b[:, j - 1], vals_b[:, j]
        cols = slice((j - 1) * sub, j * sub + 1)
        for comp in graph.slab_components(j):
            i0, i1 = comp[0] - 1, comp[-1]
            stream = rng.child("slab", j, "line", comp[0])
            if len(comp) == 1:
                seg = bridge_batch(as_generator(stream), a[i0:i1], b[i0:i1], slab, var, 1)[0]
            else:
                specs = [BridgeSpec(a[i], b[i], slab, var) for i in range(i0, i1)]
                try:
                    paths = sample_nonintersecting_bridges(
                        specs, None, config.max_attempts, stream, config.avoidance)
                    seg = np.stack([p.values for p in paths])
                except RejectionFailure:
                    failures.append((j, comp[0], comp[-1]))
                    seg = np.full((len(comp), sub + 1), np.nan)
                    seg[:, 0], seg[:, -1] = a[i0:i1], b[i0:i1]
            out[i0:i1, cols] = seg
    out[:, ::sub] = vals_b  # exact interpolation at the slab boundaries
    meta = {"kind": "bridge-rep", "config": config.as_dict(), "partial": bool(failures),
            "failures": failures, "max_component": graph.max_component}
    return LineEnsemble(fine, out, ordered=False, variance=var, meta=meta)


def slab_ordering_violations(ensemble: LineEnsemble, k: int, substeps: int) -> int:
    """Number of slabs in which the top ``k`` lines are not strictly ordered."""
    v = ensemble.values[:k]
    ell = (v.shape[1] - 1) // substeps
    segs = np.stack([v[:, j * substeps:(j + 1) * substeps + 1] for j in range(ell)])
    return int(np.count_nonzero(~kernels.ordered_mask(segs)))


# ---------------------------------------------------------------- equivalence

def default_functionals(grid: GridSpec, k: int, slab_steps: int) -> list[tuple[str, callable]]:
    """Fixed-time marginals, dyadic increments and suprema of lines ``1..k``.

    Marginal times are the midpoints of the first, middle and last slab
    (values at slab boundaries are shared by construction).  Increment spans
    are ``h, 2h, 4h, ...`` from time 0 up to half the window, with ``h`` the
    grid spacing.
    """
    n_slabs = grid.steps // slab_steps
    half = slab_steps // 2 if slab_steps > 1 else 0
    mids = sorted({half, (n_slabs // 2) * slab_steps + half, (n_slabs - 1) * slab_steps + half})
    spans, s = [], 1
    while s <= grid.steps // 2:
        spans.append(s)
        s *= 2
    out = []
    for i in range(k):
        for c in mids:
            out.append((f"line{i + 1}@t={grid.times[c]:.4g}", lambda v, i=i, c=c: v[i, c]))
        for s in spans:
            out.append((f"line{i + 1}:inc[{s}]", lambda v, i=i, s=s: v[i, s] - v[i, 0]))
        out.append((f"line{i + 1}:sup", lambda v, i=i: v[i].max()))
    return out


def ensemble_equivalence_test(direct: Sequence[LineEnsemble], bridged: Sequence[LineEnsemble],
                              k: int, functionals=None, level: float = 0.01,
                              slab_steps: int = 1, name: str = "bridge-rep-equivalence"):
    """Two-sample KS tests of each functional, Bonferroni-corrected at ``level``."""
    if not direct or not bridged:
        raise ConfigError("need two nonempty ensemble samples")
    grid = direct[0].grid
    if any(e.grid != grid for e in list(direct) + list(bridged)):
        raise ConfigError("direct and bridged ensembles must share one grid")
    require_replicas(min(len(direct), len(bridged)), 20, name)
    dropped = sum(1 for e in bridged if e.meta.get("partial"))
    bridged = [e for e in bridged if not e.meta.get("partial")]
    functionals = functionals or default_functionals(grid, k, slab_steps)
    corrected = bonferroni(level, len(functionals))
    dv = np.stack([e.values[:k] for e in direct])
    bv = np.stack([e.values[:k] for e in bridged])
    pvals, checks = {}, {}
    for label, f in functionals:
        x = np.array([f(v) for v in dv])
        y = np.array([f(v) for v in bv])
        _, p = ks_two_sample(x, y)
        pvals[label] = p
        checks[label] = p >= corrected
    return make_report(
        name, "bridge representation matches the ensemble law on the top lines",
        {"k": k, "level": level, "n_functionals": len(functionals), "steps": grid.steps},
        {"p_values": pvals, "min_p": min(pvals.values()), "corrected_level": corrected,
         "dropped_partial": dropped},
        checks, min(len(direct), len(bridged)), thresholds={"p_value": corrected})


# ---------------------------------------------------------------- modulus

D_GRID = tuple(np.arange(0.0, 3.01, 0.5))


def modulus_per_line(values, grid: GridSpec) -> np.ndarray:
    """``sup_{grid pairs} |X(s+r) - X(s)| / (sqrt(r) log^{1/2}(1 + 1/r))`` for each row."""
    values = np.atleast_2d(values)
    r = np.arange(grid.size) * grid.spacing
    inv = np.zeros(grid.size)
    inv[1:] = 1.0 / np.sqrt(r[1:] * np.log1p(1.0 / r[1:]))
    return kernels.lag_sup(values, np.zeros(values.shape[0]), inv)


def uniform_modulus(per_line: np.ndarray, K: int, d: float) -> np.ndarray:
    """``max_{j <= K} S_j / max(1, log j)^d`` for each replica row of ``per_line``."""
    j = np.arange(1, K + 1)
    w = np.maximum(1.0, np.log(j)) ** d
    return (per_line[:, :K] / w).max(axis=1)


def modulus_scan(ensembles: Sequence[LineEnsemble], k_list=(2, 4, 8), d_grid=D_GRID,
                 max_ratio: float = 1.5, quantile: float = 0.99):
    """Uniform-in-``k`` modulus statistic; reports the smallest working ``d``.

    ``d`` works when the ``quantile`` of the uniform statistic grows by at
    most ``max_ratio`` between consecutive entries of ``k_list``.
    """
    if not ensembles:
        raise ConfigError("modulus_scan needs ensembles")
    grid = ensembles[0].grid
    kmax = max(k_list)
    if any(e.n_lines < kmax for e in ensembles):
        raise ConfigError(f"ensembles need at least {kmax} lines")
    S = np.stack([modulus_per_line(e.values[:kmax], grid) for e in ensembles])
    table, working = {}, []
    for d in d_grid:
        q = [float(np.quantile(uniform_modulus(S, K, d), quantile)) for K in k_list]
        ratios = [q[i + 1] / q[i] if q[i] > 0 else (0.0 if q[i + 1] == 0 else math.inf)
                  for i in range(len(q) - 1)]
        ok = all(r <= max_ratio for r in ratios)
        table[f"d={d:g}"] = {"q": q, "ratios": ratios, "ok": ok}
        if ok:
            working.append(float(d))
    best = min(working) if working else None
    return make_report(
        "modulus-scan", "uniform modulus of continuity over the top lines",
        {"k_list": list(k_list), "d_grid": [float(d) for d in d_grid], "max_ratio": max_ratio,
         "quantile": quantile, "steps": grid.steps},
        {"per_d": table, "smallest_working_d": best,
         "per_line_quantiles": np.quantile(S, quantile, axis=0)},
        {"some_d_works": best is not None}, len(ensembles))


def refinement_stability(fine: Sequence[LineEnsemble], stride: int = 2, lines: int | None = None,
                         quantile: float = 0.99, band=(0.8, 1.25)):
    """Per-line modulus quantile on the full grid versus the grid subsampled by ``stride``."""
    grid = fine[0].grid
    nl = lines or fine[0].n_lines
    S_f = np.stack([modulus_per_line(e.values[:nl], grid) for e in fine])
    cg = grid.coarsen(stride)
    S_c = np.stack([modulus_per_line(e.values[:nl, ::stride], cg) for e in fine])
    qf, qc = np.quantile(S_f, quantile, axis=0), np.quantile(S_c, quantile, axis=0)
    ratio = qf / qc
    return make_report(
        "modulus-refinement", "per-line modulus is stable under grid refinement",
        {"stride": stride, "quantile": quantile, "band": list(band), "lines": nl},
        {"fine": qf, "coarse": qc, "ratio": ratio},
        {"ratio_in_band": bool(np.all((ratio >= band[0]) & (ratio <= band[1])))}, len(fine))
