"""Jammed points, the greedy matching and the jam graph on (line, slab) indices."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import kernels
from .airy import expected_close_pairs, kernel_eval
from .errors import AirylineError, ConfigError
from .grid import GridSpec, LineEnsemble
from .points import PointSample
from .stats import is_nonincreasing, make_report, require_replicas, survival


@dataclass
class JamCount:
    interval: tuple[float, float] | None
    delta: float
    L: int
    eta: float | None = None


def _sorted(points) -> np.ndarray:
    p = np.asarray(points, dtype=float).ravel()
    if p.size > 1 and np.all(np.diff(p) <= 0):
        return p[::-1]
    if np.any(np.diff(p) < 0):
        return np.sort(p)
    return p


def count_jammed(points, delta: float, interval: tuple[float, float] | None = None) -> JamCount:
    """Number of points with another point within ``delta`` (inclusive).

    With ``interval = (lo, hi)`` the configuration is first restricted to
    ``[lo, hi]`` and ``eta = a^2 delta^3 ell`` is filled in for ``a = -lo``,
    ``ell = hi - lo``.
    """
    p = _sorted(points)
    eta = None
    if interval is not None:
        lo, hi = interval
        p = p[(p >= lo) & (p <= hi)]
        eta = lo * lo * delta ** 3 * (hi - lo)
    L = int(kernels.jammed_flags(p, delta).sum()) if p.size > 1 else 0
    return JamCount(interval, float(delta), L, eta)


def greedy_partial_matching(points, delta: float) -> list[tuple[float, float]]:
    """Greedy matching of consecutive jammed points.

    Walks the jammed points ``z_1 < z_2 < ...`` and pairs ``z_i`` with
    ``z_{i+1}`` whenever ``z_i`` is still free and the two are within
    ``delta``.  Every jammed point has a partner within ``delta`` so at most
    two consecutive ones are skipped, giving at least ``floor(L/3)`` pairs.
    """
    p = _sorted(points)
    z = p[kernels.jammed_flags(p, delta)] if p.size > 1 else p[:0]
    idx = kernels.greedy_pairs(z, delta)
    pairs = [(float(z[i]), float(z[j])) for i, j in idx]
    if len(pairs) < z.size // 3:
        raise AirylineError(f"greedy matching found {len(pairs)} pairs for {z.size} jammed points")
    return pairs


def matching_fuzz(n_configs: int, rng, max_points: int = 40) -> tuple[int, int]:
    """Check the ``floor(L/3)`` bound on random configurations; returns ``(checked, violations)``.

    Points are rounded to a coarse lattice so exact ties and long jammed
    chains both occur often.
    """
    from .rng import as_generator
    gen = as_generator(rng)
    done, bad = 0, 0
    while done < n_configs:
        m = min(100_000, n_configs - done)
        sizes = gen.integers(0, max_points + 1, m)
        offsets = np.concatenate([[0], np.cumsum(sizes)])
        scale = gen.choice([1.0, 10.0, 100.0], m)
        vals = np.round(gen.random(offsets[-1]) * np.repeat(scale, sizes), 1)
        for c in range(m):  # sort within each configuration
            vals[offsets[c]:offsets[c + 1]].sort()
        deltas = gen.choice([0.0, 0.05, 0.1, 0.3, 1.0], m) * np.where(gen.random(m) < 0.5, 1.0, 2.5)
        bad += kernels.matching_violations(vals, offsets, deltas)
        done += m
    return done, bad


@dataclass
class JamGraph:
    """Graph on ``{1..k} x {1..ell}``; edge ``(i, j)`` joins ``(i, j)`` and ``(i+1, j)``."""

    k: int
    ell: int
    delta: float
    edges: list = field(default_factory=list)

    def __post_init__(self):
        self.edges = sorted({(int(i), int(j)) for i, j in self.edges}, key=lambda e: (e[1], e[0]))
        for i, j in self.edges:
            if not (1 <= i < self.k and 1 <= j <= self.ell):
                raise ConfigError(f"edge {(i, j)} outside a {self.k}x{self.ell} jam graph")

    def edge_matrix(self) -> np.ndarray:
        """Boolean ``(k-1, ell)``: entry ``[i-1, j-1]`` is edge ``(i, j)``."""
        e = np.zeros((max(self.k - 1, 0), self.ell), dtype=bool)
        for i, j in self.edges:
            e[i - 1, j - 1] = True
        return e

    def slab_components(self, j: int) -> list[list[int]]:
        """Line indices of each component in slab ``j``, top to bottom.

        Edges only join vertically adjacent indices, so components are
        maximal runs of consecutive lines linked by edges.
        """
        e = self.edge_matrix()[:, j - 1] if self.k > 1 else np.zeros(0, dtype=bool)
        comps, cur = [], [1]
        for i in range(1, self.k):
            if e[i - 1]:
                cur.append(i + 1)
            else:
                comps.append(cur)
                cur = [i + 1]
        comps.append(cur)
        return comps

    @property
    def components(self) -> list[list[tuple[int, int]]]:
        return [[(i, j) for i in c] for j in range(1, self.ell + 1) for c in self.slab_components(j)]

    def component_sizes(self) -> np.ndarray:
        """Sizes of all components; run lengths in each slab column."""
        e = self.edge_matrix()
        sizes = []
        for j in range(self.ell):
            col = e[:, j] if self.k > 1 else np.zeros(0, dtype=bool)
            breaks = np.flatnonzero(~col)
            bounds = np.concatenate([[0], breaks + 1, [self.k]])
            sizes.extend(np.diff(bounds).tolist())
        return np.array(sizes, dtype=int)

    @property
    def max_component(self) -> int:
        return int(self.component_sizes().max())

    def non_isolated(self) -> np.ndarray:
        """Boolean ``(k, ell)``: vertex ``(i, j)`` has at least one edge."""
        e = self.edge_matrix()
        out = np.zeros((self.k, self.ell), dtype=bool)
        out[:-1] |= e
        out[1:] |= e
        return out

    def to_json(self) -> str:
        return json.dumps({"k": self.k, "ell": self.ell, "delta": self.delta,
                           "edges": [list(e) for e in self.edges]}, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "JamGraph":
        d = json.loads(text)
        return cls(d["k"], d["ell"], d["delta"], [tuple(e) for e in d["edges"]])

    def __eq__(self, other):
        if not isinstance(other, JamGraph):
            return NotImplemented
        return (self.k, self.ell, self.delta, self.edges) == (other.k, other.ell, other.delta, other.edges)


def jam_graph_from_values(values, delta: float) -> JamGraph:
    """Jam graph from line values at the slab boundaries, shape ``(k, ell + 1)``."""
    v = np.asarray(values, dtype=float)
    k, ell = v.shape[0], v.shape[1] - 1
    if ell < 1:
        raise ConfigError("need at least one slab")
    close = np.abs(np.diff(v, axis=0)) <= delta if k > 1 else np.zeros((0, ell + 1), bool)
    e = close[:, :-1] | close[:, 1:]
    ii, jj = np.nonzero(e)
    return JamGraph(k, ell, float(delta), list(zip((ii + 1).tolist(), (jj + 1).tolist())))


def build_jam_graph(ensemble: LineEnsemble, slab_grid: GridSpec, delta: float) -> JamGraph:
    """Jam graph of ``ensemble`` on the slabs of ``slab_grid`` (a subgrid of its grid)."""
    idx = [ensemble.grid.index_of(t) for t in slab_grid.times]
    return jam_graph_from_values(ensemble.values[:, idx], delta)


# ---------------------------------------------------------------- tests

def component_threshold(gamma: float) -> float:
    return 14.0 * (1.0 + 1.0 / gamma)


def component_size_test(max_components: Sequence[int], k: int, gamma: float,
                        max_fraction: float = 0.1, params: dict | None = None, seed=None):
    """``P(M >= 14 (1 + 1/gamma)) <= max_fraction`` over the sampled maximal component sizes."""
    m = np.asarray(max_components)
    require_replicas(m.size, 10, "component_size_test")
    thr = component_threshold(gamma)
    frac = float(np.mean(m >= thr))
    hist = np.bincount(m, minlength=k + 1)[1:]
    return make_report(
        "component-size", "jam-graph components stay small",
        dict(params or {}, k=k, gamma=gamma),
        {"threshold": thr, "exceed_fraction": frac, "max_observed": int(m.max()),
         "mean_max_component": float(m.mean()), "histogram": hist},
        {"exceed_fraction_small": frac <= max_fraction}, m.size, seed,
        thresholds={"exceed_fraction": max_fraction})


def window_jammed_counts(samples, a: float, ell_window: float, delta: float) -> np.ndarray:
    lo, hi = -a, -a + ell_window
    out = np.empty(len(samples), dtype=int)
    for r, s in enumerate(samples):
        pts = s.points if isinstance(s, PointSample) else s
        out[r] = count_jammed(pts, delta, (lo, hi)).L
    return out


def jam_concentration_test(samples, a: float, ell_window: float, delta_list,
                           slope_target: float = 3.0, slope_tol: float = 0.5,
                           m_grid=(0.5, 1.0, 2.0, 4.0, 8.0)):
    """Jammed-point counts in ``[-a, -a + ell]`` across ``delta_list``.

    Checks: the log-log slope of mean ``L`` against ``delta`` is within
    ``slope_tol`` of ``slope_target`` (undefined, hence failing, if any mean
    is zero), and for each ``delta`` the survival of ``L / eta`` is
    nonincreasing and lower at the largest ``m`` than at the smallest.
    The deterministic reference ``2 * expected_close_pairs`` is reported
    alongside; it is the Airy-process mean that the Monte Carlo estimates.
    """
    require_replicas(len(samples), 100, "jam_concentration_test")
    delta_list = [float(d) for d in delta_list]
    means, ratios, refs, per = [], [], [], {}
    checks = {}
    for d in delta_list:
        L = window_jammed_counts(samples, a, ell_window, d)
        eta = a * a * d ** 3 * ell_window
        mean = float(L.mean())
        surv = survival(L / eta, m_grid) if eta > 0 else np.zeros(len(m_grid))
        ref = 2.0 * expected_close_pairs(a, ell_window, d)
        means.append(mean)
        refs.append(ref)
        ratios.append(mean / eta if eta > 0 else None)
        per[f"delta={d:g}"] = {"mean_L": mean, "eta": eta, "mean_over_eta": ratios[-1],
                               "total_jammed": int(L.sum()), "reference_mean_L": ref,
                               "survival_L_over_eta": surv}
        checks[f"survival_monotone[delta={d:g}]"] = is_nonincreasing(surv)
        checks[f"survival_decays[delta={d:g}]"] = bool(surv[-1] < surv[0])
    means = np.array(means)
    if np.all(means > 0) and len(delta_list) >= 2:
        slope = float(np.polyfit(np.log(delta_list), np.log(means), 1)[0])
    else:
        slope = math.nan
    ref_slope = float(np.polyfit(np.log(delta_list), np.log(refs), 1)[0]) if len(delta_list) >= 2 else math.nan
    checks["slope_within_tolerance"] = bool(abs(slope - slope_target) <= slope_tol)
    notes = []
    if not np.all(means > 0):
        notes.append("no jammed points observed for some delta; the log-log slope is undefined")
    return make_report(
        "jam-scaling", "jammed-point counts scale like a^2 delta^3 ell",
        {"a": a, "ell": ell_window, "delta_list": delta_list, "slope_target": slope_target,
         "slope_tol": slope_tol, "m_grid": list(m_grid)},
        dict(per, slope=slope, reference_slope=ref_slope),
        checks, len(samples), thresholds={"slope": [slope_target - slope_tol, slope_target + slope_tol]},
        notes=notes)


def kernel_bound(lo: float, hi: float, points: int = 201, h: float = 1e-4) -> float:
    """Smallest ``b`` with ``|K| <= b``, ``|dK| <= b^2``, ``|d2K/dxdy| <= b^3`` on the window grid.

    Derivatives are central finite differences of :func:`kernel_eval`.
    """
    x = np.linspace(lo, hi, points)
    X, Y = np.meshgrid(x, x, indexing="ij")
    k0 = np.abs(kernel_eval(X, Y)).max()
    kx = np.abs((kernel_eval(X + h, Y) - kernel_eval(X - h, Y)) / (2 * h)).max()
    kxy = np.abs((kernel_eval(X + h, Y + h) - kernel_eval(X + h, Y - h)
                  - kernel_eval(X - h, Y + h) + kernel_eval(X - h, Y - h)) / (4 * h * h)).max()
    return float(max(k0, math.sqrt(kx), kxy ** (1.0 / 3.0)))


def factorial_moment(L, n: int) -> float:
    """Mean of ``binom(floor(L/3), n) n!`` (zero whenever ``n > floor(L/3)``)."""
    m = np.asarray(L, dtype=int) // 3
    val = np.ones(m.shape, dtype=float)
    for r in range(n):
        val *= np.maximum(m - r, 0)
    return float(val.mean())


def moment_bound_check(samples, a: float, ell_window: float, delta: float, n_moment: int = 1,
                       b: float | None = None):
    """Factorial moment of ``floor(L/3)`` against ``(4 n b^4 delta^3 ell)^n``.

    ``b`` bounds the kernel and its derivatives on the window (computed with
    :func:`kernel_bound` when omitted).  Also reported is the fitted constant
    ``C = moment^{1/n} / (n a^2 delta^3 ell)``, the smallest ``C`` for which
    ``moment <= (C n a^2 delta^3 ell)^n``.
    """
    L = window_jammed_counts(samples, a, ell_window, delta)
    mom = factorial_moment(L, n_moment)
    if b is None:
        b = kernel_bound(-a, -a + ell_window)
    bound = (4.0 * n_moment * b ** 4 * delta ** 3 * ell_window) ** n_moment
    eta = a * a * delta ** 3 * ell_window
    fitted = mom ** (1.0 / n_moment) / (n_moment * eta) if eta > 0 else math.nan
    return make_report(
        "moment-bound", "factorial moments of matched jammed pairs",
        {"a": a, "ell": ell_window, "delta": delta, "n_moment": n_moment, "b": b},
        {"moment": mom, "explicit_bound": bound, "fitted_C": fitted,
         "mean_floor_L_over_3": float(np.mean(L // 3))},
        {"below_explicit_bound": mom <= bound}, len(L))


def edge_spread_counts(graph: JamGraph, alpha: float) -> np.ndarray:
    """Window counts ``|V_j ∩ {i - floor(k^alpha), ..., i}|`` over all ``(i, j)``.

    ``V_j`` is the set of lines non-isolated in either slab adjacent to slab
    boundary ``j`` (one slab at the two ends of the grid).
    """
    iso = graph.non_isolated()
    k, ell = graph.k, graph.ell
    v = np.zeros((k, ell + 1), dtype=bool)
    v[:, :-1] |= iso
    v[:, 1:] |= iso
    w = int(math.floor(k ** alpha))
    c = np.concatenate([np.zeros((1, ell + 1), int), np.cumsum(v, axis=0)])
    i = np.arange(1, k + 1)
    lo = np.maximum(i - w, 1)
    return (c[i] - c[lo - 1]).ravel()


def edge_spread_test(graphs: Sequence[JamGraph], alpha: float, m_list, gamma: float = 1.0,
                     base_k: int | None = None):
    """Survival of normalised non-isolated window counts ``count / k^{alpha - 3 gamma / 4}``.

    ``base_k`` is the ``k`` in the normalisation; it defaults to the graph's
    line count.  Passes when the survival is nonincreasing in ``m`` and lower
    at the largest ``m`` than at the smallest (or zero throughout).
    """
    if not graphs:
        raise ConfigError("edge_spread_test needs at least one graph")
    k = base_k or graphs[0].k
    norm = k ** (alpha - 0.75 * gamma)
    counts = np.concatenate([edge_spread_counts(g, alpha) for g in graphs]) / norm
    m_list = [float(m) for m in m_list]
    surv = np.array([np.mean(counts > m) for m in m_list])
    pos = surv > 0
    rate = float(-np.polyfit(np.array(m_list)[pos], np.log(surv[pos]), 1)[0]) if pos.sum() >= 2 else None
    return make_report(
        "edge-spread", "non-isolated vertices are spread out along the lines",
        {"alpha": alpha, "gamma": gamma, "k": k, "m_list": m_list,
         "V_j": "union of the slabs adjacent to boundary j"},
        {"survival": surv, "fitted_rate": rate, "normaliser": norm},
        {"monotone": is_nonincreasing(surv), "decays": bool(surv[-1] < surv[0] or surv[0] == 0)},
        len(graphs))
