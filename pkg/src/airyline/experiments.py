"""Named verification experiments: defaults, config resolution and dispatch.

Every experiment is a function ``(cfg, seed, threads) -> StatReport`` where
``cfg`` is the resolved parameter dict.  The resolved config is echoed into
the report so a report can be re-run from its own contents.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .airy import KernelEvaluator, kernel_eval, kernel_quadrature, tracy_widom_interp
from .bridge_rep import (BridgeRepConfig, boundary_from_finite_n, direct_ensemble,
                         ensemble_equivalence_test, modulus_scan, refinement_stability,
                         sample_bridge_representation, slab_ordering_violations)
from .bridges import (bridge_batch, dominance_test, increment_tail_scan, propose_and_test,
                      two_bridge_acceptance)
from .dyson import (airy_window_grid, dyson_increment_test, edge_tail_test, envelope_test,
                    melon_values, rescale_values, rescaled_top_eigenvalues, walk_eigenvalues)
from .errors import ConfigError
from .grid import BridgeSpec, GridSpec, LineEnsemble
from .jam import (component_size_test, edge_spread_test, jam_concentration_test,
                  jam_graph_from_values, matching_fuzz, moment_bound_check)
from .parallel import run_replicas, run_replicas_array
from .points import count_statistics, count_variance_growth, point_location_test, sample_airy_points
from .rng import RngStream, as_generator
from .stats import StatReport, bonferroni, ks_distance, ks_two_sample, make_report, require_replicas


@dataclass
class Experiment:
    name: str
    run: Callable[[dict, int, int], StatReport]
    defaults: dict = field(default_factory=dict)
    doc: str = ""


REGISTRY: dict[str, Experiment] = {}


def experiment(name: str, **defaults):
    def wrap(fn):
        REGISTRY[name] = Experiment(name, fn, defaults, (fn.__doc__ or "").strip().splitlines()[0])
        return fn
    return wrap


def _coerce(key, value, default):
    try:
        if isinstance(default, bool):
            if isinstance(value, str):
                return value.lower() in ("1", "true", "yes")
            return bool(value)
        if isinstance(default, int):
            v = float(value)
            if v != int(v):
                raise ValueError
            return int(v)
        if isinstance(default, float):
            return float(value)
        if isinstance(default, tuple):
            items = value.split(",") if isinstance(value, str) else list(value)
            kind = type(default[0]) if default else float
            return tuple(_coerce(key, x, kind(0)) for x in items)
        return value
    except (TypeError, ValueError):
        raise ConfigError(f"parameter {key}={value!r} has the wrong type") from None


def resolve(name: str, overrides: dict | None = None) -> dict:
    if name not in REGISTRY:
        raise ConfigError(f"unknown test id {name!r}; choose from {', '.join(sorted(REGISTRY))}")
    cfg = dict(REGISTRY[name].defaults)
    for k, v in (overrides or {}).items():
        if v is None:
            continue
        if k not in cfg:
            raise ConfigError(f"test {name!r} has no parameter {k!r}")
        cfg[k] = _coerce(k, v, cfg[k])
    return cfg


def run_verify(name: str, overrides: dict | None = None, seed: int = 0, threads: int = 1) -> StatReport:
    cfg = resolve(name, overrides)
    rep = REGISTRY[name].run(cfg, seed, threads)
    rep.test = name
    rep.parameters = dict(cfg, **{k: v for k, v in rep.parameters.items() if k not in cfg})
    rep.seed = seed
    return rep


def _positive(cfg, *keys):
    for k in keys:
        if not cfg[k] > 0:
            raise ConfigError(f"{k} must be positive")


# ---------------------------------------------------------------- experiments

@experiment("tw-edge", n=200, n_list=(50, 100, 200), replicas=10_000, max_ks=0.05)
def _tw_edge(cfg, seed, threads):
    """Rescaled top GUE eigenvalue against the Tracy-Widom law."""
    require_replicas(cfg["replicas"], 100, "tw-edge")
    base = RngStream(seed)
    ns = sorted(set(cfg["n_list"]) | {cfg["n"]})
    ks = {}
    for n in ns:
        x = run_replicas_array(lambda ss, n=n: rescaled_top_eigenvalues(n, ss, 1)[:, 0],
                               cfg["replicas"], base.child("n", n), threads)
        ks[n] = ks_distance(x, tracy_widom_interp)
    chain = [ks[n] for n in sorted(cfg["n_list"])]
    return make_report(
        "tw-edge", "edge rescaled top eigenvalue converges to Tracy-Widom", {},
        {"ks": {str(n): v for n, v in ks.items()}},
        {"ks_below_max": ks[cfg["n"]] < cfg["max_ks"],
         "ks_decreasing": all(b < a for a, b in zip(chain, chain[1:]))},
        cfg["replicas"], thresholds={"ks": cfg["max_ks"]})


@experiment("kernel", pairs=1000, lo=-10.0, hi=5.0, tol=1e-8, s_step=0.5, order=64)
def _kernel(cfg, seed, threads):
    """Closed-form kernel against quadrature; determinant under order doubling."""
    require_replicas(cfg["pairs"], 100, "kernel")
    gen = RngStream(seed).generator()
    xy = gen.uniform(cfg["lo"], cfg["hi"], (cfg["pairs"], 2))
    closed = kernel_eval(xy[:, 0], xy[:, 1])
    quad = kernel_quadrature(xy[:, 0], xy[:, 1])
    kerr = float(np.max(np.abs(closed - quad)))
    s = np.arange(-10.0, 6.0 + 1e-9, cfg["s_step"])
    e1, e2 = KernelEvaluator(cfg["order"]), KernelEvaluator(2 * cfg["order"])
    derr = float(max(abs(e1.fredholm_det(v) - e2.fredholm_det(v)) for v in s))
    return make_report(
        "kernel", "Airy kernel numerics are self-consistent", {},
        {"max_kernel_error": kerr, "max_det_doubling_change": derr},
        {"kernel_agreement": kerr <= cfg["tol"], "det_stable": derr <= cfg["tol"]},
        cfg["pairs"], thresholds={"tol": cfg["tol"]})


TWO_BRIDGE_CONFIGS = ((0.5, 0.5, 1.0, 1.0), (1.0, 0.3, 1.0, 1.0), (0.2, 0.2, 1.0, 1.0),
                      (1.0, 1.0, 2.0, 1.0), (0.3, 2.0, 1.0, 2.0))


@experiment("two-bridge", trials=100_000, steps=64, avoidance="bridge", max_z=3.0)
def _two_bridge(cfg, seed, threads):
    """Two-bridge rejection acceptance against the reflection formula."""
    require_replicas(cfg["trials"], 100, "two-bridge")
    base = RngStream(seed)
    stats, checks = {}, {}
    for c, (dx, dy, v, T) in enumerate(TWO_BRIDGE_CONFIGS):
        g = GridSpec(0.0, T, cfg["steps"])
        specs = [BridgeSpec(dx, dy, g, v), BridgeSpec(0.0, 0.0, g, v)]
        acc = propose_and_test(specs, trials=cfg["trials"], rng=base.child(c),
                               avoidance=cfg["avoidance"])
        p = two_bridge_acceptance(dx, dy, v, T)
        rate = acc / cfg["trials"]
        z = (rate - p) / math.sqrt(p * (1 - p) / cfg["trials"])
        label = f"dx={dx:g},dy={dy:g},v={v:g},T={T:g}"
        stats[label] = {"oracle": p, "rate": rate, "z": z}
        checks[label] = abs(z) <= cfg["max_z"]
    return make_report("two-bridge", "reflection-principle non-crossing probability", {},
                       stats, checks, cfg["trials"], thresholds={"abs_z": cfg["max_z"]})


@experiment("jam-scaling", n=200, a=8.0, ell=4.0, deltas=(0.02, 0.04, 0.08), replicas=1000, top=20)
def _jam_scaling(cfg, seed, threads):
    """Mean jammed count versus delta on rescaled GUE windows."""
    require_replicas(cfg["replicas"], 100, "jam-scaling")
    samples = sample_airy_points(cfg["n"], cfg["top"], cfg["replicas"], RngStream(seed), threads)
    low = max(s.points[-1] for s in samples)
    rep = jam_concentration_test(samples, cfg["a"], cfg["ell"], cfg["deltas"])
    rep.statistics["highest_last_point"] = float(low)
    rep.checks["window_covered"] = bool(low < -cfg["a"])
    rep.passed = all(rep.checks.values())
    return rep


@experiment("greedy", configs=1_000_000, max_points=40)
def _greedy(cfg, seed, threads):
    """Greedy matching has at least floor(L/3) pairs on fuzzed inputs."""
    require_replicas(cfg["configs"], 100, "greedy")
    done, bad = matching_fuzz(cfg["configs"], RngStream(seed), cfg["max_points"])
    return make_report("greedy", "greedy matching size bound", {},
                       {"checked": done, "violations": bad}, {"no_violations": bad == 0}, done)


def _jam_graph_sample(n, k, t, ell, delta, streams):
    grid = airy_window_grid(n, 0.0, t, ell)
    out = []
    for s in streams:
        w = walk_eigenvalues(n, grid.times, as_generator(s), keep=k)
        out.append(jam_graph_from_values(rescale_values(w, grid.times, n), delta))
    return out


@experiment("components", k=8, gamma=1.0, n=200, t=1.0, replicas=500, max_fraction=0.1)
def _components(cfg, seed, threads):
    """Largest jam-graph component on rescaled Dyson lines."""
    require_replicas(cfg["replicas"], 100, "components")
    k, g = cfg["k"], cfg["gamma"]
    _positive(cfg, "gamma", "t")
    delta = k ** (-1.0 / 3.0 - g / 4.0)
    ell = int(math.ceil(cfg["t"] * k ** (2.0 / 3.0 + g) - 1e-9))
    graphs = run_replicas(lambda ss: _jam_graph_sample(cfg["n"], k, cfg["t"], ell, delta, ss),
                          cfg["replicas"], RngStream(seed), threads)
    M = [gr.max_component for gr in graphs]
    return component_size_test(M, k, g, cfg["max_fraction"], {"delta": delta, "ell": ell})


@experiment("bridge-rep", k=4, gamma=1.0, n=200, t=0.5, substeps=4, replicas=2000, level=0.01,
            avoidance="grid", min_negative=0.01)
def _bridge_rep(cfg, seed, threads):
    """Bridge representation against direct rescaled Dyson lines."""
    R = cfg["replicas"]
    require_replicas(R, 100, "bridge-rep")
    conf = BridgeRepConfig(cfg["k"], cfg["t"], cfg["gamma"], substeps=cfg["substeps"],
                           avoidance=cfg["avoidance"])
    neg = BridgeRepConfig(cfg["k"], cfg["t"], cfg["gamma"], delta=0.0, substeps=cfg["substeps"])
    base = RngStream(seed)
    n, k, fine = cfg["n"], cfg["k"], conf.fine_grid

    def direct(ss):
        return [direct_ensemble(n, k, fine, s) for s in ss]

    def bridged(ss):
        out = []
        for s in ss:
            b = boundary_from_finite_n(n, conf, s.child("boundary"))
            e = sample_bridge_representation(b, conf, s.child("bridges"))
            e0 = sample_bridge_representation(b, neg, s.child("control"))
            out.append((e, slab_ordering_violations(e0, k, conf.substeps),
                        slab_ordering_violations(e, k, conf.substeps)))
        return out

    d = run_replicas(direct, R, base.child("direct"), threads)
    res = run_replicas(bridged, R, base.child("bridged"), threads)
    b = [r[0] for r in res]
    main = ensemble_equivalence_test(d, b, k, level=cfg["level"], slab_steps=conf.substeps)
    split = ensemble_equivalence_test(d[: R // 2], d[R // 2:], k, level=cfg["level"],
                                      slab_steps=conf.substeps, name="split-sample")
    neg_frac = float(np.mean([r[1] > 0 for r in res]))
    own_frac = float(np.mean([r[2] > 0 for r in res]))
    return make_report(
        "bridge-rep", "bridge representation matches the ensemble law on the top lines",
        {"resolved": conf.as_dict()},
        {"equivalence": main.statistics, "split_sample": split.statistics,
         "negative_control_violation_fraction": neg_frac,
         "bridged_topk_violation_fraction": own_frac},
        {"equivalence_passes": main.passed, "split_sample_passes": split.passed,
         "negative_control_detects": neg_frac > cfg["min_negative"]},
        R, thresholds={"level": cfg["level"], "negative_control_min": cfg["min_negative"]})


@experiment("modulus", n=400, k_list=(2, 4, 8), t=1.0, steps=32, replicas=500, max_ratio=1.5,
            stride=2)
def _modulus(cfg, seed, threads):
    """Uniform modulus statistic over k and per-line refinement stability."""
    require_replicas(cfg["replicas"], 100, "modulus")
    kmax = max(cfg["k_list"])
    grid = GridSpec(0.0, cfg["t"], cfg["steps"])
    ens = run_replicas(lambda ss: [direct_ensemble(cfg["n"], kmax, grid, s) for s in ss],
                       cfg["replicas"], RngStream(seed), threads)
    scan = modulus_scan(ens, cfg["k_list"], max_ratio=cfg["max_ratio"])
    ref = refinement_stability(ens, cfg["stride"], kmax)
    return make_report(
        "modulus", "modulus of continuity uniform over the top lines", {},
        {"scan": scan.statistics, "refinement": ref.statistics},
        {"some_d_works": scan.passed, "refinement_stable": ref.passed}, cfg["replicas"])


@experiment("dyson-increment", n=100, k=1, t=1.0, s_list=(), replicas=100_000)
def _dyson_increment(cfg, seed, threads):
    """Tail of normalised short Dyson increments in m^{3/2}."""
    s_list = cfg["s_list"] or (cfg["t"] * cfg["n"] ** (-1.0 / 3.0),)
    rep = dyson_increment_test(cfg["n"], cfg["k"], cfg["t"], s_list, cfg["replicas"],
                               RngStream(seed), threads)
    return rep


def _melon_marginals(k, T, times, streams):
    steps = 4
    grid = GridSpec(0.0, T, steps)
    idx = [grid.index_of(s) for s in times]
    return np.stack([melon_values(k, grid, 1.0, as_generator(s))[:, idx] for s in streams])


def _dyson_bridge_marginals(k, T, times, streams):
    out = np.empty((len(streams), k, len(times)))
    for r, s in enumerate(streams):
        gen = as_generator(s)
        for c, tm in enumerate(times):
            u = tm / (T - tm)
            out[r, :, c] = walk_eigenvalues(k, [0.0, u], gen)[:, 1] * (T - tm) / math.sqrt(T)
    return out


@experiment("melon-dyson", k=3, T=1.0, replicas=10_000, level=0.01)
def _melon_dyson(cfg, seed, threads):
    """Melon marginals against time-changed Dyson marginals."""
    require_replicas(cfg["replicas"], 100, "melon-dyson")
    k, T = cfg["k"], cfg["T"]
    times = (0.25 * T, 0.5 * T, 0.75 * T)
    base = RngStream(seed)
    a = run_replicas_array(lambda ss: _melon_marginals(k, T, times, ss), cfg["replicas"],
                           base.child("melon"), threads)
    b = run_replicas_array(lambda ss: _dyson_bridge_marginals(k, T, times, ss), cfg["replicas"],
                           base.child("dyson"), threads)
    corrected = bonferroni(cfg["level"], k * len(times))
    pv, checks = {}, {}
    for i in range(k):
        for c, tm in enumerate(times):
            _, p = ks_two_sample(a[:, i, c], b[:, i, c])
            label = f"line{i + 1}@s={tm:g}"
            pv[label] = p
            checks[label] = p >= corrected
    return make_report("melon-dyson", "melon equals time-changed Dyson motion in law", {},
                       {"p_values": pv, "corrected_level": corrected}, checks, cfg["replicas"],
                       thresholds={"p_value": corrected})


@experiment("edge-tail", n=100, k=1, replicas=10_000)
def _edge_tail(cfg, seed, threads):
    """Upper tail of the k-th rescaled Dyson line at time 1."""
    return edge_tail_test(cfg["n"], cfg["k"], cfg["replicas"], RngStream(seed))


@experiment("envelope", n=100, replicas=1000, m_list=(0.0, 1.0, 2.0, 3.0), b=1.0, points=41)
def _envelope(cfg, seed, threads):
    """Crossing fraction of the iterated-log envelope."""
    return envelope_test(cfg["n"], cfg["replicas"], cfg["m_list"], RngStream(seed), cfg["b"],
                         cfg["points"], threads)


@experiment("count-stats", n=200, top=40, replicas=10_000, a=5.0, a_list=(4.0, 8.0, 16.0))
def _count_stats(cfg, seed, threads):
    """Point counts N_a: mean near 2a^{3/2}/(3 pi), slow variance growth."""
    require_replicas(cfg["replicas"], 100, "count-stats")
    samples = sample_airy_points(cfg["n"], cfg["top"], cfg["replicas"], RngStream(seed), threads)
    st = count_statistics(samples, cfg["a"])
    growth = count_variance_growth(samples, cfg["a_list"])
    low = max(s.points[-1] for s in samples)
    return make_report(
        "count-stats", "point counts follow the Airy density", {},
        {"count": st.summary, "variance_growth": growth.statistics, "highest_last_point": low},
        {"mean_ok": st.summary["mean_ok"], "growth_ok": growth.passed,
         "samples_cover_a": bool(low < -max(cfg["a_list"]))}, cfg["replicas"])


@experiment("point-locations", n=200, top=10, replicas=2000, median_bound=2.0)
def _point_locations(cfg, seed, threads):
    """Airy points near -kappa i^{2/3}."""
    samples = sample_airy_points(cfg["n"], cfg["top"], cfg["replicas"], RngStream(seed), threads)
    return point_location_test(samples, cfg["top"], cfg["median_bound"])


@experiment("edge-spread", k=16, gamma=1.0, alpha=1.0, n=400, t=0.25, replicas=100,
            m_list=(1.0, 2.0, 4.0))
def _edge_spread(cfg, seed, threads):
    """Window counts of non-isolated jam-graph vertices."""
    require_replicas(cfg["replicas"], 10, "edge-spread")
    k, g = cfg["k"], cfg["gamma"]
    delta = k ** (-1.0 / 3.0 - g / 4.0)
    ell = int(math.ceil(cfg["t"] * k ** (2.0 / 3.0 + g) - 1e-9))
    graphs = run_replicas(lambda ss: _jam_graph_sample(cfg["n"], k, cfg["t"], ell, delta, ss),
                          cfg["replicas"], RngStream(seed), threads)
    return edge_spread_test(graphs, cfg["alpha"], cfg["m_list"], g)


@experiment("moment-bound", n=200, a=8.0, ell=4.0, delta=0.3, n_moment=1, replicas=1000, top=20)
def _moment_bound(cfg, seed, threads):
    """Factorial moment of floor(L/3) against the explicit kernel bound."""
    samples = sample_airy_points(cfg["n"], cfg["top"], cfg["replicas"], RngStream(seed), threads)
    return moment_bound_check(samples, cfg["a"], cfg["ell"], cfg["delta"], cfg["n_moment"])


def _bridge_midpoints(specs, streams):
    from .bridges import sample_nonintersecting_bridges
    mid = specs[0].grid.steps // 2
    return np.array([[p.values[mid] for p in sample_nonintersecting_bridges(specs, rng=s)]
                     for s in streams])


@experiment("dominance", replicas=10_000, steps=16, raise_top=0.5, raise_bottom=0.3, level=0.01)
def _dominance(cfg, seed, threads):
    """Raising endpoints of two nonintersecting bridges raises both lines."""
    require_replicas(cfg["replicas"], 100, "dominance")
    g = GridSpec(0.0, 1.0, cfg["steps"])
    low = [BridgeSpec(1.0, 1.0, g), BridgeSpec(0.0, 0.0, g)]
    up = [BridgeSpec(1.0 + cfg["raise_top"], 1.0 + cfg["raise_top"], g),
          BridgeSpec(cfg["raise_bottom"], cfg["raise_bottom"], g)]
    base = RngStream(seed)
    a = run_replicas_array(lambda ss: _bridge_midpoints(low, ss), cfg["replicas"], base.child("a"), threads)
    b = run_replicas_array(lambda ss: _bridge_midpoints(up, ss), cfg["replicas"], base.child("b"), threads)
    lvl = bonferroni(cfg["level"], 2)
    reps = [dominance_test(a[:, i], b[:, i], lvl) for i in range(2)]
    return make_report(
        "dominance", "monotone coupling: raised boundary data raise each line", {},
        {f"line{i + 1}": r.statistics for i, r in enumerate(reps)},
        {f"line{i + 1}": r.passed for i, r in enumerate(reps)}, cfg["replicas"],
        thresholds={"p_value": lvl})


@experiment("increment-tail", replicas=1000, steps=64, k=1)
def _increment_tail(cfg, seed, threads):
    """Normalised increment statistic of free bridges."""
    g = GridSpec(0.0, 1.0, cfg["steps"])
    gen = RngStream(seed).generator()
    from .grid import Path
    vals = bridge_batch(gen, [0.0], [0.0], g, 1.0, cfg["replicas"])[:, 0]
    return increment_tail_scan([Path(g, v) for v in vals], cfg["k"])
