"""Command line: ``airyline simulate | verify | table``.

Exit codes: 0 pass, 1 fail, 2 configuration error, 3 numerical error.
Errors are also written to stderr as one JSON object.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path as FsPath

import numpy as np

from . import io as aio
from .airy import expected_count, kernel_diagonal, tracy_widom_cdf
from .errors import AirylineError, ConfigError
from .experiments import REGISTRY, run_verify
from .grid import GridSpec
from .parallel import run_replicas
from .rng import RngStream
from .stats import Timer

SIMULATE_KINDS = ("dyson", "melon", "airy-approx", "bridge-rep")
TABLE_KINDS = ("tw-cdf", "kernel", "expected-count")


def _common(p: argparse.ArgumentParser):
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--replicas", type=int, default=None)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out", default=None, help="output directory (stdout when omitted)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="airyline", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="sample ensembles to CSV")
    sim.add_argument("kind", choices=SIMULATE_KINDS)
    _common(sim)
    sim.add_argument("--n", type=int, default=None)
    sim.add_argument("--k", type=int, default=None)
    sim.add_argument("--t", type=float, default=None, help="horizon (rescaled window length for airy-approx/bridge-rep)")
    sim.add_argument("--t-start", type=float, default=0.0)
    sim.add_argument("--steps", type=int, default=None)
    sim.add_argument("--variance", type=float, default=1.0)
    sim.add_argument("--gamma", type=float, default=1.0)
    sim.add_argument("--delta", type=float, default=None)
    sim.add_argument("--ell", type=int, default=None)
    sim.add_argument("--substeps", type=int, default=4)

    ver = sub.add_parser("verify", help="run a named verification test")
    ver.add_argument("test_id", choices=sorted(REGISTRY))
    _common(ver)
    for key in ("n", "k", "ell", "t", "delta", "gamma", "steps"):
        ver.add_argument(f"--{key}", default=None)
    ver.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                     help="any other test parameter")
    ver.add_argument("--record-time", action="store_true",
                     help="include wall-clock time in the report (breaks byte-identity)")

    tab = sub.add_parser("table", help="emit a plot-ready CSV table")
    tab.add_argument("kind", choices=TABLE_KINDS)
    tab.add_argument("--start", type=float, default=None)
    tab.add_argument("--stop", type=float, default=None)
    tab.add_argument("--step", type=float, default=None)
    _common(tab)
    return ap


def _emit(out: str | None, name: str, text: str):
    if out is None:
        sys.stdout.write(text)
    else:
        aio.write_text(FsPath(out) / name, text)


# ---------------------------------------------------------------- simulate

def _sim_config(args) -> dict:
    kind = args.kind
    cfg = {"kind": kind, "replicas": args.replicas or 1, "seed": args.seed}
    if kind == "dyson":
        cfg.update(n=args.n or 10, t_start=args.t_start, t=args.t or 1.0, steps=args.steps or 100)
    elif kind == "melon":
        cfg.update(k=args.k or 3, t=args.t or 1.0, steps=args.steps or 100, variance=args.variance)
    elif kind == "airy-approx":
        cfg.update(n=args.n or 200, k=args.k or 4, t=args.t or 1.0, steps=args.steps or 64)
    else:
        k = args.k or 4
        cfg.update(n=args.n or max(200, 25 * k), k=k, t=args.t or 0.5, gamma=args.gamma,
                   delta=args.delta, ell=args.ell, substeps=args.substeps)
    for key in ("n", "k", "steps", "replicas", "substeps"):
        if key in cfg and cfg[key] is not None and cfg[key] < 1:
            raise ConfigError(f"{key} must be positive")
    if not cfg["t"] > 0:
        raise ConfigError("t must be positive")
    return cfg


def _sim_one(cfg, stream):
    from .bridge_rep import (BridgeRepConfig, boundary_from_finite_n, direct_ensemble,
                             sample_bridge_representation)
    from .dyson import sample_dyson_paths, sample_melon
    kind = cfg["kind"]
    if kind == "dyson":
        grid = GridSpec(cfg["t_start"], cfg["t_start"] + cfg["t"], cfg["steps"])
        return sample_dyson_paths(cfg["n"], grid, stream)
    if kind == "melon":
        return sample_melon(cfg["k"], GridSpec(0.0, cfg["t"], cfg["steps"]), cfg["variance"], stream)
    if kind == "airy-approx":
        if cfg["k"] > cfg["n"]:
            raise ConfigError("k cannot exceed n")
        return direct_ensemble(cfg["n"], cfg["k"], GridSpec(0.0, cfg["t"], cfg["steps"]), stream)
    conf = BridgeRepConfig(cfg["k"], cfg["t"], cfg["gamma"], cfg["delta"], cfg["ell"], cfg["substeps"])
    b = boundary_from_finite_n(cfg["n"], conf, stream.child("boundary"))
    return sample_bridge_representation(b, conf, stream.child("bridges"))


def cmd_simulate(args) -> int:
    cfg = _sim_config(args)
    ens = run_replicas(lambda ss: [_sim_one(cfg, s) for s in ss], cfg["replicas"],
                       RngStream(args.seed), args.threads, chunk=1)
    files = []
    for r, e in enumerate(ens):
        name = f"{cfg['kind']}_{r:04d}.csv"
        files.append(name)
        _emit(args.out, name, aio.ensemble_to_csv(e))
    extra = {"variance": ens[0].variance, "ordered": ens[0].ordered}
    if cfg["kind"] == "bridge-rep":
        extra["partial"] = [bool(e.meta.get("partial")) for e in ens]
    _emit(args.out, "manifest.json", aio.manifest("simulate", cfg, args.seed, files, extra))
    return 0


# ---------------------------------------------------------------- verify

def _parse_sets(items) -> dict:
    out = {}
    for it in items:
        if "=" not in it:
            raise ConfigError(f"--set expects KEY=VALUE, got {it!r}")
        k, v = it.split("=", 1)
        out[k.strip().replace("-", "_")] = v
    return out


def cmd_verify(args) -> int:
    over = _parse_sets(args.set)
    for key in ("n", "k", "ell", "t", "delta", "gamma", "steps"):
        v = getattr(args, key)
        if v is not None:
            over[key] = v
    if args.replicas is not None:
        key = next((k for k in ("replicas", "trials", "configs", "pairs")
                    if k in REGISTRY[args.test_id].defaults), None)
        if key is None:
            raise ConfigError(f"test {args.test_id!r} takes no replica count")
        over[key] = args.replicas
    with Timer() as tm:
        rep = run_verify(args.test_id, over, args.seed, args.threads)
    rep.wall_clock = tm.elapsed
    _emit(args.out, f"{args.test_id}.json", rep.to_json(include_time=args.record_time))
    if args.out is not None:
        sys.stdout.write(rep.line() + "\n")
    return 0 if rep.passed else 1


# ---------------------------------------------------------------- table

def _range(args, start, stop, step):
    a = start if args.start is None else args.start
    b = stop if args.stop is None else args.stop
    h = step if args.step is None else args.step
    if not h > 0 or not b >= a:
        raise ConfigError("table range needs stop >= start and step > 0")
    n = int(math.floor((b - a) / h + 1e-9))
    return np.minimum(a + h * np.arange(n + 1), b)


def cmd_table(args) -> int:
    if args.kind == "tw-cdf":
        s = _range(args, -10.0, 6.0, 0.1)
        text = aio.table_to_csv(("s", "F"), zip(s, tracy_widom_cdf(s)))
    elif args.kind == "kernel":
        x = _range(args, -10.0, 2.0, 0.1)
        text = aio.table_to_csv(("x", "K"), zip(x, kernel_diagonal(x)))
    else:
        a = _range(args, 0.0, 20.0, 1.0)
        text = aio.table_to_csv(("a", "expected_count"), zip(a, expected_count(a)))
    _emit(args.out, f"{args.kind}.csv", text)
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.threads < 1:
            raise ConfigError("--threads must be at least 1")
        if not 0 <= args.seed < 2**64:
            raise ConfigError("--seed must be an unsigned 64-bit integer")
        return {"simulate": cmd_simulate, "verify": cmd_verify, "table": cmd_table}[args.command](args)
    except AirylineError as exc:
        sys.stderr.write(json.dumps({"error": type(exc).__name__, "message": str(exc),
                                     "exit_code": exc.exit_code}) + "\n")
        return exc.exit_code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
