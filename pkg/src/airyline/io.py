"""CSV and JSON serialisation of ensembles, graphs and manifests."""
from __future__ import annotations

import csv
import io
import json
from pathlib import Path as FsPath

import numpy as np

from .errors import ConfigError
from .grid import GridSpec, LineEnsemble

CSV_HEADER = ("line_index", "time", "value")
FORMAT_VERSION = 1


def _fmt(x: float) -> str:
    return "%.17g" % x


def ensemble_to_csv(ens: LineEnsemble) -> str:
    """One row per (line, grid time); line indices start at 1 for the top line."""
    times = [_fmt(t) for t in ens.grid.times]
    buf = io.StringIO()
    buf.write(",".join(CSV_HEADER) + "\n")
    for i, row in enumerate(ens.values, start=1):
        for t, v in zip(times, row):
            buf.write(f"{i},{t},{_fmt(v)}\n")
    return buf.getvalue()


def ensemble_from_csv(text: str, ordered: bool = False, variance: float = 1.0) -> LineEnsemble:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or tuple(rows[0]) != CSV_HEADER:
        raise ConfigError(f"ensemble CSV must start with header {','.join(CSV_HEADER)}")
    data = rows[1:]
    idx = np.array([int(r[0]) for r in data])
    t = np.array([float(r[1]) for r in data])
    v = np.array([float(r[2]) for r in data])
    k = int(idx.max())
    per = len(data) // k
    if per * k != len(data) or per < 2:
        raise ConfigError("ragged ensemble CSV")
    times = t[:per]
    grid = GridSpec(float(times[0]), float(times[-1]), per - 1)
    if not np.allclose(grid.times, times, rtol=0, atol=1e-12 * max(1.0, abs(times).max())):
        raise ConfigError("ensemble CSV times are not a uniform grid")
    vals = np.empty((k, per))
    vals[idx - 1, np.tile(np.arange(per), k)] = v
    return LineEnsemble(grid, vals, ordered, variance)


def write_text(path, text: str):
    p = FsPath(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    with open(p, "w", newline="\n") as fh:
        fh.write(text)


def write_ensemble(path, ens: LineEnsemble):
    write_text(path, ensemble_to_csv(ens))


def read_ensemble(path, ordered: bool = False, variance: float = 1.0) -> LineEnsemble:
    with open(path) as fh:
        return ensemble_from_csv(fh.read(), ordered, variance)


def dumps(obj) -> str:
    from .stats import _plain
    return json.dumps(_plain(obj), indent=2, sort_keys=True) + "\n"


def manifest(command: str, config: dict, seed: int, files: list[str], extra: dict | None = None) -> str:
    body = {"format_version": FORMAT_VERSION, "command": command, "config": config,
            "seed": seed, "files": files}
    if extra:
        body.update(extra)
    return dumps(body)


def table_to_csv(columns: tuple[str, ...], rows) -> str:
    buf = io.StringIO()
    buf.write(",".join(columns) + "\n")
    for r in rows:
        buf.write(",".join(_fmt(x) for x in r) + "\n")
    return buf.getvalue()
