"""Pure-Python/numpy versions of the compiled kernels."""
import numpy as np


def ordered_mask(paths, lower=None):
    paths = np.asarray(paths, dtype=float)
    ok = np.all(paths[:, :-1, :] > paths[:, 1:, :], axis=(1, 2))
    if lower is not None:
        ok &= np.all(paths[:, -1, :] > np.asarray(lower, dtype=float), axis=1)
    return ok


def jammed_flags(points, delta):
    points = np.asarray(points, dtype=float)
    close = np.abs(np.diff(points)) <= delta
    flags = np.zeros(points.size, dtype=bool)
    flags[:-1] |= close
    flags[1:] |= close
    return flags


def greedy_pairs(z, delta):
    pairs = []
    i, n = 0, len(z)
    while i < n - 1:
        if abs(z[i + 1] - z[i]) <= delta:
            pairs.append((i, i + 1))
            i += 2
        else:
            i += 1
    return np.array(pairs, dtype=np.intp).reshape(-1, 2)


def matching_violations(values, offsets, deltas):
    bad = 0
    for c in range(len(offsets) - 1):
        pts = values[offsets[c]:offsets[c + 1]]
        z = pts[jammed_flags(pts, deltas[c])] if len(pts) else pts
        if len(greedy_pairs(z, deltas[c])) < len(z) // 3:
            bad += 1
    return bad


def lag_sup(values, drift, inv_norm):
    values = np.asarray(values, dtype=float)
    M, N = values.shape
    best = np.zeros(M)
    for lag in range(1, N):
        inc = np.abs(values[:, lag:] - values[:, :-lag] - drift[:, None] * lag)
        np.maximum(best, inc.max(axis=1) * inv_norm[lag], out=best)
    return best
