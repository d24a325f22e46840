"""Time the compiled kernels against their numpy/Python fallbacks.

Run with ``python3 benchmarks/bench_kernels.py``.  Each kernel is run on
the same input with both backends; results are checked for equality before
timing is reported.
"""
import sys
import timeit

import numpy as np

from airyline import _kernels_py as py
from airyline.kernels import compiled


def cases(rng):
    paths = rng.standard_normal((4096, 4, 65)) + np.arange(4, 0, -1)[None, :, None] * 3.0
    pts = np.sort(rng.random(2000) * 100)
    sizes = rng.integers(0, 40, 2000)
    offsets = np.concatenate([[0], np.cumsum(sizes)]).astype(np.intp)
    vals = np.round(rng.random(offsets[-1]) * 10, 1)
    for c in range(len(sizes)):
        vals[offsets[c]:offsets[c + 1]].sort()
    deltas = np.full(len(sizes), 0.1)
    walk = np.cumsum(rng.standard_normal((256, 129)), axis=1)
    inv = np.r_[0.0, 1.0 / np.sqrt(np.arange(1, 129))]
    drift = np.zeros(256)
    return {
        "ordered_mask": ((paths, None), lambda m: m.ordered_mask),
        "jammed_flags": ((pts, 0.05), lambda m: m.jammed_flags),
        "greedy_pairs": ((pts, 0.05), lambda m: m.greedy_pairs),
        "matching_violations": ((vals, offsets, deltas), lambda m: m.matching_violations),
        "lag_sup": ((walk, drift, inv), lambda m: m.lag_sup),
    }


def main(repeat=5):
    if compiled is None:
        print("compiled extension not built; nothing to compare")
        return 1
    rng = np.random.default_rng(0)
    print(f"{'kernel':22s} {'python [ms]':>12s} {'cython [ms]':>12s} {'speedup':>8s}")
    for name, (args, get) in cases(rng).items():
        a, b = get(py)(*args), get(compiled)(*args)
        if not np.array_equal(np.asarray(a), np.asarray(b)) and not np.allclose(a, b):
            print(f"{name}: backends disagree")
            return 1
        tp = min(timeit.repeat(lambda: get(py)(*args), number=1, repeat=repeat)) * 1e3
        tc = min(timeit.repeat(lambda: get(compiled)(*args), number=1, repeat=repeat)) * 1e3
        print(f"{name:22s} {tp:12.3f} {tc:12.3f} {tp / tc:8.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
