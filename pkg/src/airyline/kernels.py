"""Kernel dispatch: the compiled extension when it was built, numpy otherwise.

``IMPLEMENTATION`` names the active backend.  Both backends stay importable
(``py`` always, ``compiled`` when available) so tests and the benchmark can
compare them directly.
"""
import numpy as np

from . import _kernels_py as py

try:
    from . import _kernels as compiled
except ImportError:  # extension not built
    compiled = None

_impl = compiled if compiled is not None else py
IMPLEMENTATION = "cython" if compiled is not None else "python"


def ordered_mask(paths, lower=None):
    """Boolean per batch row: lines strictly decreasing (and above ``lower``) at every column."""
    return _impl.ordered_mask(np.ascontiguousarray(paths, dtype=np.float64), lower)


def jammed_flags(points, delta):
    return _impl.jammed_flags(np.ascontiguousarray(points, dtype=np.float64), float(delta))


def greedy_pairs(z, delta):
    return _impl.greedy_pairs(np.ascontiguousarray(z, dtype=np.float64), float(delta))


def matching_violations(values, offsets, deltas):
    return int(_impl.matching_violations(
        np.ascontiguousarray(values, dtype=np.float64),
        np.ascontiguousarray(offsets, dtype=np.intp),
        np.ascontiguousarray(deltas, dtype=np.float64)))


def lag_sup(values, drift, inv_norm):
    """Row-wise ``max_{i<j} |v[j] - v[i] - drift*(j-i)| * inv_norm[j-i]``."""
    values = np.ascontiguousarray(np.atleast_2d(values), dtype=np.float64)
    drift = np.ascontiguousarray(np.broadcast_to(drift, values.shape[:1]), dtype=np.float64)
    return _impl.lag_sup(values, drift, np.ascontiguousarray(inv_norm, dtype=np.float64))
