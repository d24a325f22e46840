"""The compiled kernels and the numpy fallback must agree exactly."""
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra import numpy as hnp

from airyline import _kernels_py as py
from airyline import kernels

compiled = kernels.compiled
needs_ext = pytest.mark.skipif(compiled is None, reason="extension not built")

finite = st.floats(-20, 20, allow_nan=False)


@needs_ext
def test_compiled_backend_selected():
    assert kernels.IMPLEMENTATION == "cython"


@needs_ext
@given(hnp.arrays(np.float64, st.tuples(st.integers(1, 6), st.integers(1, 4), st.integers(1, 8)),
                  elements=st.floats(-3, 3).map(lambda x: round(x, 1))),
       st.booleans())
def test_ordered_mask_parity(paths, with_lower):
    lower = paths[:, -1, :].min(axis=0) - 0.5 if with_lower else None
    a = py.ordered_mask(paths, lower)
    b = compiled.ordered_mask(np.ascontiguousarray(paths), lower)
    assert np.array_equal(a, b)


@needs_ext
@given(hnp.arrays(np.float64, st.integers(0, 30), elements=finite), st.floats(0, 3))
def test_jam_kernels_parity(points, delta):
    p = np.sort(points)
    assert np.array_equal(py.jammed_flags(p, delta), compiled.jammed_flags(p, delta))
    assert np.array_equal(py.greedy_pairs(p, delta), compiled.greedy_pairs(p, delta))


@needs_ext
@settings(max_examples=50)
@given(st.lists(hnp.arrays(np.float64, st.integers(0, 12), elements=finite), min_size=1, max_size=8),
       st.floats(0, 2))
def test_matching_violations_parity(configs, delta):
    configs = [np.sort(c) for c in configs]
    offsets = np.concatenate([[0], np.cumsum([c.size for c in configs])]).astype(np.intp)
    vals = np.concatenate(configs) if offsets[-1] else np.zeros(0)
    deltas = np.full(len(configs), delta)
    assert py.matching_violations(vals, offsets, deltas) == compiled.matching_violations(vals, offsets, deltas)


@needs_ext
@given(hnp.arrays(np.float64, st.tuples(st.integers(1, 5), st.integers(2, 20)), elements=finite))
def test_lag_sup_parity(values):
    n = values.shape[1]
    inv = np.r_[0.0, 1.0 / np.sqrt(np.arange(1, n))]
    drift = np.linspace(-1, 1, values.shape[0])
    a = py.lag_sup(values, drift, inv)
    b = compiled.lag_sup(np.ascontiguousarray(values), drift, inv)
    assert np.allclose(a, b, rtol=1e-14, atol=0)


def test_lag_sup_brute_force():
    rng = np.random.default_rng(1)
    v = rng.standard_normal((3, 9))
    inv = rng.random(9)
    drift = np.array([0.0, 0.5, -1.0])
    want = [max(abs(v[r, j] - v[r, i] - drift[r] * (j - i)) * inv[j - i]
                for i in range(9) for j in range(i + 1, 9)) for r in range(3)]
    assert np.allclose(kernels.lag_sup(v, drift, inv), want)
