import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from airyline.errors import ConfigError
from airyline.grid import BridgeSpec, GridSpec, LineEnsemble, Path
from airyline.rng import RngStream, as_generator


def test_same_key_same_numbers():
    a = RngStream(7, 3).generator().standard_normal(100)
    b = RngStream(7, 3).generator().standard_normal(100)
    assert np.array_equal(a, b)


def test_distinct_streams_look_independent():
    a = RngStream(7, 1).generator().standard_normal(20000)
    b = RngStream(7, 2).generator().standard_normal(20000)
    assert not np.array_equal(a, b)
    # correlation of independent samples is O(1/sqrt(n))
    assert abs(np.corrcoef(a, b)[0, 1]) < 4 / np.sqrt(a.size)


def test_child_streams_are_deterministic_and_distinct():
    s = RngStream(1)
    assert s.child(3) == s.child(3)
    assert s.child(3) != s.child(4)
    assert s.child("a", 1) != s.child("a", 2)
    assert s.child(1).child(2) != s.child(2).child(1)


def test_as_generator_rejects_other_types():
    with pytest.raises(TypeError):
        as_generator(42)
    g = np.random.default_rng(0)
    assert as_generator(g) is g


def test_seed_range():
    with pytest.raises(ValueError):
        RngStream(-1)


@pytest.mark.parametrize("args", [(0, 1, 0), (1, 1, 4), (1, 0, 4), (0, float("inf"), 3), (0, 1, 2.5)])
def test_grid_validation(args):
    with pytest.raises(ConfigError):
        GridSpec(*args)


@given(st.floats(-50, 50), st.floats(0.01, 100), st.integers(1, 500))
def test_grid_times_strictly_increasing(t0, length, steps):
    g = GridSpec(t0, t0 + length, steps)
    t = g.times
    assert t.size == steps + 1
    assert np.all(np.diff(t) > 0)
    assert t[0] == t0 and t[-1] == t0 + length
    assert g.spacing > 0


def test_grid_index_and_coarsen():
    g = GridSpec(0.0, 2.0, 8)
    assert g.index_of(0.5) == 2
    with pytest.raises(ConfigError):
        g.index_of(0.3)
    assert g.coarsen(4) == GridSpec(0.0, 2.0, 2)
    with pytest.raises(ConfigError):
        g.coarsen(3)


def test_path_checks_length_and_finiteness():
    g = GridSpec(0, 1, 4)
    with pytest.raises(ConfigError):
        Path(g, np.zeros(4))
    with pytest.raises(ConfigError):
        Path(g, [0, 1, np.nan, 0, 0])
    with pytest.raises(ConfigError):
        BridgeSpec(0, 0, g, variance=0)


def test_line_ensemble_accessors():
    g = GridSpec(0, 1, 2)
    e = LineEnsemble(g, [[3, 3, 3], [2, 1, 2], [0, 0, 0]], ordered=True)
    assert e.n_lines == 3
    assert np.array_equal(e.line(1).values, [3, 3, 3])
    assert e.is_ordered(strict=True)
    assert e.top(2).n_lines == 2
    with pytest.raises(IndexError):
        e.line(4)
    assert LineEnsemble.from_paths(e.lines, ordered=True) == e
