import math

import numpy as np
import pytest
from scipy import stats as sps

from airyline.bridge_rep import (BoundarySamples, BridgeRepConfig, boundary_from_finite_n,
                                 default_functionals, direct_ensemble, ensemble_equivalence_test,
                                 modulus_per_line, modulus_scan, refinement_stability,
                                 sample_bridge_representation, slab_ordering_violations,
                                 uniform_modulus)
from airyline.bridges import bridge_batch
from airyline.errors import ConfigError
from airyline.grid import GridSpec, LineEnsemble
from airyline.parallel import replica_streams
from airyline.rng import RngStream


def _boundary(values, t):
    v = np.asarray(values, dtype=float)
    return BoundarySamples(v, GridSpec(0.0, t, v.shape[1] - 1))


def test_config_defaults():
    c = BridgeRepConfig(4, 0.5)
    assert c.delta_value == pytest.approx(4 ** (-1 / 3 - 1 / 4))
    assert c.ell_value == math.ceil(0.5 * 4 ** (5 / 3))
    assert c.ell_value >= 0.5 * 4 ** (5 / 3)
    assert c.fine_grid.steps == c.ell_value * 4
    for bad in (dict(k=0, t=1), dict(k=2, t=0), dict(k=2, t=1, delta=-1), dict(k=2, t=1, avoidance="x")):
        with pytest.raises(ConfigError):
            BridgeRepConfig(**bad)


def test_boundary_validation():
    with pytest.raises(ConfigError):
        _boundary([[0.0, 1.0], [0.5, 0.0]], 1.0)
    with pytest.raises(ConfigError):
        BoundarySamples(np.zeros((1, 3)), GridSpec(0, 1, 4))


def test_finite_n_boundary_ordered_and_n_check(stream):
    c = BridgeRepConfig(3, 0.5)
    b = boundary_from_finite_n(40, c, stream)
    assert b.values.shape == (6, c.ell_value + 1)
    assert np.all(np.diff(b.values, axis=0) < 0)
    with pytest.raises(ConfigError):
        boundary_from_finite_n(11, c, stream)


def test_boundary_reproduced_exactly(stream):
    c = BridgeRepConfig(2, 0.5, substeps=3)
    b = boundary_from_finite_n(40, c, stream.child("b"))
    e = sample_bridge_representation(b, c, stream.child("r"))
    assert np.array_equal(e.values[:, ::3], b.values)
    assert e.n_lines == 4 and e.grid == c.fine_grid


def test_edgeless_is_independent_bridges(stream):
    c = BridgeRepConfig(1, 1.0, delta=0.0, ell=2, substeps=4)
    vals = np.array([[1.0, 0.8, 1.2], [0.0, -0.1, 0.3]])
    b = _boundary(vals, 1.0)
    mids = np.array([sample_bridge_representation(b, c, s).values[1, 2]
                     for s in replica_streams(stream.child("rep"), 4000)])
    raw = bridge_batch(stream.child("raw").generator(), [0.0], [-0.1], GridSpec(0, 0.5, 4), 2.0, 4000)
    assert sps.ks_2samp(mids, raw[:, 0, 2]).pvalue > 0.01


def test_linked_pair_never_crosses(stream):
    c = BridgeRepConfig(1, 1.0, delta=0.2, ell=2, substeps=4)
    b = _boundary([[0.1, 0.5, 0.0], [0.0, -1.0, -0.05]], 1.0)
    for s in replica_streams(stream, 10_000):
        v = sample_bridge_representation(b, c, s).values
        assert np.all(v[0, :5] > v[1, :5])  # first slab is linked
        assert v[0, 4] > v[1, 4]


def test_rejection_failure_marks_partial():
    c = BridgeRepConfig(1, 1.0, delta=1.0, ell=1, substeps=256, max_attempts=1)
    b = _boundary([[1e-9, 2e-9], [0.0, 0.0]], 1.0)
    hits = 0
    for seed in range(20):
        e = sample_bridge_representation(b, c, RngStream(seed))
        if e.meta["partial"]:
            hits += 1
            assert e.meta["failures"] == [(1, 1, 2)]
            assert np.isnan(e.values[:, 1:-1]).all()
            assert np.array_equal(e.values[:, [0, -1]], b.values)
    assert hits > 0


def test_slabs_independent_given_boundary(stream):
    c = BridgeRepConfig(1, 1.0, delta=0.0, ell=2, substeps=2)
    b = _boundary([[1.0, 1.0, 1.0], [0.0, 0.0, 0.0]], 1.0)
    v = np.stack([sample_bridge_representation(b, c, s).values[0] for s in replica_streams(stream, 5000)])
    r = np.corrcoef(v[:, 1], v[:, 3])[0, 1]
    assert abs(r) < 4 / math.sqrt(5000)


def test_component_streams_are_exchangeable(stream):
    # a component's sample law does not depend on which stream the other component used
    c = BridgeRepConfig(2, 1.0, delta=0.3, ell=1, substeps=4)
    b = _boundary([[2.0, 2.0], [1.9, 1.9], [0.2, 0.2], [0.0, 0.0]], 1.0)
    top = np.array([sample_bridge_representation(b, c, s).values[0, 2]
                    for s in replica_streams(stream.child("a"), 3000)])
    alone = _boundary([[2.0, 2.0], [1.9, 1.9]], 1.0)
    c1 = BridgeRepConfig(1, 1.0, delta=0.3, ell=1, substeps=4)
    ref = np.array([sample_bridge_representation(alone, c1, s).values[0, 2]
                    for s in replica_streams(stream.child("b"), 3000)])
    assert sps.ks_2samp(top, ref).pvalue > 0.01


def test_slab_ordering_violations_counts():
    g = GridSpec(0, 1, 4)
    v = np.array([[1.0, 1.0, 1.0, 1.0, 1.0], [0.0, 2.0, 0.0, 0.0, 0.0]])
    assert slab_ordering_violations(LineEnsemble(g, v), 2, 2) == 1
    v[1, 1], v[1, 2] = 0.0, 2.0  # a shared slab boundary counts for both slabs
    assert slab_ordering_violations(LineEnsemble(g, v), 2, 2) == 2
    assert slab_ordering_violations(LineEnsemble(g, v), 1, 2) == 0


def test_split_sample_equivalence(stream):
    g = GridSpec(0.0, 0.5, 8)
    ens = [direct_ensemble(40, 2, g, s) for s in replica_streams(stream, 300)]
    rep = ensemble_equivalence_test(ens[:150], ens[150:], 2, slab_steps=2)
    assert rep.passed
    assert len(default_functionals(g, 2, 2)) == 2 * (3 + 3 + 1)
    other = [LineEnsemble(GridSpec(0, 1, 8), e.values) for e in ens[:30]]
    with pytest.raises(ConfigError):
        ensemble_equivalence_test(ens[:30], other, 2)


def test_modulus_of_constant_lines_is_zero():
    g = GridSpec(0, 1, 16)
    assert np.all(modulus_per_line(np.full((3, 17), 2.5), g) == 0)
    assert uniform_modulus(np.zeros((4, 3)), 3, 1.0).tolist() == [0.0] * 4


def test_modulus_weights_are_log_capped():
    S = np.array([[1.0, 1.0, 2.0, 3.0]])
    assert uniform_modulus(S, 4, 0.0)[0] == 3.0
    assert uniform_modulus(S, 2, 2.0)[0] == 1.0
    assert uniform_modulus(S, 4, 1.0)[0] == pytest.approx(max(1, 2 / math.log(3), 3 / math.log(4)))


def test_bridge_modulus_stable_under_refinement(stream):
    g = GridSpec(0, 1, 128)
    raw = bridge_batch(stream.generator(), [0.0], [0.0], g, 1.0, 2000)
    ens = [LineEnsemble(g, r) for r in raw]
    rep = refinement_stability(ens, stride=2)
    assert rep.passed
    assert np.isfinite(rep.statistics["fine"]).all()


def test_modulus_scan_reports_smallest_d(stream):
    g = GridSpec(0, 1, 32)
    raw = bridge_batch(stream.generator(), np.arange(8.0, 0, -1), np.arange(8.0, 0, -1), g, 2.0, 200)
    rep = modulus_scan([LineEnsemble(g, r) for r in raw])
    assert rep.passed and rep.statistics["smallest_working_d"] is not None
    with pytest.raises(ConfigError):
        modulus_scan([LineEnsemble(g, r[:2]) for r in raw])
