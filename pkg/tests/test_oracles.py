import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from taudigits.core import (BoxProgram, ConfigError, ContractError, IntervalProgram, empirical_error,
                            uniform)
from taudigits.oracles import (BoxClass, ErrorOracle, IntervalClass, SketchClass, VerifierConfig, error,
                               make_class, synth_box, synth_sketch, verify)
from taudigits.postcondition import parse_postcondition
from taudigits.sketch import SolverConfig, interval_sketch, thermostat

needs_solver = pytest.mark.skipif(not SolverConfig().available(), reason="no SMT-LIB2 solver on PATH")


def _grid_intervals(g):
    """All closed intervals with ends on grid ``g`` (lo <= hi)."""
    lo, hi = np.meshgrid(g, g, indexing="ij")
    keep = lo <= hi
    return lo[keep], hi[keep]


def _grid_consistent(points, bits, g):
    """Boolean mask over grid boxes (plus a trailing empty box) that reproduce ``bits``."""
    d = points.shape[1]
    lo, hi = _grid_intervals(g)
    inside = None
    for k in range(d):
        ink = (points[None, :, k] >= lo[:, None]) & (points[None, :, k] <= hi[:, None])
        shape = [1] * d + [len(points)]
        shape[k] = len(lo)
        ink = ink.reshape(shape)
        inside = ink if inside is None else inside & ink
    ok = np.all(inside == bits, axis=-1).reshape(-1)
    return np.append(ok, not bits.any()), lo, hi


def test_interval_fig_example_is_bottom():
    assert synth_box(IntervalClass(), [((0.4,), 0), ((0.6,), 1)]) is None


def test_interval_empty_examples():
    p = synth_box(IntervalClass(), [])
    assert isinstance(p, IntervalProgram)
    assert p.a == 0.0


def test_interval_tightest():
    assert synth_box(IntervalClass(), [((0.4,), 1), ((0.2,), 1), ((0.7,), 0)]).a == 0.4


def test_rectangle_example_consistent_and_minimal():
    ex = [((0.1, 0.2), 1), ((0.5, 0.5), 1), ((0.3, 0.9), 0)]
    p = synth_box(BoxClass(2), ex)
    assert p.lo.tolist() == [0.1, 0.2] and p.hi.tolist() == [0.5, 0.5]
    pts = np.array([e[0] for e in ex])
    bits = np.array([bool(e[1]) for e in ex])
    g = np.round(np.arange(-1.0, 1.0001, 0.05), 10)
    ok, lo, hi = _grid_consistent(pts, bits, g)
    assert ok.any()
    n = len(lo)
    idx = np.flatnonzero(ok[:-1])
    i, j = np.unravel_index(idx, (n, n))
    # every consistent grid box contains the returned one
    assert np.all(lo[i] <= 0.1 + 1e-12) and np.all(hi[i] >= 0.5 - 1e-12)
    assert np.all(lo[j] <= 0.2 + 1e-12) and np.all(hi[j] >= 0.5 - 1e-12)


@given(st.data())
@settings(max_examples=150, deadline=None)
def test_box_completeness_against_grid(data):
    d = data.draw(st.sampled_from([1, 2]))
    m = data.draw(st.integers(0, 12))
    g = np.round(np.arange(-1.0, 1.0001, 0.25), 10)
    idx = data.draw(st.lists(st.integers(0, len(g) - 1), min_size=m * d, max_size=m * d))
    pts = g[np.array(idx, dtype=int)].reshape(m, d)
    bits = np.array(data.draw(st.lists(st.booleans(), min_size=m, max_size=m)), dtype=bool)
    got = BoxClass(d).synth(pts, bits)
    ok, _, _ = _grid_consistent(pts, bits, g)
    assert (got is None) == (not ok.any())
    if got is not None:
        assert np.array_equal(got.predict(pts).astype(bool), bits)


@given(st.data())
@settings(max_examples=150, deadline=None)
def test_interval_completeness_against_grid(data):
    m = data.draw(st.integers(0, 12))
    g = np.round(np.arange(0.0, 1.0001, 0.05), 10)
    x = g[np.array(data.draw(st.lists(st.integers(0, len(g) - 1), min_size=m, max_size=m)), dtype=int)]
    bits = np.array(data.draw(st.lists(st.booleans(), min_size=m, max_size=m)), dtype=bool)
    got = IntervalClass().synth(x, bits)
    consistent = [np.array_equal((x >= 0) & (x <= a), bits) for a in g]
    assert (got is None) == (not any(consistent))


@given(st.data())
@settings(max_examples=150, deadline=None)
def test_monotonicity(data):
    d = data.draw(st.sampled_from([1, 2]))
    cls = BoxClass(d)
    m = data.draw(st.integers(1, 10))
    pts = np.array(data.draw(st.lists(st.floats(-1, 1), min_size=m * d, max_size=m * d))).reshape(m, d)
    bits = np.array(data.draw(st.lists(st.booleans(), min_size=m, max_size=m)), dtype=bool)
    k = data.draw(st.integers(0, m))
    if cls.synth(pts[:k], bits[:k]) is None:
        assert cls.synth(pts, bits) is None


def test_box_outside_ambient_is_bottom():
    assert BoxClass(1).synth(np.array([[1.5]]), np.array([True])) is None
    assert IntervalClass().synth(np.array([-0.2]), np.array([True])) is None


@needs_solver
def test_synth_sketch_examples():
    ast = interval_sketch()
    p = synth_sketch(ast, [((0.4,), 1)])
    assert 0.4 <= p.params[0] <= 1.0
    assert synth_sketch(ast, [((0.4,), 0), ((0.6,), 1)]) is None
    t = synth_sketch(thermostat(5, 8), [])
    assert t is not None and len(t.params) == 3


@needs_solver
def test_sketch_class_matches_box_oracle_on_intervals():
    cls = SketchClass(interval_sketch())
    rng = np.random.default_rng(8)
    for _ in range(10):
        x = rng.uniform(0, 1, 5)
        bits = rng.random(5) < 0.5
        assert (cls.synth(x, bits) is None) == (IntervalClass().synth(x, bits) is None)


POST_HALF = parse_postcondition("Pr[ret == 1] >= 0.5")


def test_verify_examples():
    d = uniform([0], [1])
    cfg = VerifierConfig(n=10_000, seed=0)
    r = verify(IntervalProgram(0.5), d, POST_HALF, cfg)
    # the true mass sits on the threshold, so only the estimate is checked here
    assert abs(r.estimates["(ret == 1)"].value - 0.5) <= 0.02
    assert not verify(IntervalProgram(0.3), d, POST_HALF, cfg).accepted
    vac = parse_postcondition("Pr[true] >= 0")
    for a in (0.0, 0.3, 1.0):
        assert verify(IntervalProgram(a), d, vac, cfg).accepted


def test_verify_accepts_comfortable_interval():
    d = uniform([0], [1])
    hits = sum(verify(IntervalProgram(0.55), d, POST_HALF, VerifierConfig(seed=s)).accepted for s in range(10))
    assert hits == 10


def test_verify_degenerate_and_missing():
    d = uniform([0], [1])
    post = parse_postcondition("Pr[ret && x > 2] / Pr[x > 2] >= 0.5")
    r = verify(IntervalProgram(0.5), d, post)
    assert not r.accepted and r.degenerate
    r = verify(IntervalProgram(0.5), d, parse_postcondition("Pr[x7 > 0] > 0.1"))
    assert not r.accepted and r.missing == ("x7",)


def test_verify_union_bound_half_width():
    from taudigits.core import hoeffding_half_width
    d = uniform([0], [1])
    post = parse_postcondition("Pr[ret] >= 0.1 && Pr[x > 0.5] >= 0.1")
    r = verify(IntervalProgram(0.5), d, post, VerifierConfig(confidence=0.9, n=1000))
    for e in r.estimates.values():
        assert e.half_width == pytest.approx(hoeffding_half_width(1000, 0.95))


def _interval_sym_diff_mass(a_lo, a_hi, b_lo, b_hi, lo, hi):
    """Uniform mass on [lo, hi] of the symmetric difference of two closed intervals."""
    def length(l, h):
        return max(0.0, min(h, hi) - max(l, lo))
    both = length(max(a_lo, b_lo), min(a_hi, b_hi))
    return (length(a_lo, a_hi) + length(b_lo, b_hi) - 2 * both) / (hi - lo)


def test_error_examples():
    d = uniform([0], [1])
    assert error(IntervalProgram(0.3), IntervalProgram(0.3), d).value == 0.0
    truth = _interval_sym_diff_mass(0, 0.5, 0, 0.3, 0, 1)
    assert truth == pytest.approx(0.2)
    assert abs(error(IntervalProgram(0.5), IntervalProgram(0.3), d).value - truth) <= 0.02


def test_error_synthetic_spec_against_analytic_mass():
    d = uniform([-1], [1])
    spec = BoxProgram([0.0], [0.2])
    truth = _interval_sym_diff_mass(-0.1, 0.3, 0.0, 0.2, -1, 1)
    assert truth == pytest.approx(0.1)
    assert abs(error(BoxProgram([-0.1], [0.3]), spec, d).value - truth) <= 0.02


@given(st.floats(0, 1), st.floats(0, 1), st.integers(0, 1000))
@settings(max_examples=30, deadline=None)
def test_error_oracle_matches_core(a, b, seed):
    d = uniform([0], [1])
    cfg = VerifierConfig(n=700, seed=seed)
    got = ErrorOracle(IntervalProgram(b), d, cfg)(IntervalProgram(a))
    ref = empirical_error(IntervalProgram(a), IntervalProgram(b), d, 700, seed)
    assert got.value == ref.value


def test_verifier_config_validation():
    with pytest.raises(ConfigError):
        VerifierConfig(confidence=1.0)
    with pytest.raises(ConfigError):
        VerifierConfig(n=0)


def test_make_class():
    assert make_class("interval").vc_dim == 1
    assert make_class("box", 3).vc_dim == 6
    with pytest.raises(ConfigError):
        make_class("sketch")
    with pytest.raises(ConfigError):
        make_class("polygon")


def test_examples_dimension_checked():
    with pytest.raises(ContractError):
        synth_box(BoxClass(2), [((0.1,), 1)])
