import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import binom

from taudigits.analysis import (LearningParams, TailParams, count_dichotomies, epsilon_net_check,
                                failure_bound, hoeffding_n, predicted_queries, predicted_queries_by_depth,
                                sauer_bound, tail_bounds, tail_exact, vc_cost)
from taudigits.core import BoxProgram, ContractError, IntervalProgram, sample, uniform
from taudigits.oracles import BoxClass, IntervalClass


def test_vc_cost_values():
    # independent evaluation of the closed form
    ref = math.ceil((4 * math.log(2 / 0.05, 2) + 8 * 1 * math.log(13 / 0.1, 2)) / 0.1)
    assert vc_cost(0.1, 0.05, 1) == ref == 775
    assert vc_cost(LearningParams(0.1, 0.05, 2)) > 775
    assert vc_cost(0.05, 0.05, 1) > 775


def test_learning_params_validation():
    with pytest.raises(ContractError):
        LearningParams(0.2, 0.05, 1, alpha=0.1)
    with pytest.raises(ContractError):
        LearningParams(0.1, 1.0, 1)
    LearningParams(0.1, 0.05, 1, alpha=0.1)


def test_hoeffding_n():
    assert hoeffding_n(0.05, 0.05) == math.ceil(math.log(40) / 0.005) == 738
    # ln(2 / (1 - 1e-9)) / 0.5 is just above 1.386, whose ceiling is 2
    assert hoeffding_n(0.5, 1 - 1e-9) == 2
    n1, n2 = hoeffding_n(0.02, 0.01), hoeffding_n(0.01, 0.01)
    assert 3.9 <= n2 / n1 <= 4.1


def test_interval_dichotomies():
    cls = IntervalClass()
    assert count_dichotomies(cls, [0.4, 0.6]) == 3
    assert count_dichotomies(cls, np.zeros((0, 1))) == 1
    assert count_dichotomies(cls, [0.0, 0.5]) == 2
    assert count_dichotomies(cls, [0.0, 0.5], method="brute") == 2


@given(st.lists(st.floats(-0.2, 1.2), max_size=10))
@settings(max_examples=100, deadline=None)
def test_interval_closed_form_matches_brute(xs):
    cls = IntervalClass()
    assert count_dichotomies(cls, np.array(xs)) == count_dichotomies(cls, np.array(xs), method="brute")


@given(st.integers(1, 2), st.data())
@settings(max_examples=60, deadline=None)
def test_box_counter_matches_brute(d, data):
    m = data.draw(st.integers(0, 8 if d == 2 else 10))
    g = np.round(np.arange(-1.25, 1.2501, 0.25), 10)  # includes points outside the ambient box and ties
    idx = data.draw(st.lists(st.integers(0, len(g) - 1), min_size=m * d, max_size=m * d))
    pts = g[np.array(idx, dtype=int)].reshape(m, d)
    cls = BoxClass(d)
    assert count_dichotomies(cls, pts) == count_dichotomies(cls, pts, method="brute")


def test_box_d1_random_points():
    pts = sample(uniform([-1], [1]), 5, 5).points
    assert count_dichotomies(BoxClass(1), pts) == count_dichotomies(BoxClass(1), pts, method="brute")
    # distinct points on a line: every contiguous run plus the empty labeling
    assert count_dichotomies(BoxClass(1), pts) == 5 * 6 // 2 + 1


def test_predicted_queries():
    assert predicted_queries(IntervalClass(), np.linspace(0.05, 0.95, 10)) == 55
    assert predicted_queries(IntervalClass(), np.zeros((0, 1))) == 0
    assert predicted_queries_by_depth(IntervalClass(), [0.2, 0.4, 0.6]) == [0, 1, 2, 3]
    pts = sample(uniform([-1], [1]), 2, 6).points
    brute = sum(count_dichotomies(BoxClass(1), pts[:l], method="brute") for l in range(6))
    assert predicted_queries(BoxClass(1), pts) == brute


def test_sauer_bound():
    assert sauer_bound(1, 10) == pytest.approx(10 * math.e)
    assert count_dichotomies(IntervalClass(), np.linspace(0.05, 0.95, 10)) == 11 <= sauer_bound(1, 10)
    assert sauer_bound(3, 3) == pytest.approx(math.e ** 3)
    with pytest.raises(ContractError):
        sauer_bound(2, 1)


def test_rectangle_counts_below_sauer():
    bound = sauer_bound(2, 50)
    assert bound == pytest.approx((25 * math.e) ** 2)
    for seed in range(5):
        pts = sample(uniform([-1], [1]), seed, 50).points
        assert count_dichotomies(BoxClass(1), pts) <= bound


def test_tail_exact_values():
    assert tail_exact(100, 0.1, 0.2) < 0.001
    assert tail_exact(100, 0.1, 0.2) == pytest.approx(binom.sf(20, 100, 0.1), rel=1e-9)
    assert tail_exact(50, 0.3, 1.0) == 0.0
    assert tail_exact(50, 0.0, 0.4) == 0.0
    assert tail_exact(TailParams(0, 0.1, 0.5)) == 0.0


@given(st.integers(1, 400), st.floats(0.001, 0.95), st.floats(0.01, 1.0))
@settings(max_examples=200, deadline=None)
def test_tail_exact_matches_scipy(m, k, tau):
    if tau <= k:
        return
    t = TailParams(m, k, tau)
    thr = math.floor(tau * m + 1e-9)
    assert tail_exact(t) == pytest.approx(binom.sf(thr, m, k), rel=1e-7, abs=1e-300)


def test_tail_bounds_examples():
    h, kl = tail_bounds(100, 0.1, 0.2)
    assert h == pytest.approx(math.exp(-2))
    assert kl <= h
    assert tail_exact(100, 0.1, 0.2) <= kl


def test_tail_dominance_sweep():
    for m in range(10, 201, 10):
        t = TailParams(m, 0.1, 0.25)
        h, kl = tail_bounds(t)
        assert tail_exact(t) <= kl <= h


def test_tail_param_errors():
    with pytest.raises(ContractError):
        TailParams(10, 0.3, 0.2)
    with pytest.raises(ContractError):
        tail_bounds(10, 0.0, 0.2)
    with pytest.raises(ContractError):
        tail_bounds(10, 0.1, 1.0)


def test_failure_bound():
    t = TailParams(100, 0.1, 0.2)
    assert failure_bound(0.05, t) == pytest.approx(0.05 + tail_exact(t))
    assert failure_bound(1.0, t) == 1.0


def test_epsilon_net_examples():
    d = uniform([0], [1])
    target = IntervalProgram(0.5)
    assert not epsilon_net_check(IntervalClass(), target, d, 0.1, np.zeros((0, 1)))
    assert epsilon_net_check(IntervalClass(), target, d, 0.1, [0.45, 0.55])
    assert not epsilon_net_check(IntervalClass(), target, d, 0.1, [0.45])
    box = BoxProgram([-0.2], [0.4])
    dd = uniform([-1], [1])
    assert not epsilon_net_check(BoxClass(1), box, dd, 0.1, np.zeros((0, 1)))
    assert epsilon_net_check(BoxClass(1), box, dd, 0.1, [-0.25, -0.15, 0.35, 0.45], grid=0.01)


def _brute_interval_net(target_a, eps, xs, grid):
    for a in np.round(np.arange(0.0, 1.0 + grid / 2, grid), 12):
        lo, hi = min(a, target_a), max(a, target_a)
        if hi - lo > eps and not any(lo < x <= hi for x in xs):
            return False
    return True


@given(st.lists(st.floats(0, 1), max_size=8), st.floats(0.02, 0.5), st.floats(0, 1))
@settings(max_examples=100, deadline=None)
def test_epsilon_net_matches_brute(xs, eps, t):
    got = epsilon_net_check(IntervalClass(), IntervalProgram(t), uniform([0], [1]), eps, xs, grid=0.01)
    assert got == _brute_interval_net(t, eps, xs, 0.01)


def test_epsilon_net_unsupported():
    with pytest.raises(ContractError):
        epsilon_net_check(BoxClass(2), BoxProgram([0, 0], [1, 1]), uniform([-1, -1], [1, 1]), 0.1, [[0, 0]])
