from __future__ import annotations

from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from mcmsched import corpus
from mcmsched.costmodel import CostModel
from mcmsched.schedule import WindowPlan
from mcmsched.windowing import (
    greedy_pack_values,
    horizon_of,
    make_windows,
    time_horizon,
    uniform_counts,
    uniform_pack,
    window_loads,
)


def test_hand_traced_example():
    asg = greedy_pack_values([[60, 50, 80]], WindowPlan((100, 200, 300)))
    assert [asg.run(w, 0) for w in range(4)] == [(0, 1), (1, 2), (2, 3), (3, 3)]


def test_horizon_is_worst_model():
    assert horizon_of([[60, 50, 80], [10]]) == 190


def test_default_split_count():
    assert make_windows(1.0, 4).n_windows == 5
    assert make_windows(5.0, 0).boundaries == ()
    with pytest.raises(ValueError):
        make_windows(1.0, -1)


def test_oversized_layer_lands_in_final_window():
    asg = greedy_pack_values([[500, 1]], WindowPlan((100, 200)))
    assert [asg.run(w, 0) for w in range(3)] == [(0, 0), (0, 0), (0, 2)]


def test_fill_then_overflow():
    # 40+40 fits in 100; the third layer overflows, clock jumps to 100, 40 fits in the next window
    asg = greedy_pack_values([[40, 40, 40, 40, 40]], WindowPlan((100, 200)))
    assert [asg.run(w, 0) for w in range(3)] == [(0, 2), (2, 4), (4, 5)]


lat_lists = st.lists(
    st.lists(st.fractions(min_value=0, max_value=60, max_denominator=16), min_size=1, max_size=12),
    min_size=1,
    max_size=4,
)


@given(lat_lists, st.integers(0, 5))
def test_packing_properties(expected, n_splits):
    h = horizon_of(expected)
    if h == 0 and n_splits:
        return
    plan = WindowPlan(tuple(Fraction(k) * h / (n_splits + 1) for k in range(1, n_splits + 1)))
    asg = greedy_pack_values(expected, plan)
    loads = window_loads(expected, asg)
    for w in range(plan.n_windows - 1):
        for m in range(len(expected)):
            assert loads[w][m] <= plan.width(w)
    for m, lats in enumerate(expected):
        seen = []
        for w in range(plan.n_windows):
            s, e = asg.run(w, m)
            seen.extend(range(s, e))
        assert seen == list(range(len(lats)))


def test_uniform_counts_and_pack():
    assert uniform_counts(7, 3) == [3, 2, 2]
    sc = corpus.scenario("sc1")
    asg = uniform_pack(sc, make_windows(1.0, 4))
    assert [asg.run(w, 1) for w in range(5)] == [(0, 12), (12, 24), (24, 36), (36, 48), (48, 60)]


def test_time_horizon_on_corpus():
    sc = corpus.scenario("sc1")
    mcm = corpus.hardware("het-sides-3x3")
    cm = CostModel(sc, mcm)
    assert time_horizon(sc, mcm) == pytest.approx(
        max(sum(cm.expected(m, l) for l in range(len(model))) for m, model in enumerate(sc.models))
    )
