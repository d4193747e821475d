from __future__ import annotations

import itertools
from fractions import Fraction

import numpy as np
import pytest

from cbbc.errors import DomainError, LabelingError, UnsupportedError
from cbbc.model import (CounterSystem, StateWarning, count_visits, extend_with_counter,
                        finite_system, interval_set, label_trace, polynomial_system)
from cbbc.poly import FiniteSet, SemialgebraicSet

from instances import four_state, room, room_counter, room_labels, three_state, three_state_counter


def test_step_finite_table():
    assert three_state().step(0) == (1,)


def test_step_room():
    assert room().step(35) == (Fraction(157, 5),)


def test_step_fixed_point():
    assert three_state().step(5) == (5,)


def test_step_outside_state_set():
    with pytest.raises(DomainError):
        room().step(50)


def test_step_leaving_state_set_warns_or_raises():
    sys = polynomial_system(("x",), {"x": "2x"}, interval_set("x", 0, 10), interval_set("x", 0, 1))
    with pytest.warns(StateWarning):
        sys.step(6)
    strict = polynomial_system(("x",), {"x": "2x"}, interval_set("x", 0, 10),
                               interval_set("x", 0, 1), strict=True)
    with pytest.raises(DomainError):
        strict.step(6)


def test_simulate_three_state():
    assert three_state().simulate(0, 3) == [(0,), (1,), (5,), (5,)]


def test_simulate_room():
    seq = room().simulate(35, 3)
    assert [s[0] for s in seq] == [35, Fraction(157, 5), Fraction(713, 25), Fraction(3277, 125)]


def test_simulate_fixed_point():
    assert three_state().simulate(5, 1) == [(5,), (5,)]


def test_simulate_is_deterministic():
    assert room().simulate(33, 20) == room().simulate(33, 20)


def test_count_visits():
    assert count_visits([(0,), (1,), (5,), (5,)], FiniteSet(("x",), {(0,), (1,)})) == 2
    seq = room().simulate(35, 3)
    assert count_visits(seq, interval_set("x", 27, 35)) == 3
    assert count_visits(seq, SemialgebraicSet.empty(("x",))) == 0


def test_extend_with_counter_three_state():
    ext = extend_with_counter(three_state_counter(2))
    assert len(ext.states()) == 12
    assert ext.initial_states() == [(0, 1)]
    assert ext.simulate((0, 1), 3) == [(0, 1), (1, 2), (5, 2), (5, 2)]


def test_extend_with_counter_empty_region_freezes():
    cs = CounterSystem(three_state(), FiniteSet(("x",), frozenset()), 2)
    ext = extend_with_counter(cs)
    for x0 in ext.initial_states():
        assert all(s[1] == 0 for s in ext.simulate(x0, 10))


def test_extend_with_counter_polynomial_unsupported():
    with pytest.raises(UnsupportedError):
        extend_with_counter(room_counter())


def test_label_trace_four_state():
    _, lab = four_state()
    assert label_trace([0, 1, 3, 5], lab) == ["a", "b", "b", "a"]


def test_label_trace_room():
    seq = [(35,), (Fraction(139, 5),), (Fraction(587, 25),)]
    assert label_trace(seq, room_labels()) == ["a", "b", "c"]


def test_label_trace_constant():
    sys, lab = four_state()
    assert label_trace(sys.simulate(5, 4), lab) == ["a"] * 5


def test_labeling_errors():
    lab = room_labels()
    with pytest.raises(LabelingError):
        lab.label(50)
    with pytest.raises(LabelingError):
        lab.validate_partition(np.array([[10.0]]))


def test_room_labeling_partitions_samples():
    rng = np.random.default_rng(3)
    pts = 17 + 23 * rng.random((10_000, 1))
    pts[:3, 0] = [25, 28, 40]
    room_labels().validate_partition(pts)
    assert (room_labels().label_array(pts) >= 0).all()


def test_counter_extension_matches_visit_count():
    # exhaustive over every table on three states and every bound up to 3
    states = [0, 1, 2]
    region = FiniteSet(("x",), frozenset({(0,), (2,)}))
    for images in itertools.product(states, repeat=3):
        base = finite_system(states, dict(zip(states, images)), states)
        for k in range(4):
            ext = extend_with_counter(CounterSystem(base, region, k))
            for x0 in base.initial_states():
                i0 = 1 if region.contains(x0) else 0
                seq = ext.simulate(x0 + (i0,), 50)
                base_seq = base.simulate(x0, 50)
                for t in range(51):
                    assert seq[t][1] == min(k + 1, count_visits(base_seq[:t + 1], region))
