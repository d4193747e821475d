from __future__ import annotations

from fractions import Fraction

import numpy as np
import pytest

from cbbc.automata import Triplet, enumerate_triplets, parse_automaton, unroll
from cbbc.cegis import CegisConfig
from cbbc.certify import (CertificateCandidate, CheckConfig, check_certificate, check_finite,
                          product_cbbc_conditions)
from cbbc.errors import LiftError
from cbbc.lift import (TripletBarrier, find_barrier, find_triplet_barriers, lift,
                       merge_shared_middle, partition_states)
from cbbc.model import Labeling, finite_system, interval_set, polynomial_system
from cbbc.poly import parse_poly

from instances import automaton, room, room_labels, safety_instance


def safety_unrolled():
    return unroll(automaton("safety_nba"))


def test_first_triplet_is_cut():
    system, lab, _ = safety_instance()
    cuts, uncut = find_triplet_barriers(system, lab, safety_unrolled(), CegisConfig(degree=1),
                                        degrees=(1,))
    assert uncut == []
    (path, tb), = cuts.items()
    assert path == ("q0", "q1", "q2", "q2'")
    assert (tb.triplet.first, tb.triplet.middle, tb.triplet.last) == ("q0", "q1", "q2")
    poly = tb.barrier.polynomial
    for x in np.linspace(0, 2, 81):
        v = poly.evaluate({"x": Fraction(x)})
        assert (v > 0) if x < 1 else (v <= 0)


def test_second_triplet_shares_label():
    system, lab, _ = safety_instance()
    _, trips = enumerate_triplets(safety_unrolled())[0]
    tb = find_barrier(system, lab, trips[1], CegisConfig(), (1,))
    assert not tb.found
    assert "share the label a" in tb.note


def test_room_uca_as_nba_cannot_be_cut():
    aut = automaton("room_uca").with_semantics("NBA")
    res = lift(room(), room_labels(), aut, CegisConfig(degree=2), degrees=(1, 2))
    assert res.status == "inconclusive"
    assert "share the label b" in res.message
    assert res.uncut


def test_no_accepting_states_trivial():
    system, lab, _ = safety_instance()
    aut = parse_automaton("alphabet = a, b\nstates = q0\ninitial = q0\nq0 -a,b-> q0\n")
    cuts, uncut = find_triplet_barriers(system, lab, unroll(aut))
    assert cuts == {} and uncut == []
    res = lift(system, lab, aut)
    assert res.success
    assert all(p.poly == parse_poly("-1", ("x",)) for p in res.candidate.pieces.values())


def state_barrier(text):
    return CertificateCandidate("state", ("x",), polynomial=parse_poly(text))


def barrier(first, middle, last, a, b, text):
    return TripletBarrier(Triplet(first, middle, last, tuple(a), tuple(b)), state_barrier(text),
                          "found")


LINE = {"a": interval_set("x", 0, 1), "b": interval_set("x", 1, 2, lo_open=True),
        "c": interval_set("x", 2, 3, lo_open=True)}


def test_merge_shared_incoming_is_max():
    cuts = {("p1",): barrier("q0", "q1", "q2", "a", "b", "x - 1"),
            ("p2",): barrier("q0", "q1", "q3", "a", "c", "x - 2")}
    merged, dropped = merge_shared_middle(cuts, ("x",))
    assert dropped == [] and len(merged) == 1
    mb = merged[0]
    assert mb.how == "max" and mb.middle == "q1"
    for x in np.linspace(0, 3, 301):
        x = Fraction(x).limit_denominator(1000)
        v = mb.piece.evaluate({"x": x})
        if LINE["a"].contains(x):
            assert v <= 0
        if LINE["b"].contains(x) or LINE["c"].contains(x):
            assert v > 0


def test_merge_shared_outgoing_is_min():
    cuts = {("p1",): barrier("q0", "q2", "q3", "a", "c", "x - 2"),
            ("p2",): barrier("q1", "q2", "q3", "b", "c", "x - 2")}
    merged, _ = merge_shared_middle(cuts, ("x",))
    assert [m.how for m in merged] == ["min"]
    for x in np.linspace(0, 3, 301):
        x = Fraction(x).limit_denominator(1000)
        v = merged[0].piece.evaluate({"x": x})
        if LINE["a"].contains(x) or LINE["b"].contains(x):
            assert v <= 0
        if LINE["c"].contains(x):
            assert v > 0


def test_merge_unrelated_edges_dropped():
    cuts = {("p1",): barrier("q0", "q2", "q3", "a", "c", "x - 2"),
            ("p2",): barrier("q1", "q2", "q4", "b", "c", "x - 2")}
    merged, dropped = merge_shared_middle(cuts, ("x",))
    assert merged == [] and len(dropped) == 2


def test_partition_safety_automaton():
    un = safety_unrolled()
    paths = [p for p, _ in enumerate_triplets(un)]
    left, right = partition_states(un, paths, ["q1"])
    assert left == ("q0", "q1")
    assert right == ("q2", "q2'")


def test_partition_uncut_path():
    un = safety_unrolled()
    paths = [p for p, _ in enumerate_triplets(un)]
    with pytest.raises(LiftError):
        partition_states(un, paths, [])


def test_partition_first_triplets_keep_initial_left():
    un = unroll(automaton("triplet_nba"))
    paths = [p for p, _ in enumerate_triplets(un)]
    left, right = partition_states(un, paths, {p[1] for p in paths})
    assert "q0" in left
    assert set(un.accepting) <= set(right)


def test_lift_safety_pipeline():
    system, lab, aut = safety_instance()
    res = lift(system, lab, aut, CegisConfig(degree=1), degrees=(1,))
    assert res.success, res.message
    assert res.left == ("q0", "q1") and res.right == ("q2", "q2'")
    assert res.shift == Fraction(1, 4)
    assert res.displayed == (0, 0)
    conds = product_cbbc_conditions(system, lab, res.unrolled, 0)
    assert "init-accepting" not in conds.families()
    again = check_certificate(res.candidate, conds, "sampled", 0, CheckConfig(grid=4001, seed=17))
    assert again.passed


def test_lift_finite_toy():
    system = finite_system([0, 1, 2], {0: 1, 1: 1, 2: 2}, [0])
    lab = Labeling.from_states(("x",), {0: "b", 1: "b", 2: "a"}, alphabet=("a", "b"))
    res = lift(system, lab, automaton("safety_nba"))
    assert res.success, res.message
    conds = product_cbbc_conditions(system, lab, res.unrolled, 0)
    assert check_finite(res.candidate, conds).passed


def test_lift_sound_on_varied_dynamics():
    # every successful pipeline run must yield a certificate passing the k = 0 check
    lab = Labeling(("a", "b"), {"a": interval_set("x", 0, 1, hi_open=True),
                                "b": interval_set("x", 1, 2)})
    successes = 0
    for rate in ("0.25", "0.5", "0.75"):
        system = polynomial_system(("x",), {"x": f"{rate}x + 2 - 2*{rate}"},
                                   interval_set("x", 0, 2), interval_set("x", 0, 2))
        res = lift(system, lab, automaton("safety_nba"), CegisConfig(degree=1), degrees=(1, 2))
        if res.success:
            successes += 1
            conds = product_cbbc_conditions(system, lab, res.unrolled, 0)
            assert check_certificate(res.candidate, conds, "sampled", 0,
                                     CheckConfig(seed=3)).passed
        else:
            assert res.status == "inconclusive"
    assert successes == 3
