from __future__ import annotations

import itertools

import numpy as np
import pytest

from cbbc.automata import (advance_front, enumerate_triplets, initial_front, lasso_accepts_buchi,
                           lasso_accepts_cobuchi, max_accepting_visits, parse_automaton,
                           prefix_respects_k, unroll)
from cbbc.errors import ParseError, ResourceError

from instances import automaton


def test_parse_room_uca():
    aut = automaton("room_uca")
    assert aut.states == ("q0", "q1")
    assert aut.accepting == {"q1"}
    assert aut.semantics == "UCA"
    assert {("q0", "b", "q1"), ("q0", "a", "q0"), ("q0", "c", "q0")} <= aut.transitions
    assert {("q1", a, "q0") for a in "abc"} <= aut.transitions


def test_parse_single_loop():
    aut = automaton("a_omega_nba")
    assert len(aut.states) == 1 and len(aut.transitions) == 1


def test_parse_without_transitions():
    aut = parse_automaton("states = q0\ninitial = q0\nalphabet = a\n")
    assert aut.transitions == frozenset()
    assert initial_front(aut, 0) == {"q0": 0}
    assert advance_front(aut, {"q0": 0}, "a", 0) == {}


def test_parse_kuca_bound():
    aut = automaton("four_state_uca")
    assert (aut.semantics, aut.k) == ("kUCA", 2)


@pytest.mark.parametrize("text", [
    "initial = q0\nq0 -a-> q9\nstates = q0",
    "alphabet = a\nstates = q0\nq0 -b-> q0",
    "semantics = kUCA\nq0 -a-> q0",
    "semantics = NBA\nsemantics = UCA\nq0 -a-> q0",
    "states = q0\naccepting = q7",
    "q0 -a q0",
])
def test_parse_rejects(text):
    with pytest.raises(ParseError):
        parse_automaton(text)


def test_parse_error_has_line_number():
    with pytest.raises(ParseError, match="line 3"):
        parse_automaton("states = q0\n\nq0 -a-> q1\n")


def test_front_four_state_word():
    aut = automaton("four_state_uca")
    front = initial_front(aut, 2)
    assert front == {"q0": 0}
    seen = []
    for a in "abba":
        front = advance_front(aut, front, a, 2)
        seen.append(max(front.values()))
    assert front == {"q0": 1}
    assert max(seen) == 1


def test_front_accepting_loop_increments():
    aut = automaton("a_omega_nba")
    assert advance_front(aut, {"q0": 1}, "a", 5) == {"q0": 2}


def test_front_dead_letter():
    aut = automaton("a_omega_nba")
    assert advance_front(aut, {"q0": 1}, "b", 5) == {}


def test_prefix_four_state_trace():
    aut = automaton("four_state_uca")
    word = ["a", "b", "b"] + ["a"] * 7
    assert prefix_respects_k(aut, word, 2)
    assert max_accepting_visits(aut, word, 2) == 1


def test_prefix_accepting_loop_exceeds():
    aut = automaton("a_omega_nba")
    assert not prefix_respects_k(aut, "aaa", 2)
    assert prefix_respects_k(aut, "a", 2)


def test_prefix_bound_above_length():
    aut = automaton("triplet_nba")
    for n in range(6):
        for w in itertools.product(aut.alphabet, repeat=n):
            assert prefix_respects_k(aut, w, n + 1)


def test_lasso_buchi_examples():
    assert lasso_accepts_buchi(automaton("a_omega_nba"), [], ["a"])
    assert not lasso_accepts_buchi(automaton("a_omega_nba"), ["a", "a"], ["b"])
    assert lasso_accepts_buchi(automaton("safety_nba"), ["b", "a"], ["a"])
    assert not lasso_accepts_buchi(automaton("safety_nba"), ["a"], ["b"])


COMPLETE_SAFETY = """
alphabet = a, b
states = q0, q1, q2, sink
initial = q0
accepting = q2
q0 -b-> q1
q0 -a-> sink
q1 -b-> q1
q1 -a-> q2
q2 -a,b-> q2
sink -a,b-> sink
"""


def test_lasso_cobuchi_duality_on_deterministic_structure():
    # complete and deterministic, so each lasso has exactly one run
    aut = parse_automaton(COMPLETE_SAFETY)
    rng = np.random.default_rng(0)
    for _ in range(200):
        stem = list(rng.choice(list(aut.alphabet), rng.integers(0, 7)))
        loop = list(rng.choice(list(aut.alphabet), rng.integers(1, 5)))
        assert lasso_accepts_buchi(aut, stem, loop) != lasso_accepts_cobuchi(aut, stem, loop)


def test_unroll_triplet_automaton():
    un = unroll(automaton("triplet_nba"))
    assert un.states == ("q0", "q1", "q2", "q3", "q1'", "q2'", "q3'")
    assert un.accepting == {"q2'"}
    expected = {
        ("q0", "a", "q1"), ("q1", "b", "q1"), ("q1", "d", "q1"), ("q1", "b", "q2"),
        ("q2", "a", "q1'"), ("q2", "c", "q3'"), ("q3", "b", "q2"), ("q3", "a", "q3"),
        ("q1'", "b", "q1'"), ("q1'", "d", "q1'"), ("q1'", "b", "q2'"),
        ("q2'", "a", "q1'"), ("q2'", "c", "q3'"), ("q3'", "b", "q2'"), ("q3'", "a", "q3'"),
    }
    assert un.transitions == expected


def test_unroll_safety_automaton():
    un = unroll(automaton("safety_nba"))
    assert un.states == ("q0", "q1", "q2", "q2'")
    assert un.accepting == {"q2'"}
    assert un.letters_between("q2", "q2'") == ("a", "b")
    assert un.letters_between("q2'", "q2'") == ("a", "b")


def test_unroll_unreachable_accepting():
    aut = parse_automaton("states = q0, q1\ninitial = q0\naccepting = q1\nq0 -a-> q0\n")
    un = unroll(aut)
    assert un.states == aut.states
    assert un.accepting == frozenset()


def test_triplets_safety_automaton():
    paths = enumerate_triplets(unroll(automaton("safety_nba")))
    assert len(paths) == 1
    path, trips = paths[0]
    assert path == ("q0", "q1", "q2", "q2'")
    assert [(t.first, t.middle, t.last) for t in trips] == [("q0", "q1", "q2"), ("q1", "q2", "q2'")]
    assert trips[0].first_letters == ("b",) and trips[0].second_letters == ("a",)


def test_triplets_no_accepting_state():
    aut = parse_automaton("states = q0\ninitial = q0\nq0 -a-> q0\n")
    assert enumerate_triplets(aut) == []


def test_triplets_triplet_automaton_matches_brute_force():
    un = unroll(automaton("triplet_nba"))
    paths = [p for p, _ in enumerate_triplets(un)]
    for p in paths:
        assert p[-1] == "q2'"
        assert len(set(p)) == len(p)
    # brute force: every state sequence without repeats following some edge
    adj = {(q, r) for q, _, r in un.transitions}
    brute = set()
    others = [q for q in un.states if q not in ("q0", "q2'")]
    for n in range(len(others) + 1):
        for mid in itertools.permutations(others, n):
            cand = ("q0",) + mid + ("q2'",)
            if all((a, b) in adj for a, b in zip(cand, cand[1:])):
                brute.add(cand)
    assert set(paths) == brute
    assert len(paths) == len(brute)


def test_triplet_cap():
    with pytest.raises(ResourceError):
        enumerate_triplets(unroll(automaton("triplet_nba")), cap=1)


def test_to_text_round_trip():
    aut = automaton("room_uca")
    again = parse_automaton(aut.to_text())
    assert again == aut
