"""Instance builders shared by the test modules."""

from __future__ import annotations

from pathlib import Path

from cbbc.automata import parse_automaton
from cbbc.formats import load_certificate, load_problem
from cbbc.model import CounterSystem, Labeling, finite_system, interval_set, polynomial_system
from cbbc.poly import FiniteSet

ROOT = Path(__file__).resolve().parent.parent
PROBLEMS = ROOT / "problems"
GOLDEN = Path(__file__).resolve().parent / "golden"


def problem(name):
    return load_problem(PROBLEMS / f"{name}.cbbc")


def certificate(name, aut=None):
    return load_certificate(PROBLEMS / name, aut)


def room(alpha_tau="0.8", offset="3.4"):
    """Room temperature dynamics on [17, 40] with X0 = [30, 35]."""
    return polynomial_system(("x",), {"x": f"{alpha_tau}x + {offset}"},
                             interval_set("x", 17, 40), interval_set("x", 30, 35))


def room_counter(k=4):
    return CounterSystem(room(), interval_set("x", 27, 35), k)


def room_labels():
    return Labeling(("a", "b", "c"), {
        "a": interval_set("x", 28, 40, lo_open=True),
        "b": interval_set("x", 25, 28),
        "c": interval_set("x", 17, 25, hi_open=True),
    })


def three_state():
    """0 -> 1 -> 5 -> 5 with X0 = {0}."""
    return finite_system([0, 1, 5], {0: 1, 1: 5, 5: 5}, [0])


def three_state_counter(k=2):
    return CounterSystem(three_state(), FiniteSet(("x",), frozenset({(0,), (1,)})), k)


def four_state():
    """0 -> 1 -> 3 -> 5 -> 5 with X0 = {0} and labels a on {0, 5}, b on {1, 3}."""
    system = finite_system([0, 1, 3, 5], {0: 1, 1: 3, 3: 5, 5: 5}, [0])
    lab = Labeling.from_states(("x",), {0: "a", 5: "a", 1: "b", 3: "b"}, alphabet=("a", "b"))
    return system, lab


FOUR_STATE_UCA = """
semantics = kUCA 2
alphabet = a, b
states = q0, q1
initial = q0
accepting = q1
q0 -a-> q0
q0 -b-> q1
q1 -b-> q0
q1 -a-> q1
"""

ROOM_UCA = """
semantics = UCA
alphabet = a, b, c
states = q0, q1
initial = q0
accepting = q1
q0 -a,c-> q0
q0 -b-> q1
q1 -a,b,c-> q0
"""

TRIPLET_NBA = """
alphabet = a, b, c, d
states = q0, q1, q2, q3
initial = q0
accepting = q2
q0 -a-> q1
q1 -b,d-> q1
q1 -b-> q2
q2 -a-> q1
q2 -c-> q3
q3 -b-> q2
q3 -a-> q3
"""

SAFETY_NBA = """
alphabet = a, b
states = q0, q1, q2
initial = q0
accepting = q2
q0 -b-> q1
q1 -b-> q1
q1 -a-> q2
q2 -a,b-> q2
"""

A_OMEGA_NBA = """
alphabet = a, b
states = q0
initial = q0
accepting = q0
q0 -a-> q0
"""

AUTOMATA = {
    "four_state_uca": FOUR_STATE_UCA,
    "room_uca": ROOM_UCA,
    "triplet_nba": TRIPLET_NBA,
    "safety_nba": SAFETY_NBA,
    "a_omega_nba": A_OMEGA_NBA,
}


def automaton(name):
    return parse_automaton(AUTOMATA[name])


def safety_instance():
    """x' = 0.5x + 1 on [0, 2] labeled a on [0, 1) and b on [1, 2]."""
    system = polynomial_system(("x",), {"x": "0.5x + 1"}, interval_set("x", 0, 2),
                               interval_set("x", 0, 2))
    lab = Labeling(("a", "b"), {"a": interval_set("x", 0, 1, hi_open=True),
                                "b": interval_set("x", 1, 2)})
    return system, lab, automaton("safety_nba")
