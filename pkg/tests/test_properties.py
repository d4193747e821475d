"""Property tests for the structural invariants of the toolkit."""

from __future__ import annotations

from fractions import Fraction

import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from cbbc.automata import (OmegaAutomaton, advance_front, initial_front, lasso_accepts_buchi,
                           prefix_respects_k, unroll)
from cbbc.cegis import CegisConfig, synthesize
from cbbc.certify import (CertificateCandidate, CheckConfig, cbbc_conditions, check_sampled,
                          classic_conditions)
from cbbc.model import CounterSystem, count_visits, extend_with_counter, finite_system, interval_set
from cbbc.poly import FiniteSet, Polynomial

from instances import AUTOMATA, automaton, room, room_counter
from test_certify import safety_classic

NBA_NAMES = sorted(AUTOMATA)


def word(alphabet, min_size=0, max_size=8):
    return st.lists(st.sampled_from(alphabet), min_size=min_size, max_size=max_size)


@st.composite
def automata(draw, max_states=4, max_letters=3):
    n = draw(st.integers(1, max_states))
    m = draw(st.integers(1, max_letters))
    states = tuple(f"q{j}" for j in range(n))
    alphabet = tuple("abc"[:m])
    edges = [(q, a, r) for q in states for a in alphabet for r in states]
    transitions = draw(st.sets(st.sampled_from(edges), max_size=len(edges)))
    initial = draw(st.sets(st.sampled_from(states), min_size=1))
    accepting = draw(st.sets(st.sampled_from(states)))
    return OmegaAutomaton(alphabet, states, initial, transitions, accepting)


# (a) unrolling keeps Buchi acceptance of every lasso word

@pytest.mark.parametrize("name", NBA_NAMES)
def test_unroll_preserves_lasso_acceptance(name):
    aut = automaton(name).with_semantics("NBA")
    flat = unroll(aut)

    @settings(max_examples=200, deadline=None)
    @given(stem=word(aut.alphabet, 0, 6), loop=word(aut.alphabet, 1, 4))
    def prop(stem, loop):
        assert lasso_accepts_buchi(aut, stem, loop) == lasso_accepts_buchi(flat, stem, loop)

    prop()


# (b) respecting k is monotone in k and closed under prefixes

@settings(max_examples=300, deadline=None)
@given(data=st.data(), k=st.integers(0, 4))
def test_prefix_respects_k_monotone(data, k):
    aut = data.draw(automata())
    w = data.draw(word(aut.alphabet))
    if prefix_respects_k(aut, w, k):
        assert prefix_respects_k(aut, w, k + 1)
        for n in range(len(w)):
            assert prefix_respects_k(aut, w[:n], k)


# (c) the counter coordinate equals the saturated visit count

@settings(max_examples=300, deadline=None)
@given(data=st.data(), k=st.integers(0, 3))
def test_counter_extension_correspondence(data, k):
    n = data.draw(st.integers(1, 5))
    states = list(range(n))
    images = data.draw(st.lists(st.sampled_from(states), min_size=n, max_size=n))
    visit = data.draw(st.sets(st.sampled_from(states)))
    region = FiniteSet(("x",), frozenset((s,) for s in visit))
    base = finite_system(states, dict(zip(states, images)), states)
    ext = extend_with_counter(CounterSystem(base, region, k))
    for x0 in base.initial_states():
        seq = ext.simulate(x0 + (1 if x0[0] in visit else 0,), 20)
        base_seq = base.simulate(x0, 20)
        for t in range(21):
            assert seq[t][0] == base_seq[t][0]
            assert seq[t][1] == min(k + 1, count_visits(base_seq[:t + 1], region))


# (d) synthesized certificates survive a check under an unrelated seed

@pytest.mark.parametrize("build", ["classic", "room"])
def test_cegis_certificates_revalidate(build):
    conds = safety_classic() if build == "classic" else cbbc_conditions(room_counter(4))

    @settings(max_examples=4, deadline=None, suppress_health_check=list(HealthCheck))
    @given(seed=st.integers(0, 10**6), fresh=st.integers(0, 10**6))
    def prop(seed, fresh):
        res = synthesize(conds, CegisConfig(degree=2, seed=seed))
        assert res.success
        report = check_sampled(res.candidate, conds, cfg=CheckConfig(seed=fresh + 1))
        assert report.passed

    prop()


# (e) at k = 0 the co-Buchi conditions agree with the classic ones

VISIT = interval_set("x", 36, 40)
_room = room()
_cbbc = cbbc_conditions(CounterSystem(_room, VISIT, 0))
_classic = classic_conditions(_room, VISIT)
_cfg = CheckConfig(grid=101, random_points=500)


def k0_pair(terms):
    state_poly = Polynomial(("x",), terms)
    counter_poly = Polynomial(("x", "i"), {e + (0,): c for e, c in terms.items()})
    classic = check_sampled(CertificateCandidate("state", ("x",), polynomial=state_poly),
                            _classic, cfg=_cfg)
    cbbc = check_sampled(CertificateCandidate("counter", ("x",), polynomial=counter_poly),
                         _cbbc, cfg=_cfg)
    return classic.verdict, cbbc.verdict


@st.composite
def k0_candidates(draw):
    # half the draws sit near s (x - c), which is valid for c in [35, 36)
    quad = draw(st.fractions(min_value=-1, max_value=1, max_denominator=50))
    if draw(st.booleans()):
        return {(0,): Fraction(draw(st.integers(-40, 40))),
                (1,): draw(st.fractions(min_value=-4, max_value=4, max_denominator=8)),
                (2,): quad}
    s = draw(st.fractions(min_value=Fraction(1, 8), max_value=4, max_denominator=8))
    c = draw(st.fractions(min_value=34, max_value=37, max_denominator=4))
    return {(0,): -s * c, (1,): s, (2,): quad / 1000}


def test_k0_sample_covers_both_verdicts():
    assert not any(VISIT.contains((x,)) for x in range(17, 36))
    assert k0_pair({(0,): Fraction(-71, 2), (1,): Fraction(1)}) == ("pass", "pass")
    assert k0_pair({(0,): Fraction(-37), (1,): Fraction(1)}) == ("fail", "fail")


@settings(max_examples=100, deadline=None)
@given(terms=k0_candidates())
def test_k0_matches_classic(terms):
    classic, cbbc = k0_pair(terms)
    assert classic == cbbc


# (f) the run front equals brute-force enumeration of every run

def brute_front(aut, w, k):
    fronts = {}
    for q in aut.initial:
        runs = [(q, 1 if q in aut.accepting else 0)]
        for a in w:
            runs = [(r, c + (1 if r in aut.accepting else 0))
                    for p, c in runs for r in aut.successors(p, a)]
        for r, c in runs:
            fronts[r] = max(fronts.get(r, -1), min(k + 1, c))
    return fronts


def random_automaton(rng, max_states=4, max_letters=3):
    n, m = rng.randint(1, max_states), rng.randint(1, max_letters)
    states = tuple(f"q{j}" for j in range(n))
    alphabet = tuple("abc"[:m])
    transitions = {(q, a, r) for q in states for a in alphabet for r in states
                   if rng.random() < 0.4}
    initial = {q for q in states if rng.random() < 0.5} or {states[0]}
    accepting = {q for q in states if rng.random() < 0.4}
    return OmegaAutomaton(alphabet, states, initial, transitions, accepting)


def check_front_on_all_words(aut, length, ks=(0, 1, 2)):
    """Compare the run front with every (state, exact count) reached, over all short words."""
    def visit(fronts, runs, depth):
        for k, front in zip(ks, fronts):
            expected = {}
            for r, c in runs:
                expected[r] = max(expected.get(r, -1), min(k + 1, c))
            assert front == expected
        if depth == length:
            return
        for a in aut.alphabet:
            nxt = {(r, c + (1 if r in aut.accepting else 0))
                   for p, c in runs for r in aut.successors(p, a)}
            visit([advance_front(aut, f, a, k) for k, f in zip(ks, fronts)], nxt, depth + 1)

    runs = {(q, 1 if q in aut.accepting else 0) for q in aut.initial}
    visit([initial_front(aut, k) for k in ks], runs, 0)


@pytest.mark.parametrize("name", NBA_NAMES)
def test_advance_front_all_short_words(name):
    check_front_on_all_words(automaton(name), 6)


@settings(max_examples=300, deadline=None)
@given(data=st.data(), k=st.integers(0, 3))
def test_advance_front_matches_enumeration(data, k):
    aut = data.draw(automata())
    w = data.draw(word(aut.alphabet))
    front = initial_front(aut, k)
    assert front == brute_front(aut, [], k)
    for n, a in enumerate(w):
        front = advance_front(aut, front, a, k)
        assert front == brute_front(aut, w[:n + 1], k)

