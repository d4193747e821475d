from __future__ import annotations

from fractions import Fraction

import numpy as np

from cbbc.automata import parse_automaton
from cbbc.cegis import (CegisConfig, PolynomialTemplate, Rows, assemble_rows, escalate_k,
                        initial_samples, make_template, normalized, rationalize, solve_lp,
                        synthesize)
from cbbc.certify import (CertificateCandidate, CheckConfig, cbbc_conditions, check_certificate,
                          check_finite, check_sampled, classic_conditions, product_cbbc_conditions)
from cbbc.model import CounterSystem, Labeling, count_visits, finite_system, interval_set
from cbbc.poly import parse_poly

from instances import (A_OMEGA_NBA, automaton, certificate, room, room_counter, room_labels,
                       three_state, three_state_counter)
from test_certify import safety_classic

FAST = CegisConfig(falsifier_grid=101, falsifier_random=500, validate_grid=401,
                   validate_random=500)


def raw_template():
    return PolynomialTemplate(("x",), ("i",), 2, "counter")


def test_assemble_single_sample():
    template = raw_template()
    rows = assemble_rows(template, cbbc_conditions(room_counter(4)), np.array([[30.0]]))
    monomials = [m.evaluate({"x": 30, "i": 1}) for m in template.basis]
    # init-inside plus one count row per counter value; f(30) = 27.4 stays in the band
    assert rows.le.shape == (6, template.size)
    assert np.allclose(rows.le[0], [float(v) for v in monomials])
    assert rows.gt.shape == (1, template.size)


def test_assemble_finite_contains_table_certificate():
    from test_certify import THREE_STATE_TABLE

    conds = cbbc_conditions(three_state_counter(2))
    template = make_template(conds, None)
    pts = np.array([[0.0], [1.0], [5.0]])
    rows = assemble_rows(template, conds, pts)
    c = np.array([float(THREE_STATE_TABLE[(int(s[0]), i[0])]) for s, i in template.keys])
    assert (rows.le @ c).max() <= 0
    assert (rows.gt @ c).min() > 0


def test_assemble_empty_samples():
    rows = assemble_rows(raw_template(), cbbc_conditions(room_counter(4)), np.zeros((0, 1)))
    assert rows.count == 0
    assert solve_lp(rows, 6) is not None


def test_solve_infeasible():
    rows = Rows(np.array([[1.0]]), np.array([[1.0]]))
    assert solve_lp(rows, 1) is None


def test_solve_single_le_row_pushes_negative():
    sol = solve_lp(Rows(np.array([[1.0]]), np.zeros((0, 1))), 1, bound=1e3)
    assert sol.coeffs[0] <= -1.0
    assert sol.slack == 1.0


def test_room_printed_vector_is_feasible_on_samples():
    template = raw_template()
    conds = cbbc_conditions(room_counter(4))
    printed = parse_poly("0.224 i^2 - 3.7247 i + 0.0999 x i - 0.000018", ("x", "i"))
    c = np.array([float(printed.coefficient(dict(zip(("x", "i"), next(iter(m.terms))))))
                  for m in template.basis])
    rows = assemble_rows(template, conds, initial_samples(conds, 200))
    assert (rows.le @ c).max() <= 1e-2
    assert (rows.gt @ c).min() > 0


def test_cegis_safety_barrier():
    conds = safety_classic()
    res = synthesize(conds, CegisConfig(degree=1))
    assert res.success
    assert check_certificate(res.candidate, conds, "sampled", 0,
                             CheckConfig(grid=2001, seed=99)).passed


def test_cegis_overlap_is_inconclusive():
    conds = classic_conditions(room(), interval_set("x", 34, 36))
    res = synthesize(conds, FAST)
    assert res.status == "inconclusive"
    assert res.candidate is None


def test_cegis_three_state_table():
    conds = cbbc_conditions(three_state_counter(2))
    res = synthesize(conds, CegisConfig(degree=None))
    assert res.success
    assert check_finite(res.candidate, conds).passed
    assert res.candidate.kind == "table"


def test_escalation_room_uca():
    aut = automaton("room_uca")
    res = escalate_k(lambda k: product_cbbc_conditions(room(), room_labels(), aut, k), 4,
                     CegisConfig(degree=3))
    assert res.success and res.k <= 4


def test_escalation_a_omega_is_inconclusive():
    system = finite_system([0], {0: 0}, [0])
    lab = Labeling.from_states(("x",), {0: "a"}, alphabet=("a", "b"))
    aut = parse_automaton("semantics = UCA\n" + A_OMEGA_NBA)
    res = escalate_k(lambda k: product_cbbc_conditions(system, lab, aut, k), 4,
                     CegisConfig(degree=None))
    assert res.status == "inconclusive"
    assert len(res.attempts) == 5


def test_escalation_k_max_zero():
    aut = automaton("room_uca")
    res = escalate_k(lambda k: product_cbbc_conditions(room(), room_labels(), aut, k), 0,
                     CegisConfig(degree=3))
    assert res.status == "inconclusive"


def test_falsifier_finds_perturbation():
    cand = certificate("room.printed.cert").candidate
    bumped = CertificateCandidate("counter", ("x",), ("i",),
                                  polynomial=cand.polynomial + parse_poly("0.05 i^2", ("x", "i")))
    report = check_sampled(bumped, cbbc_conditions(room_counter(4)))
    assert any(c.tag.startswith("count[i=4]") for c in report.counterexamples)


def test_falsifier_quiet_on_valid_certificate():
    cand = certificate("room.printed.cert").candidate
    report = check_sampled(cand, cbbc_conditions(room_counter(4)), Fraction(1, 100))
    assert report.counterexamples == []


def test_falsifier_zero_against_bound():
    zero = CertificateCandidate("counter", ("x",), polynomial=parse_poly("0", ("x", "i")))
    report = check_sampled(zero, cbbc_conditions(room_counter(4)))
    bound = [c for c in report.counterexamples if c.tag.startswith("bound")]
    assert bound and all(27 <= c.point[0] <= 35 for c in bound)


def test_counterexamples_exclude_previous_candidate():
    conds = cbbc_conditions(room_counter(4))
    template = make_template(conds, 2)
    pts = initial_samples(conds, 12)
    for _ in range(6):
        sol = solve_lp(assemble_rows(template, conds, pts), template.size)
        coeffs = rationalize(normalized(sol.coeffs))
        cand = template.to_candidate(coeffs)
        report = check_sampled(cand, conds, 0, CheckConfig(grid=101, random_points=200))
        if not report.counterexamples:
            break
        new = np.array([[float(v) for v in c.point] for c in report.counterexamples])
        rows = assemble_rows(template, conds, new)
        v = np.array([float(c) for c in coeffs])
        violated = ((rows.le @ v) > 0).any() if len(rows.le) else False
        violated |= ((rows.gt @ v) <= 0).any() if len(rows.gt) else False
        assert violated
        pts = np.unique(np.concatenate([pts, new]), axis=0)


def test_determinism_across_threads():
    conds = cbbc_conditions(room_counter(4))
    one = synthesize(conds, CegisConfig(degree=2, threads=1))
    four = synthesize(conds, CegisConfig(degree=2, threads=4))
    assert one.success and four.success
    assert one.candidate.polynomial == four.candidate.polynomial


def test_finite_success_bounds_visits():
    for k in range(4):
        res = synthesize(cbbc_conditions(three_state_counter(k)), CegisConfig(degree=None))
        system = three_state()
        region = three_state_counter().visit_set
        worst = max(count_visits(system.simulate(x0, 50), region) for x0 in system.initial_states())
        assert res.success == (worst <= k)
        if res.success:
            assert worst <= k


def test_visit_set_never_reached_at_k0():
    cs = CounterSystem(room(), interval_set("x", 36, 40), 0)
    res = synthesize(cbbc_conditions(cs), CegisConfig(degree=1))
    assert res.success
