"""Emission of sum-of-squares programs as plain ``.sosp`` text documents.

Nothing here solves an SDP.  A program lists the decision template, one
vector of SOS multipliers per constraint, and each constraint as an
expression over ``B(., index)`` calls.  The in-memory form keeps enough
structure to evaluate the *shadow* of a constraint (multipliers and epsilon
set to zero) for a concrete certificate.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping

from .automata import OmegaAutomaton
from .certify import CertificateCandidate
from .errors import InputError, UnsupportedError
from .model import CounterSystem, DynamicalSystem, Labeling
from .poly import FiniteSet, Polynomial, format_number, monomial_basis, rational

FORMAT_VERSION = 1


@dataclass(frozen=True)
class BCall:
    """``sign * B(arg, index)`` with ``arg`` either ``x`` or ``f(x)``."""

    sign: int
    index: tuple[int, ...]
    successor: bool = False


@dataclass
class SosConstraint:
    name: str
    family: str
    tag: str
    calls: tuple[BCall, ...]
    gs: tuple[Polynomial, ...]           # multiplied by SOS unknowns, subtracted
    epsilon: bool = False                # subtract epsilon

    def multiplier_names(self) -> list[str]:
        return [f"lam_{self.name}_{n + 1}" for n in range(len(self.gs))]


@dataclass
class SosProgram:
    kind: str                                 # cbbc | product
    variables: tuple[str, ...]
    index_names: tuple[str, ...]
    degree: int
    multiplier_degree: int
    epsilon: Fraction
    dynamics: Mapping[str, Polynomial]
    k: int
    constraints: list[SosConstraint] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)

    @property
    def basis(self) -> list[Polynomial]:
        return monomial_basis(self.variables + self.index_names, self.degree)

    def shadow(self, constraint: SosConstraint, cand: CertificateCandidate) -> Polynomial:
        """The constraint polynomial with every multiplier and epsilon set to zero."""
        total = Polynomial.constant(0, self.variables)
        for c in constraint.calls:
            p = cand.piece(c.index).poly
            if c.successor:
                p = p.compose(self.dynamics)
            total = total + c.sign * p
        return total.with_variables(self.variables)

    def to_text(self) -> str:
        xs = ", ".join(self.variables)
        args = ", ".join(self.variables + self.index_names)
        lines = [
            f"sosp {FORMAT_VERSION}",
            f"kind {self.kind}",
            f"state_variables {' '.join(self.variables)}",
            f"index_variables {' '.join(self.index_names)}",
            f"k {self.k}",
            f"epsilon {format_number(self.epsilon)}",
        ]
        for v in self.variables:
            lines.append(f"dynamics {v}' = {self.dynamics[v]}")
        for note in self.notes:
            lines.append(f"# {note}")
        basis = self.basis
        coeffs = " ".join(f"c_{n}" for n in range(len(basis)))
        lines.append(f"decision {coeffs}")
        body = " + ".join(f"c_{n}*{m}" if not m.is_constant() else f"c_{n}"
                          for n, m in enumerate(basis))
        lines.append(f"template B({args}) = {body}")
        for con in self.constraints:
            for name in con.multiplier_names():
                lines.append(f"sos_unknown {name}({xs}) degree {self.multiplier_degree}")
        for con in self.constraints:
            lines.append(f"constraint_sos {con.name} [{con.tag}] := {self.render(con)}")
        return "\n".join(lines) + "\n"

    def render(self, con: SosConstraint) -> str:
        parts = []
        fx = ", ".join(f"{self.dynamics[v]}" for v in self.variables)
        xs = ", ".join(self.variables)
        for c in con.calls:
            arg = fx if c.successor else xs
            idx = ", ".join(str(i) for i in c.index)
            parts.append(("- " if c.sign < 0 else "+ ") + f"B({arg}, {idx})")
        for name, g in zip(con.multiplier_names(), con.gs):
            parts.append(f"- {name}({xs})*({g})")
        if con.epsilon:
            parts.append("- epsilon")
        text = " ".join(parts)
        return text[2:] if text.startswith("+ ") else "-" + text[2:]


# ---------------------------------------------------------------------------
# Set descriptions
# ---------------------------------------------------------------------------


def _vanishing(variables, points) -> Polynomial:
    x = Polynomial.var(variables[0], variables)
    p = Polynomial.constant(1, variables)
    for (v,) in sorted(points):
        p = p * (x - v)
    return p


def describe(s, variables) -> list[tuple[Polynomial, ...]]:
    """Inequality vectors ``g >= 0``, one per piece of a union (usually a single piece)."""
    if isinstance(s, FiniteSet):
        if len(variables) != 1:
            raise UnsupportedError("finite sets are described by polynomials only in one dimension")
        if not s.points:
            return [(Polynomial.constant(-1, variables),)]
        p = _vanishing(variables, s.points)
        return [(p, -p)]
    return [tuple(p.with_variables(variables) for p, _ in s.inequalities)]


def _meet_desc(a, b):
    return [pa + pb for pa in a for pb in b]


def complement_within(s, variables) -> list[tuple[Polynomial, ...]]:
    """Closure of the complement of a box, one piece per dimension: ``(x-lo)(x-hi) >= 0``."""
    if isinstance(s, FiniteSet):
        raise InputError("complements of finite sets are taken against the state set")
    box = s.bounding_box()
    if box is None or not s.is_box():
        raise InputError("cannot derive a complement description for a non-box set; "
                         "supply it in the [sos] section")
    pieces = []
    for v in variables:
        lo, hi = rational(box[v].lower), rational(box[v].upper)
        x = Polynomial.var(v, variables)
        pieces.append(((x - lo) * (x - hi),))
    return pieces


def _interpolate(system: DynamicalSystem) -> dict[str, Polynomial]:
    """Lagrange interpolant of a one-dimensional finite table."""
    if system.dimension != 1:
        raise UnsupportedError("finite-table emission supports one state variable")
    vs = system.variables
    x = Polynomial.var(vs[0], vs)
    pts = system.states()
    total = Polynomial.constant(0, vs)
    for (xi,) in pts:
        basis = Polynomial.constant(1, vs)
        for (xj,) in pts:
            if xj != xi:
                basis = basis * (x - xj) * (1 / (xi - xj))
        total = total + basis * system.successor((xi,))[0]
    return {vs[0]: total}


def _dynamics(system):
    return _interpolate(system) if system.is_finite else dict(system.dynamics)


def _compose_all(gs, dyn):
    return tuple(g.compose(dyn) for g in gs)


# ---------------------------------------------------------------------------
# Programs
# ---------------------------------------------------------------------------


def emit_sos_cbbc(cs: CounterSystem, degree: int, multiplier_degree: int | None = None,
                  epsilon=Fraction(1, 10**6), overrides: Mapping | None = None) -> SosProgram:
    """SOS program for a counter system.

    ``overrides`` may give descriptions (lists of inequality tuples) for
    ``initial_outside`` (X0 minus Xvf), ``initial_inside``, ``outside`` (X minus
    Xvf) and ``inside``; missing ones are derived for boxes and finite sets.
    """
    system, vf, k = cs.base, cs.visit_set, cs.bound
    vs = system.variables
    overrides = dict(overrides or {})
    dyn = _dynamics(system)
    X, X0 = system.state_set, system.initial_set
    if system.is_finite:
        g0n = describe(X0.minus(vf), vs)
        g0v = describe(X0.intersect(vf), vs)
        gn = describe(X.minus(vf), vs)
        gv = describe(X.intersect(vf), vs)
        vf_empty = not X.intersect(vf).points
    else:
        d_x, d_x0, d_vf = describe(X, vs), describe(X0, vs), describe(vf, vs)
        vf_empty = vf.is_trivially_empty()
        g0v = overrides.get("initial_inside") or _meet_desc(d_x0, d_vf)
        gv = overrides.get("inside") or _meet_desc(d_x, d_vf)
        if "initial_outside" in overrides and "outside" in overrides:
            g0n, gn = overrides["initial_outside"], overrides["outside"]
        else:
            comp = complement_within(vf, vs)
            g0n = overrides.get("initial_outside") or _meet_desc(d_x0, comp)
            gn = overrides.get("outside") or _meet_desc(d_x, comp)
    prog = SosProgram("cbbc", vs, ("i",), degree, degree if multiplier_degree is None
                      else multiplier_degree, rational(epsilon), dyn, k)
    if system.is_finite:
        prog.notes.append("finite sets are described by vanishing polynomials; "
                          "dynamics interpolate the table")
    counter = iter(range(1, 10**9))

    def add(family, tag, calls, gs, eps=False):
        for n, piece in enumerate(gs):
            suffix = f" piece {n + 1}" if len(gs) > 1 else ""
            prog.constraints.append(SosConstraint(f"s{next(counter)}", family, tag + suffix,
                                                  tuple(calls), tuple(piece), eps))

    add("init-outside", "init-outside: -B(x,0) on X0 \\ Xvf", [BCall(-1, (0,))], g0n)
    add("init-inside", "init-inside: -B(x,1) on X0 & Xvf", [BCall(-1, (1,))], g0v)
    if vf_empty:
        prog.notes.append("visit set is empty: positivity and counting constraints omitted")
    else:
        add("bound", f"bound: B(x,{k + 1}) - epsilon on Xvf", [BCall(1, (k + 1,))], gv, True)
    for i in range(k + 1):
        add("stay", f"stay[i={i}]: B(x,{i}) - B(f(x),{i}) where f(x) in X \\ Xvf",
            [BCall(-1, (i,), True), BCall(1, (i,))], [_compose_all(g, dyn) for g in gn])
        if not vf_empty:
            add("count", f"count[i={i}]: B(x,{i}) - B(f(x),{i + 1}) where f(x) in Xvf",
                [BCall(-1, (i + 1,), True), BCall(1, (i,))], [_compose_all(g, dyn) for g in gv])
    return prog


def emit_sos_product(system: DynamicalSystem, lab: Labeling, aut: OmegaAutomaton, degree: int,
                     multiplier_degree: int | None = None, k: int | None = None,
                     epsilon=Fraction(1, 10**6)) -> SosProgram:
    """SOS program for the product with a k-UCA, one decrease constraint per
    (state, letter, successor, counter)."""
    k = aut.k if k is None else k
    if k is None:
        raise InputError("product emission needs a bound k")
    vs = system.variables
    dyn = _dynamics(system)
    g0 = describe(system.initial_set, vs)
    g = describe(system.state_set, vs)
    prog = SosProgram("product", vs, ("i", "l"), degree, degree if multiplier_degree is None
                      else multiplier_degree, rational(epsilon), dyn, k)
    if system.is_finite:
        prog.notes.append("finite sets are described by vanishing polynomials; "
                          "dynamics interpolate the table")
    counter = iter(range(1, 10**9))
    idx = aut.index

    def add(family, tag, calls, gs, eps=False):
        for n, piece in enumerate(gs):
            suffix = f" piece {n + 1}" if len(gs) > 1 else ""
            prog.constraints.append(SosConstraint(f"s{next(counter)}", family, tag + suffix,
                                                  tuple(calls), tuple(piece), eps))

    for q in aut.states:
        if q in aut.initial and q not in aut.accepting:
            add("init", f"init[{q}]: -B(x,{q},0) on X0", [BCall(-1, (idx(q), 0))], g0)
    for q in aut.states:
        if q in aut.initial and q in aut.accepting:
            add("init-accepting", f"init-accepting[{q}]: -B(x,{q},1) on X0",
                [BCall(-1, (idx(q), 1))], g0)
    for q in aut.states:
        if q in aut.accepting:
            add("bound", f"bound[{q}]: B(x,{q},{k + 1}) - epsilon on X",
                [BCall(1, (idx(q), k + 1))], g, True)
    for q in aut.states:
        for a in aut.alphabet:
            succ = aut.successors(q, a)
            if not succ:
                continue
            if a not in lab.regions:
                raise InputError(f"no label region for letter {a!r}")
            ga = describe(lab.regions[a], vs)
            for r in succ:
                acc = r in aut.accepting
                family = "step-accepting" if acc else "step"
                for l in range(k + 1):
                    l2 = l + 1 if acc else l
                    add(family, f"{family}[{q} -{a}-> {r}, l={l}]: "
                                f"B(x,{q},{l}) - B(f(x),{r},{l2}) on X_{a}",
                        [BCall(-1, (idx(r), l2), True), BCall(1, (idx(q), l))], ga)
    return prog
