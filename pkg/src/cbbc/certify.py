"""Condition systems for barrier certificates and the certificate checker.

Every condition is a signed sum of certificate evaluations at ``x`` or at
``f(x)`` with fixed finite indices (counter value, automaton state), required
to be ``<= 0`` (or ``> 0`` for the strict positivity conditions) over a
domain.  The counter and automaton indices are always expanded explicitly.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np

from .automata import OmegaAutomaton
from .errors import InputError, UnsupportedError
from .model import CounterSystem, DynamicalSystem, Labeling
from .poly import (FiniteSet, Interval, Polynomial, SemialgebraicSet, ast_to_polynomial,
                   format_number, format_point, interval_eval, parse_expression, rational)

SIGNATURES = ("state", "counter", "product")
DEFAULT_INDEX_NAMES = {"state": (), "counter": ("i",), "product": ("i", "l")}


# ---------------------------------------------------------------------------
# Conditions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Term:
    sign: int
    index: tuple[int, ...]
    successor: bool = False


@dataclass(frozen=True)
class Domain:
    """``x in region``, ``x not in exclude`` and ``f(x) in post`` (or not in it)."""

    region: object
    exclude: object | None = None
    post: object | None = None
    post_inside: bool = True

    def contains(self, system: DynamicalSystem, x: tuple, fx: tuple | None = None) -> bool:
        if not self.region.contains(x):
            return False
        if self.exclude is not None and self.exclude.contains(x):
            return False
        if self.post is not None:
            fx = system.successor(x) if fx is None else fx
            if self.post.contains(fx) != self.post_inside:
                return False
        return True

    def mask(self, system: DynamicalSystem, pts: np.ndarray, fpts: np.ndarray) -> np.ndarray:
        m = _set_mask(self.region, pts)
        if self.exclude is not None:
            m &= ~_set_mask(self.exclude, pts)
        if self.post is not None:
            inside = _set_mask(self.post, fpts)
            m &= inside if self.post_inside else ~inside
        return m

    def describe(self) -> str:
        text = str(self.region)
        if self.exclude is not None:
            text += f" minus [{self.exclude}]"
        if self.post is not None:
            text += f", f(x) {'in' if self.post_inside else 'not in'} [{self.post}]"
        return text


def _decimal(v) -> Fraction:
    """Shortest decimal reading of a float sample coordinate (an exact rational)."""
    return Fraction(repr(float(v)))


def _set_mask(s, pts):
    if isinstance(s, FiniteSet):
        return np.array([s.contains(tuple(rational(v) for v in row)) for row in pts], dtype=bool)
    return s.contains_array(pts)


def _meet(a, b):
    if isinstance(a, FiniteSet):
        return a.intersect(b)
    if isinstance(b, FiniteSet):
        return b.intersect(a)
    return a.intersect(b)


@dataclass(frozen=True)
class Condition:
    family: str
    tag: str
    domain: Domain
    terms: tuple[Term, ...]
    strict: bool = False

    @property
    def relation(self) -> str:
        return "> 0" if self.strict else "<= 0"


@dataclass
class ConditionSystem:
    kind: str                       # classic | cbbc | product
    signature: str
    system: DynamicalSystem
    conditions: list[Condition]
    index_names: tuple[str, ...]
    k: int | None = None
    automaton: OmegaAutomaton | None = None
    labeling: Labeling | None = None

    def families(self) -> list[str]:
        seen = []
        for c in self.conditions:
            if c.family not in seen:
                seen.append(c.family)
        return seen

    def indices(self) -> list[tuple[int, ...]]:
        """Every index tuple referenced by some condition, sorted."""
        return sorted({t.index for c in self.conditions for t in c.terms})


def classic_conditions(system: DynamicalSystem, unsafe) -> ConditionSystem:
    """Initial, unsafe and decrease conditions of a classic barrier certificate."""
    X = system.state_set
    conds = [
        Condition("init", "init: B(x) <= 0 on X0", Domain(system.initial_set), (Term(1, ()),)),
        Condition("unsafe", "unsafe: B(x) > 0 on Xu", Domain(_meet(X, unsafe)), (Term(1, ()),),
                  strict=True),
        Condition("decrease", "decrease: B(f(x)) - B(x) <= 0 on X", Domain(X),
                  (Term(1, (), True), Term(-1, ()))),
    ]
    return ConditionSystem("classic", "state", system, conds, ())


def cbbc_conditions(cs: CounterSystem) -> ConditionSystem:
    """Co-Büchi barrier conditions with the counter expanded over 0..k+1."""
    system, vf, k = cs.base, cs.visit_set, cs.bound
    X, X0 = system.state_set, system.initial_set
    conds = [
        Condition("init-outside", "init-outside: B(x,0) <= 0 on X0 \\ Xvf",
                  Domain(X0, exclude=vf), (Term(1, (0,)),)),
        Condition("init-inside", "init-inside: B(x,1) <= 0 on X0 & Xvf",
                  Domain(_meet(X0, vf)), (Term(1, (1,)),)),
        Condition("bound", f"bound: B(x,{k + 1}) > 0 on Xvf",
                  Domain(_meet(X, vf)), (Term(1, (k + 1,)),), strict=True),
    ]
    for i in range(k + 1):
        conds.append(Condition(
            "stay", f"stay[i={i}]: B(f(x),{i}) - B(x,{i}) <= 0 where f(x) not in Xvf",
            Domain(X, post=vf, post_inside=False), (Term(1, (i,), True), Term(-1, (i,)))))
        conds.append(Condition(
            "count", f"count[i={i}]: B(f(x),{i + 1}) - B(x,{i}) <= 0 where f(x) in Xvf",
            Domain(X, post=vf, post_inside=True), (Term(1, (i + 1,), True), Term(-1, (i,)))))
    return ConditionSystem("cbbc", "counter", system, conds, ("i",), k=k)


def product_cbbc_conditions(system: DynamicalSystem, lab: Labeling, aut: OmegaAutomaton,
                            k: int | None = None) -> ConditionSystem:
    """Conditions over the synchronous product with a k-UCA.

    The maximum over successors is split into one decrease condition per
    successor.  ``k`` defaults to the automaton's own bound.
    """
    if k is None:
        k = aut.k
    if k is None:
        raise InputError("product conditions need a bound k")
    X, X0 = system.state_set, system.initial_set
    idx = aut.index
    conds = []
    for q in aut.states:
        if q in aut.initial and q not in aut.accepting:
            conds.append(Condition("init", f"init[{q}]: B(x,{q},0) <= 0 on X0",
                                   Domain(X0), (Term(1, (idx(q), 0)),)))
    for q in aut.states:
        if q in aut.initial and q in aut.accepting:
            conds.append(Condition("init-accepting", f"init-accepting[{q}]: B(x,{q},1) <= 0 on X0",
                                   Domain(X0), (Term(1, (idx(q), 1)),)))
    for q in aut.states:
        if q in aut.accepting:
            conds.append(Condition("bound", f"bound[{q}]: B(x,{q},{k + 1}) > 0 on X",
                                   Domain(X), (Term(1, (idx(q), k + 1)),), strict=True))
    for q in aut.states:
        for a in aut.alphabet:
            succ = aut.successors(q, a)
            if not succ:
                continue
            if a not in lab.regions:
                raise InputError(f"no label region for letter {a!r} used by the automaton")
            region = _meet(X, lab.regions[a])
            for r in succ:
                acc = r in aut.accepting
                for l in range(k + 1):
                    l2 = l + 1 if acc else l
                    family = "step-accepting" if acc else "step"
                    conds.append(Condition(
                        family, f"{family}[{q} -{a}-> {r}, l={l}]: "
                                f"B(f(x),{r},{l2}) - B(x,{q},{l}) <= 0 on X_{a}",
                        Domain(region), (Term(1, (idx(r), l2), True), Term(-1, (idx(q), l)))))
    return ConditionSystem("product", "product", system, conds, ("i", "l"), k=k,
                           automaton=aut, labeling=lab)


# ---------------------------------------------------------------------------
# Certificate candidates
# ---------------------------------------------------------------------------


class Piece:
    """Function of the state used as one entry of a piecewise certificate."""

    def evaluate(self, point: Mapping) -> Fraction:
        raise NotImplementedError

    def eval_array(self, pts: np.ndarray, variables) -> np.ndarray:
        raise NotImplementedError

    def interval(self, box: Mapping[str, Interval]) -> Interval:
        raise NotImplementedError


@dataclass(frozen=True)
class PolyPiece(Piece):
    poly: Polynomial

    def evaluate(self, point):
        return self.poly.evaluate(point)

    def eval_array(self, pts, variables):
        return self.poly.compile(variables)(pts)

    def interval(self, box):
        return interval_eval(self.poly, box)

    def __str__(self):
        return str(self.poly)


@dataclass(frozen=True)
class ExtremumPiece(Piece):
    """``max(parts) + offset`` or ``min(parts) + offset``, evaluated pointwise."""

    op: str
    parts: tuple[Piece, ...]
    offset: Fraction = Fraction(0)

    def evaluate(self, point):
        vals = [p.evaluate(point) for p in self.parts]
        return (max(vals) if self.op == "max" else min(vals)) + self.offset

    def eval_array(self, pts, variables):
        vals = np.stack([p.eval_array(pts, variables) for p in self.parts])
        red = vals.max(axis=0) if self.op == "max" else vals.min(axis=0)
        return red + float(self.offset)

    def interval(self, box):
        ivs = [p.interval(box) for p in self.parts]
        f = max if self.op == "max" else min
        iv = Interval(f(i.lower for i in ivs), f(i.upper for i in ivs))
        return iv + self.offset

    def __str__(self):
        body = f"{self.op}({', '.join(str(p) for p in self.parts)})"
        if self.offset:
            body += (" + " if self.offset > 0 else " - ") + str(abs(self.offset))
        return body


@dataclass(frozen=True)
class TablePiece(Piece):
    """Exact values on enumerated states (finite systems only)."""

    variables: tuple
    values: tuple          # sorted ((state tuple, value), ...)
    offset: Fraction = Fraction(0)

    @classmethod
    def from_dict(cls, variables, values: Mapping) -> "TablePiece":
        return cls(tuple(variables), tuple(sorted(values.items())))

    def evaluate(self, point):
        x = tuple(rational(point[v]) for v in self.variables)
        for s, val in self.values:
            if s == x:
                return val + self.offset
        raise InputError(f"table piece has no value at {format_point(x)}")

    def eval_array(self, pts, variables):
        return np.array([float(self.evaluate(dict(zip(variables, (_decimal(v) for v in row)))))
                         for row in pts])

    def interval(self, box):
        raise UnsupportedError("table pieces have no interval enclosure")

    def __str__(self):
        body = "table(" + ", ".join(f"{format_point(s)}: {v}" for s, v in self.values) + ")"
        if self.offset:
            body += (" + " if self.offset > 0 else " - ") + str(abs(self.offset))
        return body


def shift_piece(piece: Piece, c) -> Piece:
    """``piece + c`` for a rational constant ``c``."""
    c = rational(c)
    if isinstance(piece, PolyPiece):
        return PolyPiece(piece.poly + c)
    if isinstance(piece, ExtremumPiece):
        return ExtremumPiece(piece.op, piece.parts, piece.offset + c)
    if isinstance(piece, TablePiece):
        return TablePiece(piece.variables, piece.values, piece.offset + c)
    raise InputError(f"cannot shift {type(piece).__name__}")


def constant_piece(c, variables) -> PolyPiece:
    return PolyPiece(Polynomial.constant(rational(c), tuple(variables)))


def parse_piece(text: str, variables: Sequence[str]) -> Piece:
    """Parse a polynomial, or ``max(...)``/``min(...)`` plus an optional constant."""
    node = parse_expression(text)

    def go(n):
        if n[0] == "call":
            if n[1] not in ("max", "min"):
                raise InputError(f"unknown function {n[1]!r}")
            return ExtremumPiece(n[1], tuple(go(a) for a in n[2]))
        if n[0] == "add" and (_contains_call(n[1]) or _contains_call(n[2])):
            left, right = n[1], n[2]
            if _contains_call(right):
                left, right = right, left
            base = go(left)
            if not isinstance(base, ExtremumPiece) or _contains_call(right):
                raise InputError(f"unsupported piece expression {text!r}")
            c = ast_to_polynomial(right, variables)
            if not c.is_constant():
                raise InputError(f"only constant offsets may be added to max/min in {text!r}")
            return ExtremumPiece(base.op, base.parts, base.offset + c.constant_term())
        if _contains_call(n):
            raise InputError(f"unsupported piece expression {text!r}")
        return PolyPiece(ast_to_polynomial(n, variables))

    return go(node)


def _contains_call(n) -> bool:
    if not isinstance(n, tuple):
        return False
    if n[0] == "call":
        return True
    return any(_contains_call(c) for c in n[1:] if isinstance(c, tuple))


@dataclass
class CertificateCandidate:
    """A candidate certificate in one of three shapes.

    * ``polynomial``: one polynomial over state variables and index names;
    * ``pieces``: a :class:`Piece` per index tuple (lifted certificates);
    * ``table``: an exact value per (state, index) pair (finite systems).
    """

    signature: str
    variables: tuple[str, ...]
    index_names: tuple[str, ...] | None = None
    polynomial: Polynomial | None = None
    pieces: dict | None = None
    table: dict | None = None
    default: Piece | None = None
    provenance: str = ""
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if self.signature not in SIGNATURES:
            raise InputError(f"unknown signature {self.signature!r}")
        self.variables = tuple(self.variables)
        if self.index_names is None:
            self.index_names = DEFAULT_INDEX_NAMES[self.signature]
        self.index_names = tuple(self.index_names)
        if len(self.index_names) != len(DEFAULT_INDEX_NAMES[self.signature]):
            raise InputError(f"signature {self.signature} needs "
                             f"{len(DEFAULT_INDEX_NAMES[self.signature])} index names")
        shapes = [self.polynomial is not None, self.pieces is not None, self.table is not None]
        if sum(shapes) != 1:
            raise InputError("a certificate is exactly one of polynomial, pieces or table")
        if self.polynomial is not None:
            allowed = set(self.variables) | set(self.index_names)
            extra = set(self.polynomial.used_variables()) - allowed
            if extra:
                raise InputError(f"certificate uses undeclared variables {sorted(extra)}")
            self.polynomial = self.polynomial.with_variables(self.variables + self.index_names)
        if self.table is not None:
            n = len(self.variables)
            self.table = {(tuple(rational(v) for v in x), tuple(int(i) for i in idx)): rational(val)
                          for (x, idx), val in self.table.items()}
            for (x, _) in self.table:
                if len(x) != n:
                    raise InputError("table state has wrong dimension")
        if self.pieces is not None:
            self.pieces = {tuple(int(i) for i in idx): p for idx, p in self.pieces.items()}

    @property
    def kind(self) -> str:
        if self.polynomial is not None:
            return "polynomial"
        return "pieces" if self.pieces is not None else "table"

    def piece(self, idx: tuple) -> Piece:
        idx = tuple(idx)
        if self.polynomial is not None:
            key = ("piece", idx)
            if key not in self._cache:
                fixed = dict(zip(self.index_names, idx))
                self._cache[key] = PolyPiece(self.polynomial.partial(fixed)
                                             .with_variables(self.variables)
                                             if self.index_names else self.polynomial)
            return self._cache[key]
        if self.pieces is not None:
            if idx in self.pieces:
                return self.pieces[idx]
            if self.default is not None:
                return self.default
            raise InputError(f"piecewise certificate has no entry for index {idx}")
        raise UnsupportedError("table certificates are only defined on enumerated states")

    def evaluate(self, x: tuple, idx: tuple) -> Fraction:
        x = tuple(rational(v) for v in x)
        idx = tuple(idx)
        if self.table is not None:
            try:
                return self.table[(x, idx)]
            except KeyError:
                raise InputError(f"table does not cover state {format_point(x)} at index {idx}")
        return self.piece(idx).evaluate(dict(zip(self.variables, x)))

    def eval_array(self, pts: np.ndarray, idx: tuple) -> np.ndarray:
        if self.table is not None:
            return np.array([float(self.evaluate(tuple(row), idx)) for row in pts])
        key = ("fn", tuple(idx))
        piece = self.piece(idx)
        if isinstance(piece, PolyPiece):
            if key not in self._cache:
                self._cache[key] = piece.poly.compile(self.variables)
            return self._cache[key](pts)
        return piece.eval_array(pts, self.variables)

    def to_text(self) -> str:
        from .formats import write_certificate

        return write_certificate(self)


# ---------------------------------------------------------------------------
# Checking
# ---------------------------------------------------------------------------


@dataclass
class CheckConfig:
    grid: int = 201
    random_points: int = 10_000
    seed: int = 0
    refine_iters: int = 50
    eps_pos: Fraction = Fraction(1, 10**6)
    depth: int = 12
    threads: int = 1
    recheck: int = 200


@dataclass
class Counterexample:
    point: tuple
    condition: int
    tag: str
    value: Fraction

    def describe(self) -> str:
        return (f"{self.tag} at x={format_point(self.point)}: value "
                f"{float(self.value):.12g} ({self.value})")


@dataclass
class ConditionResult:
    index: int
    tag: str
    family: str
    strict: bool
    status: str                      # pass | fail | unknown | vacuous
    worst: Fraction | float | None = None
    worst_point: tuple | None = None
    checked: int = 0


@dataclass
class CheckReport:
    verdict: str
    mode: str
    tolerance: Fraction
    results: list[ConditionResult]
    counterexamples: list[Counterexample]

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"

    def worst_by_family(self) -> dict[str, float]:
        """Worst signed value per family (max for <=, min for >)."""
        out: dict = {}
        for r in self.results:
            if r.worst is None:
                continue
            w = float(r.worst)
            if r.family not in out:
                out[r.family] = w
            else:
                out[r.family] = min(out[r.family], w) if r.strict else max(out[r.family], w)
        return out

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "mode": self.mode,
            "tolerance": str(self.tolerance),
            "conditions": [
                {
                    "tag": r.tag,
                    "family": r.family,
                    "relation": "> 0" if r.strict else "<= 0",
                    "status": r.status,
                    "worst": None if r.worst is None else format_number(r.worst, decimal=True),
                    "worst_exact": None if r.worst is None else str(rational(r.worst)),
                    "worst_point": None if r.worst_point is None else format_point(r.worst_point),
                    "checked": r.checked,
                }
                for r in self.results
            ],
            "counterexamples": [
                {"tag": c.tag, "point": format_point(c.point),
                 "value": format_number(c.value, decimal=True), "value_exact": str(c.value)}
                for c in self.counterexamples
            ],
        }

    def to_text(self) -> str:
        lines = [f"verdict: {self.verdict}", f"mode: {self.mode}",
                 f"tolerance: {format_number(self.tolerance, decimal=True)}"]
        for r in self.results:
            if r.worst is None:
                worst = "n/a"
            else:
                worst = (f"{float(r.worst):.12g} ({rational(r.worst)}) at "
                         f"x={format_point(r.worst_point)}")
            lines.append(f"condition {r.index}: {r.status:<7} worst {worst} :: {r.tag}")
        lines.append(f"counterexamples: {len(self.counterexamples)}")
        for c in self.counterexamples:
            lines.append(f"  - {c.describe()}")
        return "\n".join(lines) + "\n"


def _check_signature(cand: CertificateCandidate, conds: ConditionSystem):
    if cand.signature != conds.signature:
        raise InputError(f"certificate signature {cand.signature!r} does not match the "
                         f"condition system ({conds.signature!r})")
    if cand.variables != conds.system.variables:
        raise InputError(f"certificate variables {cand.variables} differ from the system's "
                         f"{conds.system.variables}")


def _violates(value, strict: bool, tol) -> bool:
    return value <= -tol if strict else value > tol


def _score(values: np.ndarray, strict: bool, tol: float) -> np.ndarray:
    """Positive or zero (strict) means violation; larger is worse."""
    return (-values - tol) if strict else (values - tol)


def condition_value(cand: CertificateCandidate, cond: Condition, system: DynamicalSystem,
                    x: tuple, fx: tuple | None = None) -> Fraction:
    total = Fraction(0)
    for t in cond.terms:
        if t.successor and fx is None:
            fx = system.successor(x)
        total += t.sign * cand.evaluate(fx if t.successor else x, t.index)
    return total


def condition_values_array(cand, cond, pts, fpts) -> np.ndarray:
    total = np.zeros(len(pts))
    for t in cond.terms:
        total += t.sign * cand.eval_array(fpts if t.successor else pts, t.index)
    return total


def check_finite(cand: CertificateCandidate, conds: ConditionSystem,
                 tolerance=0, eps_pos=None) -> CheckReport:
    """Exhaustive exact check over every enumerated state of a finite system."""
    _check_signature(cand, conds)
    system = conds.system
    if not system.is_finite:
        raise UnsupportedError("check_finite needs a finite-table system")
    tol = rational(tolerance)
    results, cexs = [], []
    for n, cond in enumerate(conds.conditions):
        worst, worst_pt, count, bad = None, None, 0, False
        for x in system.states():
            fx = system.successor(x)
            if not cond.domain.contains(system, x, fx):
                continue
            count += 1
            v = condition_value(cand, cond, system, x, fx)
            if worst is None or (v < worst if cond.strict else v > worst):
                worst, worst_pt = v, x
            if _violates(v, cond.strict, tol):
                bad = True
                cexs.append(Counterexample(x, n, cond.tag, v))
        status = "vacuous" if count == 0 else ("fail" if bad else "pass")
        results.append(ConditionResult(n, cond.tag, cond.family, cond.strict, status,
                                       worst, worst_pt, count))
    verdict = "fail" if cexs else "pass"
    return CheckReport(verdict, "exhaustive", tol, results, cexs)


def _state_box(system: DynamicalSystem):
    box = system.state_set.bounding_box()
    if box is None:
        raise UnsupportedError("the state set has no bounding box (add simple bounds "
                               "like 'x >= lo; x <= hi')")
    return box


def sample_points(system: DynamicalSystem, grid: int, random_points: int, seed: int) -> np.ndarray:
    """Deterministic grid plus seeded uniform points over the state set's bounding box."""
    box = _state_box(system)
    vs = system.variables
    lo = np.array([float(box[v].lower) for v in vs])
    hi = np.array([float(box[v].upper) for v in vs])
    axes = [np.linspace(lo[d], hi[d], grid) for d in range(len(vs))]
    mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, len(vs))
    rng = np.random.default_rng(seed)
    rand = lo + (hi - lo) * rng.random((random_points, len(vs)))
    return np.concatenate([mesh, rand])


def _golden_refine(score_fn, start: np.ndarray, lo: np.ndarray, hi: np.ndarray,
                   radius: np.ndarray, iters: int):
    """Coordinate-wise golden-section ascent of ``score_fn`` around ``start``."""
    invphi = (math.sqrt(5) - 1) / 2
    best = start.copy()
    best_score = score_fn(best)
    for d in range(len(start)):
        a = max(lo[d], best[d] - radius[d])
        b = min(hi[d], best[d] + radius[d])
        if b <= a:
            continue

        def at(t):
            p = best.copy()
            p[d] = t
            return p, score_fn(p)

        c = b - invphi * (b - a)
        e = a + invphi * (b - a)
        pc, fc = at(c)
        pe, fe = at(e)
        for _ in range(iters):
            for p, f in ((pc, fc), (pe, fe)):
                if f > best_score:
                    best, best_score = p.copy(), f
            if fc >= fe:
                b, e, pe, fe = e, c, pc, fc
                c = b - invphi * (b - a)
                pc, fc = at(c)
            else:
                a, c, pc, fc = c, e, pe, fe
                e = a + invphi * (b - a)
                pe, fe = at(e)
        for p, f in ((pc, fc), (pe, fe)):
            if f > best_score:
                best, best_score = p.copy(), f
    return best, best_score


def _check_condition_sampled(cand, cond, n, system, pts, fpts, tol, cfg, box_lo, box_hi, spacing,
                             max_cex):
    tolf = float(tol)
    mask = cond.domain.mask(system, pts, fpts)
    idx = np.nonzero(mask)[0]
    if idx.size == 0:
        return ConditionResult(n, cond.tag, cond.family, cond.strict, "vacuous"), []
    vals = condition_values_array(cand, cond, pts[idx], fpts[idx])
    scores = _score(vals, cond.strict, tolf)
    candidates = []
    order = np.argsort(-scores, kind="stable")
    slack = 1e-9 * (1.0 + np.abs(vals))
    flagged = [int(j) for j in order[: cfg.recheck] if scores[j] > -slack[j]]
    candidates.extend(pts[idx[j]] for j in flagged)

    # local refinement from the worst sampled point
    if cfg.refine_iters > 0 and not system.is_finite:
        def score_fn(p):
            p2 = p[None, :]
            fp = system.successor_array(p2)
            if not cond.domain.mask(system, p2, fp)[0]:
                return -math.inf
            return float(_score(condition_values_array(cand, cond, p2, fp), cond.strict, tolf)[0])

        start = pts[idx[order[0]]]
        refined, rscore = _golden_refine(score_fn, start.astype(float), box_lo, box_hi,
                                         2 * spacing, cfg.refine_iters)
        if rscore > -1e-9 * (1.0 + abs(rscore)):
            candidates.append(refined)

    cexs = []
    seen = set()
    for p in candidates:
        x = tuple(_decimal(v) for v in p)
        if x in seen:
            continue
        seen.add(x)
        fx = system.successor(x)
        if not cond.domain.contains(system, x, fx):
            continue
        v = condition_value(cand, cond, system, x, fx)
        if _violates(v, cond.strict, tol):
            cexs.append(Counterexample(x, n, cond.tag, v))
    cexs.sort(key=lambda c: (-(c.value if not cond.strict else -c.value), c.point))
    worst_j = order[0]
    worst_pt = tuple(_decimal(v) for v in pts[idx[worst_j]])
    worst_val = condition_value(cand, cond, system, worst_pt)
    if cexs:
        top = cexs[0]
        if (top.value > worst_val) if not cond.strict else (top.value < worst_val):
            worst_pt, worst_val = top.point, top.value
    status = "fail" if cexs else "pass"
    return (ConditionResult(n, cond.tag, cond.family, cond.strict, status, worst_val, worst_pt,
                            int(idx.size)), cexs[:max_cex])


def check_sampled(cand: CertificateCandidate, conds: ConditionSystem, tolerance=0,
                  cfg: CheckConfig | None = None, max_counterexamples: int = 32,
                  points: np.ndarray | None = None) -> CheckReport:
    """Grid + seeded random + local refinement check; violations confirmed exactly."""
    _check_signature(cand, conds)
    cfg = cfg or CheckConfig()
    system = conds.system
    if system.is_finite:
        return check_finite(cand, conds, tolerance)
    tol = rational(tolerance)
    box = _state_box(system)
    vs = system.variables
    box_lo = np.array([float(box[v].lower) for v in vs])
    box_hi = np.array([float(box[v].upper) for v in vs])
    spacing = (box_hi - box_lo) / max(cfg.grid - 1, 1)
    pts = sample_points(system, cfg.grid, cfg.random_points, cfg.seed) if points is None else points
    fpts = system.successor_array(pts)

    def work(item):
        n, cond = item
        return _check_condition_sampled(cand, cond, n, system, pts, fpts, tol, cfg, box_lo, box_hi,
                                        spacing, max_counterexamples)

    items = list(enumerate(conds.conditions))
    if cfg.threads > 1:
        with ThreadPoolExecutor(cfg.threads) as pool:
            outs = list(pool.map(work, items))
    else:
        outs = [work(it) for it in items]
    results = [r for r, _ in outs]
    cexs = [c for _, cs in outs for c in cs]
    verdict = "fail" if cexs else "pass"
    return CheckReport(verdict, "sampled", tol, results, cexs)


def _expression_interval(cand, cond, system, box, symbolic_cache):
    """Enclosure of the condition expression over ``box``."""
    if cand.polynomial is not None and not system.is_finite:
        key = id(cond)
        if key not in symbolic_cache:
            symbolic_cache[key] = condition_expression(cand, cond, system)
        return interval_eval(symbolic_cache[key], box)
    fbox = None
    total = Interval(0, 0)
    for t in cond.terms:
        if t.successor:
            if fbox is None:
                fbox = {v: interval_eval(system.dynamics[v], box) for v in system.variables}
            iv = cand.piece(t.index).interval(fbox)
        else:
            iv = cand.piece(t.index).interval(box)
        total = total + (iv if t.sign > 0 else -iv)
    return total


def condition_expression(cand: CertificateCandidate, cond: Condition,
                         system: DynamicalSystem) -> Polynomial:
    """Symbolic condition polynomial in the state variables (polynomial candidates only)."""
    if cand.polynomial is None or system.is_finite:
        raise UnsupportedError("symbolic expressions need a polynomial certificate and dynamics")
    total = Polynomial.constant(0, system.variables)
    for t in cond.terms:
        p = cand.piece(t.index).poly
        if t.successor:
            p = p.compose(system.dynamics)
        total = total + t.sign * p
    return total.with_variables(system.variables)


def _clip(box, region):
    """Shrink ``box`` by the univariate linear bounds of ``region``; None if empty."""
    if not isinstance(region, SemialgebraicSet):
        return box
    out = dict(box)
    for p, _ in region.inequalities:
        used = p.used_variables()
        if len(used) != 1 or p.degree != 1 or used[0] not in out:
            continue
        v = used[0]
        a = p.coefficient({v: 1})
        bound = -p.constant_term() / a
        lo, hi = out[v].lower, out[v].upper
        if a > 0:
            lo = max(lo, bound)
        else:
            hi = min(hi, bound)
        if lo > hi:
            return None
        out[v] = Interval(lo, hi)
    return out


def _classify(s, box):
    if isinstance(s, FiniteSet):
        return None
    return s.classify_box(box)


def check_certified(cand: CertificateCandidate, conds: ConditionSystem, tolerance=0,
                    cfg: CheckConfig | None = None) -> CheckReport:
    """Interval branch-and-bound; ``pass`` is a proof, ``unknown`` when undecided."""
    _check_signature(cand, conds)
    cfg = cfg or CheckConfig()
    system = conds.system
    if system.is_finite:
        return check_finite(cand, conds, tolerance)
    tol = rational(tolerance)
    try:
        root = _state_box(system)
    except UnsupportedError:
        warnings.warn("certified mode needs a bounded state set; falling back to sampled mode")
        return check_sampled(cand, conds, tolerance, cfg)
    used = [v for v in system.variables]
    symbolic: dict = {}
    results, cexs = [], []
    max_depth = cfg.depth * len(used)
    for n, cond in enumerate(conds.conditions):
        status = "pass"
        worst = None
        worst_pt = None
        start = _clip(root, cond.domain.region)
        stack = [(start, 0)] if start is not None else []
        visited = 0
        while stack:
            box, depth = stack.pop()
            inside = _classify(cond.domain.region, box)
            if inside is False:
                continue
            if cond.domain.exclude is not None:
                ex = _classify(cond.domain.exclude, box)
                if ex is True:
                    continue
                if ex is None:
                    inside = None
            if cond.domain.post is not None:
                fbox = {v: interval_eval(system.dynamics[v], box) for v in system.variables}
                post = _classify(cond.domain.post, fbox)
                if post is not None and post != cond.domain.post_inside:
                    continue
                if post is None:
                    inside = None
            visited += 1
            enc = _expression_interval(cand, cond, system, box, symbolic)
            bound = enc.lower if cond.strict else enc.upper
            if worst is None or (bound < worst if cond.strict else bound > worst):
                worst = bound
                worst_pt = tuple(box[v].mid for v in system.variables)
            proven = (enc.lower > -tol) if cond.strict else (enc.upper <= tol)
            if proven:
                continue
            if depth >= max_depth:
                mid = tuple(box[v].mid for v in system.variables)
                if cond.domain.contains(system, mid):
                    v = condition_value(cand, cond, system, mid)
                    if _violates(v, cond.strict, tol):
                        cexs.append(Counterexample(mid, n, cond.tag, v))
                        status = "fail"
                        break
                status = "unknown"
                continue
            v = max(used, key=lambda u: box[u].width)
            left, right = box[v].split()
            stack.append(({**box, v: right}, depth + 1))
            stack.append(({**box, v: left}, depth + 1))
        if visited == 0:
            status = "vacuous"
        results.append(ConditionResult(n, cond.tag, cond.family, cond.strict, status,
                                       worst, worst_pt, visited))
    statuses = {r.status for r in results}
    verdict = "fail" if "fail" in statuses else ("unknown" if "unknown" in statuses else "pass")
    return CheckReport(verdict, "certified", tol, results, cexs)


def check_certificate(cand: CertificateCandidate, conds: ConditionSystem, mode: str = "sampled",
                      tolerance=0, cfg: CheckConfig | None = None) -> CheckReport:
    """Check ``cand`` against ``conds`` (finite systems are always checked exhaustively)."""
    if conds.system.is_finite:
        return check_finite(cand, conds, tolerance)
    if mode == "sampled":
        return check_sampled(cand, conds, tolerance, cfg)
    if mode == "certified":
        return check_certified(cand, conds, tolerance, cfg)
    raise InputError(f"unknown check mode {mode!r}")
