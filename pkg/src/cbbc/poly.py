"""Exact multivariate polynomials, semialgebraic sets and interval bounds.

Coefficients are :class:`fractions.Fraction` throughout.  Decimal literals in
text input are read exactly (``0.33`` is ``33/100``), so the only numerical
error that can enter a check is the truncation already present in the input.
"""

from __future__ import annotations

import itertools
import math
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import InputError, ParseError, UnsupportedError

Number = "int | Fraction | float | str"


def rational(value) -> Fraction:
    """Coerce ``value`` to an exact rational.

    Floats are converted exactly (binary value), strings through their decimal
    spelling.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not rationals")
    if isinstance(value, (int, np.integer)):
        return Fraction(int(value))
    if isinstance(value, (float, np.floating)):
        if not math.isfinite(value):
            raise ValueError(f"non-finite value {value!r}")
        return Fraction(float(value))
    if isinstance(value, str):
        return Fraction(value.strip())
    raise TypeError(f"cannot interpret {value!r} as a rational")


# ---------------------------------------------------------------------------
# Polynomial
# ---------------------------------------------------------------------------


class Polynomial:
    """Sparse polynomial with rational coefficients.

    ``terms`` maps exponent vectors (aligned with ``variables``) to nonzero
    coefficients.  Instances are immutable.
    """

    __slots__ = ("variables", "terms", "_index")

    def __init__(self, variables: Sequence[str] = (), terms: Mapping | None = None):
        variables = tuple(variables)
        if len(set(variables)) != len(variables):
            raise ValueError(f"duplicate variables in {variables}")
        clean = {}
        for exps, coeff in (terms or {}).items():
            exps = tuple(int(e) for e in exps)
            if len(exps) != len(variables):
                raise ValueError("exponent vector length does not match variables")
            if any(e < 0 for e in exps):
                raise ValueError("negative exponent")
            coeff = rational(coeff)
            if coeff:
                clean[exps] = clean.get(exps, Fraction(0)) + coeff
                if not clean[exps]:
                    del clean[exps]
        object.__setattr__(self, "variables", variables)
        object.__setattr__(self, "terms", clean)
        object.__setattr__(self, "_index", {v: k for k, v in enumerate(variables)})

    def __setattr__(self, name, value):
        raise AttributeError("Polynomial is immutable")

    # construction helpers
    @classmethod
    def constant(cls, value, variables: Sequence[str] = ()) -> "Polynomial":
        n = len(tuple(variables))
        return cls(variables, {(0,) * n: value})

    @classmethod
    def var(cls, name: str, variables: Sequence[str] | None = None) -> "Polynomial":
        variables = tuple(variables) if variables is not None else (name,)
        if name not in variables:
            variables = variables + (name,)
        exps = tuple(1 if v == name else 0 for v in variables)
        return cls(variables, {exps: 1})

    @classmethod
    def monomial(cls, exps: Mapping[str, int], variables: Sequence[str], coeff=1):
        variables = tuple(variables)
        return cls(variables, {tuple(exps.get(v, 0) for v in variables): coeff})

    # basic queries
    def is_zero(self) -> bool:
        return not self.terms

    def is_constant(self) -> bool:
        return all(not any(e) for e in self.terms)

    def constant_term(self) -> Fraction:
        return self.terms.get((0,) * len(self.variables), Fraction(0))

    @property
    def degree(self) -> int:
        return max((sum(e) for e in self.terms), default=0)

    def used_variables(self) -> tuple[str, ...]:
        return tuple(v for k, v in enumerate(self.variables) if any(e[k] for e in self.terms))

    def with_variables(self, variables: Sequence[str]) -> "Polynomial":
        """Re-express over ``variables`` (which must contain all used ones)."""
        variables = tuple(variables)
        missing = set(self.used_variables()) - set(variables)
        if missing:
            raise ValueError(f"variables {sorted(missing)} would be dropped")
        idx = [self._index.get(v) for v in variables]
        out = {}
        for exps, c in self.terms.items():
            out[tuple(exps[i] if i is not None else 0 for i in idx)] = c
        return Polynomial(variables, out)

    def _aligned(self, other: "Polynomial"):
        if self.variables == other.variables:
            return self.variables, self.terms, other.terms
        extra = tuple(v for v in other.variables if v not in self._index)
        variables = self.variables + extra
        return (variables, self.with_variables(variables).terms,
                other.with_variables(variables).terms)

    # arithmetic
    def _coerce(self, other) -> "Polynomial":
        if isinstance(other, Polynomial):
            return other
        return Polynomial.constant(other, self.variables)

    def __add__(self, other):
        other = self._coerce(other)
        variables, a, b = self._aligned(other)
        out = dict(a)
        for e, c in b.items():
            out[e] = out.get(e, Fraction(0)) + c
        return Polynomial(variables, out)

    __radd__ = __add__

    def __neg__(self):
        return Polynomial(self.variables, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        if not isinstance(other, Polynomial):
            c = rational(other)
            return Polynomial(self.variables, {e: v * c for e, v in self.terms.items()})
        variables, a, b = self._aligned(other)
        out: dict = {}
        for ea, ca in a.items():
            for eb, cb in b.items():
                e = tuple(x + y for x, y in zip(ea, eb))
                out[e] = out.get(e, Fraction(0)) + ca * cb
        return Polynomial(variables, out)

    __rmul__ = __mul__

    def __pow__(self, n: int):
        if not isinstance(n, int) or n < 0:
            raise ValueError("only nonnegative integer powers are supported")
        result = Polynomial.constant(1, self.variables)
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def __eq__(self, other):
        if not isinstance(other, Polynomial):
            try:
                other = self._coerce(other)
            except TypeError:
                return NotImplemented
        _, a, b = self._aligned(other)
        return a == b

    def __hash__(self):
        used = self.used_variables()
        return hash(frozenset(self.with_variables(sorted(used)).terms.items()) | {tuple(sorted(used))})

    # evaluation
    def evaluate(self, point: Mapping[str, object]) -> Fraction:
        """Exact value at ``point`` (a mapping variable -> rational)."""
        values = []
        for k, v in enumerate(self.variables):
            if v in point:
                values.append(rational(point[v]))
            elif any(e[k] for e in self.terms):
                raise InputError(f"no value given for variable {v!r}")
            else:
                values.append(Fraction(0))
        total = Fraction(0)
        for exps, c in self.terms.items():
            term = c
            for val, e in zip(values, exps):
                if e:
                    term *= val ** e
            total += term
        return total

    __call__ = evaluate

    def compose(self, subst: Mapping[str, "Polynomial | object"]) -> "Polynomial":
        """Substitute every used variable by the polynomial ``subst[v]``."""
        images = {}
        out_vars: list[str] = []
        for k, v in enumerate(self.variables):
            used = any(e[k] for e in self.terms)
            if v not in subst:
                if used:
                    raise InputError(f"substitution does not cover variable {v!r}")
                continue
            img = subst[v]
            if not isinstance(img, Polynomial):
                img = Polynomial.constant(img)
            images[k] = img
            for w in img.variables:
                if w not in out_vars:
                    out_vars.append(w)
        result = Polynomial.constant(0, out_vars)
        power_cache: dict = {}
        for exps, c in self.terms.items():
            term = Polynomial.constant(c, out_vars)
            for k, e in enumerate(exps):
                if e:
                    key = (k, e)
                    if key not in power_cache:
                        power_cache[key] = images[k] ** e
                    term = term * power_cache[key]
            result = result + term
        return result.with_variables(out_vars)

    def partial(self, assignment: Mapping[str, object]) -> "Polynomial":
        """Fix some variables to constants; the rest stay symbolic."""
        subst = {v: Polynomial.var(v) for v in self.variables if v not in assignment}
        subst.update({v: Polynomial.constant(rational(val)) for v, val in assignment.items()
                      if v in self._index})
        keep = tuple(v for v in self.variables if v not in assignment)
        return self.compose(subst).with_variables(keep) if keep else self.compose(subst)

    def coefficient(self, exps: Mapping[str, int]) -> Fraction:
        key = tuple(exps.get(v, 0) for v in self.variables)
        return self.terms.get(key, Fraction(0))

    def sorted_terms(self):
        """Terms in graded-lexicographic order (highest degree first)."""
        return sorted(self.terms.items(), key=lambda t: (-sum(t[0]), tuple(-e for e in t[0])))

    # vectorized float evaluation
    def compile(self, variables: Sequence[str]):
        """Return ``fn(points)`` evaluating in floats on an (N, len(variables)) array."""
        p = self.with_variables(variables)
        if not p.terms:
            return lambda pts: np.zeros(len(pts))
        exps = np.array(list(p.terms.keys()), dtype=np.int64)
        coeffs = np.array([float(c) for c in p.terms.values()])
        maxdeg = int(exps.max()) if exps.size else 0

        def fn(points):
            pts = np.asarray(points, dtype=float)
            if pts.ndim == 1:
                pts = pts[:, None]
            n = pts.shape[1]
            powers = np.ones((maxdeg + 1,) + pts.shape)
            for d in range(1, maxdeg + 1):
                powers[d] = powers[d - 1] * pts
            mono = np.ones((pts.shape[0], len(coeffs)))
            for j in range(n):
                mono *= powers[exps[:, j], :, j].T
            return mono @ coeffs

        return fn

    # printing
    def to_string(self, decimal: bool = False) -> str:
        if not self.terms:
            return "0"
        parts = []
        for exps, c in self.sorted_terms():
            mono = "*".join(
                v if e == 1 else f"{v}^{e}" for v, e in zip(self.variables, exps) if e
            )
            mag = abs(c)
            if decimal:
                cstr = repr(float(mag))
            else:
                cstr = str(mag)
            if mono and mag == 1:
                body = mono
            elif mono:
                body = f"{cstr}*{mono}" if (decimal or mag.denominator == 1) else f"({cstr})*{mono}"
            else:
                body = cstr
            parts.append(("- " if c < 0 else "+ ") + body)
        text = " ".join(parts)
        return text[2:] if text.startswith("+ ") else "-" + text[2:]

    def __str__(self):
        return self.to_string()

    def __repr__(self):
        return f"Polynomial({self.variables!r}, {self.to_string()!r})"


def monomial_basis(variables: Sequence[str], degree: int) -> list[Polynomial]:
    """All monomials of total degree <= ``degree``, ascending degree, lex within a degree."""
    variables = tuple(variables)
    n = len(variables)
    exps = [e for e in itertools.product(range(degree + 1), repeat=n) if sum(e) <= degree]
    exps.sort(key=lambda e: (sum(e), tuple(-x for x in e)))
    return [Polynomial(variables, {e: 1}) for e in exps]


# ---------------------------------------------------------------------------
# Expression grammar
# ---------------------------------------------------------------------------

_TOKEN = re.compile(
    r"\s*(?:(?P<num>\d+(?:\.\d*)?(?:[eE][-+]?\d+)?|\.\d+(?:[eE][-+]?\d+)?)"
    r"|(?P<id>[A-Za-z_][A-Za-z_0-9]*'?)"
    r"|(?P<op>\*\*|[-+*/^(),]))"
)


def _tokenize(text: str):
    pos, tokens = 0, []
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise ParseError(f"unexpected character {text[pos:].strip()[:1]!r} in {text!r}")
        kind = m.lastgroup
        tokens.append((kind, m.group(kind)))
        pos = m.end()
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.pos = 0

    def peek(self):
        return self.tokens[self.pos] if self.pos < len(self.tokens) else (None, None)

    def take(self, value=None):
        tok = self.peek()
        if tok[0] is None or (value is not None and tok[1] != value):
            raise ParseError(f"expected {value or 'token'} in {self.text!r}")
        self.pos += 1
        return tok

    def parse(self):
        if not self.tokens:
            raise ParseError("empty expression")
        node = self.expr()
        if self.pos != len(self.tokens):
            raise ParseError(f"trailing input {self.peek()[1]!r} in {self.text!r}")
        return node

    def expr(self):
        node = self.term()
        while self.peek()[1] in ("+", "-"):
            op = self.take()[1]
            rhs = self.term()
            node = ("add", node, rhs if op == "+" else ("neg", rhs))
        return node

    def _starts_atom(self):
        kind, val = self.peek()
        return kind in ("num", "id") or val == "("

    def term(self):
        node = self.unary()
        while True:
            kind, val = self.peek()
            if val == "*":
                self.take()
                node = ("mul", node, self.unary())
            elif val == "/":
                self.take()
                node = ("div", node, self.unary())
            elif self._starts_atom():
                node = ("mul", node, self.power())
            else:
                return node

    def unary(self):
        val = self.peek()[1]
        if val == "-":
            self.take()
            return ("neg", self.unary())
        if val == "+":
            self.take()
            return self.unary()
        return self.power()

    def power(self):
        node = self.atom()
        if self.peek()[1] in ("^", "**"):
            self.take()
            sign = 1
            if self.peek()[1] == "-":
                raise ParseError(f"negative exponent in {self.text!r}")
            kind, val = self.take()
            if kind != "num" or not val.isdigit():
                raise ParseError(f"exponent must be a nonnegative integer in {self.text!r}")
            node = ("pow", node, sign * int(val))
        return node

    def atom(self):
        kind, val = self.take()
        if kind == "num":
            return ("num", Fraction(val))
        if kind == "id":
            if self.peek()[1] == "(":
                self.take("(")
                args = [self.expr()]
                while self.peek()[1] == ",":
                    self.take(",")
                    args.append(self.expr())
                self.take(")")
                return ("call", val, args)
            return ("var", val)
        if val == "(":
            node = self.expr()
            self.take(")")
            return node
        raise ParseError(f"unexpected {val!r} in {self.text!r}")


def parse_expression(text: str):
    """Parse into a small tuple AST (``num``/``var``/``add``/``mul``/...)."""
    return _Parser(text).parse()


def ast_to_polynomial(node, variables: Sequence[str] | None = None) -> Polynomial:
    base = tuple(variables) if variables is not None else ()

    def go(n):
        kind = n[0]
        if kind == "num":
            return Polynomial.constant(n[1], base)
        if kind == "var":
            if variables is not None and n[1] not in base:
                raise ParseError(f"unknown variable {n[1]!r} (declared: {', '.join(base) or 'none'})")
            return Polynomial.var(n[1], base)
        if kind == "add":
            return go(n[1]) + go(n[2])
        if kind == "neg":
            return -go(n[1])
        if kind == "mul":
            return go(n[1]) * go(n[2])
        if kind == "div":
            den = go(n[2])
            if not den.is_constant() or den.is_zero():
                raise ParseError("division only by nonzero constants")
            return go(n[1]) * (1 / den.constant_term())
        if kind == "pow":
            return go(n[1]) ** n[2]
        if kind == "call":
            raise ParseError(f"function {n[1]!r} is not allowed in a polynomial")
        raise ParseError(f"bad node {kind}")

    p = go(node)
    if variables is not None:
        return p.with_variables(base)
    return p


def parse_poly(text: str, variables: Sequence[str] | None = None) -> Polynomial:
    """Parse ``text`` with the shared grammar (``+ - * / ^``, parentheses)."""
    return ast_to_polynomial(parse_expression(text), variables)


# ---------------------------------------------------------------------------
# Intervals
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Interval:
    lower: object
    upper: object

    def __post_init__(self):
        lo, hi = self.lower, self.upper
        object.__setattr__(self, "lower", lo if _is_inf(lo) else rational(lo))
        object.__setattr__(self, "upper", hi if _is_inf(hi) else rational(hi))
        if self.lower > self.upper:
            raise ValueError(f"empty interval [{lo}, {hi}]")

    @classmethod
    def point(cls, v):
        return cls(v, v)

    @property
    def finite(self) -> bool:
        return not (_is_inf(self.lower) or _is_inf(self.upper))

    @property
    def width(self):
        return self.upper - self.lower

    @property
    def mid(self):
        return (self.lower + self.upper) / 2

    def contains(self, v) -> bool:
        return self.lower <= v <= self.upper

    def encloses(self, other: "Interval") -> bool:
        return self.lower <= other.lower and other.upper <= self.upper

    def hull(self, other: "Interval") -> "Interval":
        return Interval(min(self.lower, other.lower), max(self.upper, other.upper))

    def __add__(self, other):
        other = _as_interval(other)
        return Interval(self.lower + other.lower, self.upper + other.upper)

    __radd__ = __add__

    def __neg__(self):
        return Interval(-self.upper, -self.lower)

    def __sub__(self, other):
        return self + (-_as_interval(other))

    def __mul__(self, other):
        other = _as_interval(other)
        prods = [a * b for a in (self.lower, self.upper) for b in (other.lower, other.upper)]
        return Interval(min(prods), max(prods))

    __rmul__ = __mul__

    def __pow__(self, n: int):
        if n == 0:
            return Interval(1, 1)
        lo, hi = self.lower ** n, self.upper ** n
        if n % 2 == 1:
            return Interval(lo, hi)
        if self.lower >= 0:
            return Interval(lo, hi)
        if self.upper <= 0:
            return Interval(hi, lo)
        return Interval(0, max(lo, hi))

    def split(self):
        m = self.mid
        return Interval(self.lower, m), Interval(m, self.upper)


def _is_inf(v) -> bool:
    return isinstance(v, float) and math.isinf(v)


def _as_interval(v) -> Interval:
    return v if isinstance(v, Interval) else Interval.point(v)


def interval_eval(p: Polynomial, box: Mapping[str, Interval]) -> Interval:
    """Natural interval extension of ``p`` over ``box`` (no subdivision)."""
    result = Interval(0, 0)
    for exps, c in p.terms.items():
        term = Interval.point(c)
        for v, e in zip(p.variables, exps):
            if e:
                term = term * (box[v] ** e)
        result = result + term
    return result


def bound_on_box(p: Polynomial, box: Mapping[str, Interval], depth: int = 12) -> Interval:
    """Sound enclosure of the range of ``p`` over ``box``.

    The box is bisected along its widest used coordinate ``depth`` times in
    every branch; the enclosure is the hull of the leaf enclosures and never
    grows with depth.
    """
    used = p.used_variables()
    for v in used:
        if v not in box:
            raise InputError(f"box does not bound variable {v!r}")
        if not box[v].finite:
            raise UnsupportedError(f"unbounded interval for {v!r} in certified mode")
    if p.is_constant():
        c = p.constant_term()
        return Interval(c, c)
    box = {v: box[v] for v in used}

    def rec(b, d):
        enc = interval_eval(p, b)
        if d == 0 or enc.width == 0:
            return enc
        v = max(used, key=lambda u: b[u].width)
        left, right = b[v].split()
        return rec({**b, v: left}, d - 1).hull(rec({**b, v: right}, d - 1))

    return rec(box, depth)


# ---------------------------------------------------------------------------
# Sets
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SemialgebraicSet:
    """Conjunction of inequalities ``p >= 0`` (or ``p > 0`` when strict).

    An empty inequality list is the whole space.
    """

    variables: tuple[str, ...]
    inequalities: tuple[tuple[Polynomial, bool], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "variables", tuple(self.variables))
        object.__setattr__(
            self,
            "inequalities",
            tuple((p.with_variables(self.variables), bool(s)) for p, s in self.inequalities),
        )

    @classmethod
    def empty(cls, variables) -> "SemialgebraicSet":
        return cls(tuple(variables), ((Polynomial.constant(-1, variables), False),))

    @classmethod
    def box(cls, variables, bounds: Mapping[str, tuple]) -> "SemialgebraicSet":
        """Closed box; ``bounds[v] = (lo, hi)``."""
        ineqs = []
        for v, (lo, hi) in bounds.items():
            x = Polynomial.var(v, variables)
            ineqs.append((x - rational(lo), False))
            ineqs.append((rational(hi) - x, False))
        return cls(tuple(variables), tuple(ineqs))

    def is_trivially_empty(self) -> bool:
        return any(p.is_constant() and (p.constant_term() < 0 or (s and p.constant_term() == 0))
                   for p, s in self.inequalities)

    def contains(self, point) -> bool:
        point = _as_point(point, self.variables)
        for p, strict in self.inequalities:
            v = p.evaluate(point)
            if v < 0 or (strict and v == 0):
                return False
        return True

    __contains__ = contains

    def contains_array(self, points: np.ndarray) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        mask = np.ones(len(pts), dtype=bool)
        for p, strict in self.inequalities:
            vals = p.compile(self.variables)(pts)
            mask &= (vals > 0) if strict else (vals >= 0)
        return mask

    def intersect(self, other: "SemialgebraicSet") -> "SemialgebraicSet":
        variables = self.variables + tuple(v for v in other.variables if v not in self.variables)
        return SemialgebraicSet(variables, self.inequalities + other.inequalities)

    def classify_box(self, box: Mapping[str, Interval]):
        """True if the whole box is inside, False if disjoint, None if unknown."""
        inside = True
        for p, strict in self.inequalities:
            enc = interval_eval(p, box)
            if enc.upper < 0 or (strict and enc.upper <= 0):
                return False
            if not (enc.lower > 0 or (not strict and enc.lower >= 0)):
                inside = None
        return inside

    def bounding_box(self) -> dict[str, Interval] | None:
        """Box implied by univariate linear inequalities, or None if unbounded."""
        lo = {v: -math.inf for v in self.variables}
        hi = {v: math.inf for v in self.variables}
        for p, _ in self.inequalities:
            used = p.used_variables()
            if len(used) != 1 or p.degree != 1:
                continue
            v = used[0]
            a = p.coefficient({v: 1})
            b = p.constant_term()
            bound = -b / a
            if a > 0:
                lo[v] = max(lo[v], bound)
            else:
                hi[v] = min(hi[v], bound)
        if any(_is_inf(lo[v]) or _is_inf(hi[v]) for v in self.variables):
            return None
        if any(lo[v] > hi[v] for v in self.variables):
            return None
        return {v: Interval(lo[v], hi[v]) for v in self.variables}

    def is_box(self) -> bool:
        return all(len(p.used_variables()) <= 1 and p.degree <= 1 for p, _ in self.inequalities)

    def __str__(self):
        if not self.inequalities:
            return "true"
        return "; ".join(f"{p} {'>' if s else '>='} 0" for p, s in self.inequalities)


@dataclass(frozen=True)
class FiniteSet:
    """Explicitly enumerated set of points (used by finite-table systems)."""

    variables: tuple[str, ...]
    points: frozenset

    def __post_init__(self):
        object.__setattr__(self, "variables", tuple(self.variables))
        object.__setattr__(
            self, "points", frozenset(_as_tuple(p, len(self.variables)) for p in self.points)
        )

    def contains(self, point) -> bool:
        return _as_tuple(point, len(self.variables)) in self.points

    __contains__ = contains

    def intersect(self, other):
        if isinstance(other, FiniteSet):
            return FiniteSet(self.variables, self.points & other.points)
        return FiniteSet(self.variables, frozenset(p for p in self.points if other.contains(p)))

    def minus(self, other):
        return FiniteSet(self.variables, frozenset(p for p in self.points if not other.contains(p)))

    def sorted_points(self):
        return sorted(self.points)

    def is_trivially_empty(self) -> bool:
        return not self.points

    def __str__(self):
        return "{" + ", ".join(format_point(p) for p in self.sorted_points()) + "}"


def _as_tuple(point, n) -> tuple:
    if isinstance(point, Mapping):
        raise TypeError("finite sets take positional points")
    if not isinstance(point, (tuple, list)):
        point = (point,)
    if len(point) != n:
        raise InputError(f"point {point} has dimension {len(point)}, expected {n}")
    return tuple(rational(v) for v in point)


def _as_point(point, variables) -> dict:
    if isinstance(point, Mapping):
        return point
    if not isinstance(point, (tuple, list)):
        point = (point,)
    if len(point) != len(variables):
        raise InputError(f"point {point} has dimension {len(point)}, expected {len(variables)}")
    return dict(zip(variables, point))


def format_number(v, decimal: bool = False) -> str:
    v = rational(v)
    if decimal or v.denominator == 1:
        return f"{float(v):.12g}" if v.denominator != 1 else str(v.numerator)
    return str(v)


def _coordinate(v) -> str:
    """Exact coordinate text; terminating decimals that round-trip print as decimals."""
    v = rational(v)
    if v.denominator == 1:
        return str(v.numerator)
    short = repr(float(v))
    if "e" not in short and Fraction(short) == v:
        return short
    return str(v)


def format_point(p: Iterable) -> str:
    p = tuple(p)
    if len(p) == 1:
        return _coordinate(p[0])
    return "(" + ", ".join(_coordinate(v) for v in p) + ")"
