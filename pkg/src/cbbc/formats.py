"""Problem files, certificate files and report rendering.

Both file kinds are line oriented: ``[section]`` headers, ``key = value``
lines and ``#`` comments.  Decimal literals always parse to exact rationals.
The grammar is documented in ``docs/formats.md``.
"""

from __future__ import annotations

import dataclasses
import json
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping

import numpy as np

from .automata import OmegaAutomaton, parse_automaton
from .cegis import CegisConfig
from .certify import (CertificateCandidate, CheckReport, ConditionSystem, ExtremumPiece, PolyPiece,
                      TablePiece, cbbc_conditions, classic_conditions, condition_values_array,
                      parse_piece, product_cbbc_conditions)
from .errors import InputError, ParseError
from .model import CounterSystem, DynamicalSystem, Labeling
from .poly import (FiniteSet, Polynomial, SemialgebraicSet, format_number, format_point,
                   parse_poly, rational)

CERTIFICATE_VERSION = 1

_HEADER = re.compile(r"^\[\s*([A-Za-z_]+)\s*\]$")
_INTERVAL = re.compile(r"^(?P<var>\w+)\s+in\s+(?P<lo>[\[(])(?P<a>[^,]+),(?P<b>[^\])]+)(?P<hi>[\])])$")
_RELATION = re.compile(r"(>=|<=|>|<)")


# ---------------------------------------------------------------------------
# Low-level line handling
# ---------------------------------------------------------------------------


@dataclass
class Section:
    name: str
    line: int
    entries: list = field(default_factory=list)     # (key, value, line)
    raw: list = field(default_factory=list)         # (line number, text) for free-form bodies

    def get(self, key, default=None):
        for k, v, _ in self.entries:
            if k == key:
                return v
        return default

    def line_of(self, key) -> int | None:
        for k, _, n in self.entries:
            if k == key:
                return n
        return None


def _strip(raw: str) -> str:
    return raw.split("#", 1)[0].strip()


def split_sections(text: str, free_form=("automaton",)) -> dict[str, Section]:
    """Group lines under their ``[section]`` header, keeping line numbers."""
    sections: dict[str, Section] = {}
    current = None
    for n, raw in enumerate(text.splitlines(), start=1):
        line = _strip(raw)
        if not line:
            if current is not None:
                current.raw.append((n, ""))
            continue
        m = _HEADER.match(line)
        if m:
            name = m.group(1).lower()
            if name in sections:
                raise ParseError(f"duplicate section [{name}]", line=n)
            current = sections[name] = Section(name, n)
            continue
        if current is None:
            raise ParseError(f"text before the first section header: {line!r}", line=n)
        current.raw.append((n, raw))
        if current.name in free_form:
            continue
        if "=" not in line:
            raise ParseError(f"expected 'key = value', got {line!r}", line=n)
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ParseError("empty key", line=n)
        current.entries.append((key, value, n))
    return sections


def split_top(text: str, sep: str = ",") -> list[str]:
    """Split at ``sep`` outside parentheses and brackets."""
    out, depth, cur = [], 0, []
    for ch in text:
        if ch in "([{":
            depth += 1
        elif ch in ")]}":
            depth -= 1
        if ch == sep and depth == 0:
            out.append("".join(cur).strip())
            cur = []
        else:
            cur.append(ch)
    tail = "".join(cur).strip()
    if tail or out:
        out.append(tail)
    return [s for s in out if s]


def parse_number(text: str, line=None) -> Fraction:
    try:
        return rational(text.strip())
    except (ValueError, ZeroDivisionError, TypeError):
        raise ParseError(f"not a number: {text.strip()!r}", line=line)


def parse_point(text: str, n: int, line=None) -> tuple:
    text = text.strip()
    if text.startswith("(") and text.endswith(")"):
        parts = split_top(text[1:-1])
    else:
        parts = [text]
    if len(parts) != n:
        raise ParseError(f"point {text!r} should have {n} coordinates", line=line)
    return tuple(parse_number(p, line) for p in parts)


def parse_point_list(text: str, n: int, line=None) -> list[tuple]:
    text = text.strip()
    if not (text.startswith("{") and text.endswith("}")):
        raise ParseError(f"expected a point list like {{0, 1}}, got {text!r}", line=line)
    return [parse_point(p, n, line) for p in split_top(text[1:-1])]


# ---------------------------------------------------------------------------
# Set expressions
# ---------------------------------------------------------------------------


def _poly(text: str, variables, line) -> Polynomial:
    try:
        p = parse_poly(text, variables)
    except Exception as exc:  # parser errors carry no line number
        raise ParseError(f"bad expression {text!r}: {exc}", line=line)
    extra = set(p.used_variables()) - set(variables)
    if extra:
        raise ParseError(f"unknown variables {sorted(extra)} in {text!r}", line=line)
    return p.with_variables(variables)


def parse_inequality(text: str, variables, line=None) -> list[tuple[Polynomial, bool]]:
    """``lhs REL rhs`` or ``v in [a, b)`` as a list of ``(p, strict)`` meaning ``p >= 0``/``p > 0``."""
    text = text.strip()
    m = _INTERVAL.match(text)
    if m:
        var = m.group("var")
        if var not in variables:
            raise ParseError(f"unknown variable {var!r}", line=line)
        x = Polynomial.var(var, variables)
        lo, hi = parse_number(m.group("a"), line), parse_number(m.group("b"), line)
        if lo > hi:
            raise ParseError(f"empty interval {text!r}", line=line)
        return [(x - lo, m.group("lo") == "("), (hi - x, m.group("hi") == ")")]
    parts = _RELATION.split(text)
    if len(parts) != 3:
        raise ParseError(f"expected one comparison or an interval, got {text!r}", line=line)
    lhs, rel, rhs = parts
    a, b = _poly(lhs, variables, line), _poly(rhs, variables, line)
    if rel in (">=", ">"):
        return [(a - b, rel == ">")]
    return [(b - a, rel == "<")]


def parse_set(text: str, variables, line=None, universe: FiniteSet | None = None):
    """Parse a set expression.

    ``true``, ``empty``, a point list ``{p, q}`` or ``;``-separated
    inequalities.  With a finite ``universe`` the result is the finite subset
    of enumerated states satisfying the expression.
    """
    text = text.strip()
    variables = tuple(variables)
    if text.startswith("{"):
        pts = parse_point_list(text, len(variables), line)
        if universe is not None:
            missing = [p for p in pts if p not in universe.points]
            if missing:
                raise ParseError(f"{format_point(missing[0])} is not an enumerated state", line=line)
        return FiniteSet(variables, frozenset(pts))
    if text == "empty":
        s = SemialgebraicSet.empty(variables)
    elif text == "true":
        s = SemialgebraicSet(variables)
    else:
        ineqs = []
        for part in text.split(";"):
            if part.strip():
                ineqs.extend(parse_inequality(part, variables, line))
        if not ineqs:
            raise ParseError("empty set expression", line=line)
        s = SemialgebraicSet(variables, tuple(ineqs))
    if universe is not None:
        return universe.intersect(s)
    return s


def parse_description(text: str, variables, line=None) -> list[tuple[Polynomial, ...]]:
    """SOS set description: pieces separated by ``|``, each a ``;`` list of ``g >= 0``."""
    pieces = []
    for piece in text.split("|"):
        gs = []
        for part in piece.split(";"):
            if not part.strip():
                continue
            for p, _ in parse_inequality(part, variables, line):
                gs.append(p)
        if not gs:
            raise ParseError("empty piece in set description", line=line)
        pieces.append(tuple(gs))
    return pieces


def set_to_text(s) -> str:
    if isinstance(s, FiniteSet):
        return "{" + ", ".join(format_point(p) for p in s.sorted_points()) + "}"
    if not s.inequalities:
        return "true"
    return "; ".join(f"{p} {'>' if strict else '>='} 0" for p, strict in s.inequalities)


# ---------------------------------------------------------------------------
# Problem files
# ---------------------------------------------------------------------------

_CEGIS_KEYS = {f.name: f.type for f in dataclasses.fields(CegisConfig)}
_EXTRA_CEGIS_KEYS = ("k_max", "k_min")
_SOS_KEYS = ("initial_outside", "initial_inside", "outside", "inside")


@dataclass
class Problem:
    """A parsed problem file; exactly one of ``visit``/``automaton``/``unsafe`` drives the mode."""

    system: DynamicalSystem
    visit: object | None = None
    k: int | None = None
    labeling: Labeling | None = None
    automaton: OmegaAutomaton | None = None
    unsafe: object | None = None
    cegis: dict = field(default_factory=dict)
    sos: dict = field(default_factory=dict)
    name: str = ""

    @property
    def mode(self) -> str:
        if self.visit is not None:
            return "cbbc"
        if self.automaton is not None:
            return "product"
        return "classic"

    @property
    def signature(self) -> str:
        return {"cbbc": "counter", "product": "product", "classic": "state"}[self.mode]

    def default_k(self) -> int | None:
        if self.mode == "cbbc":
            return self.k
        if self.mode == "product" and self.automaton.semantics == "kUCA":
            return self.automaton.k
        return None

    def counter_system(self, k: int | None = None) -> CounterSystem:
        if self.mode != "cbbc":
            raise InputError("this problem has no [visit] section")
        k = self.k if k is None else k
        if k is None:
            raise InputError("no visit bound: set 'k' in [visit] or pass --k")
        return CounterSystem(self.system, self.visit, k)

    def kuca(self, k: int) -> OmegaAutomaton:
        return self.automaton.with_semantics("kUCA", k)

    def conditions(self, k: int | None = None) -> ConditionSystem:
        if self.mode == "cbbc":
            return cbbc_conditions(self.counter_system(k))
        if self.mode == "classic":
            return classic_conditions(self.system, self.unsafe)
        k = self.default_k() if k is None else k
        if k is None:
            raise InputError("no bound k for the automaton: use semantics 'kUCA <k>' or pass --k")
        return product_cbbc_conditions(self.system, self.labeling, self.kuca(k), k)


def _parse_system(sec: Section) -> DynamicalSystem:
    known = {"variables", "state", "initial", "states", "map", "strict"}
    variables = tuple(v.strip() for v in (sec.get("variables") or "").split(",") if v.strip())
    if not variables:
        raise ParseError("[system] needs 'variables = ...'", line=sec.line)
    for v in variables:
        if not re.fullmatch(r"[A-Za-z_]\w*", v):
            raise ParseError(f"bad variable name {v!r}", line=sec.line_of("variables"))
    updates, maps = {}, []
    for key, value, n in sec.entries:
        if key.endswith("'"):
            var = key[:-1].strip()
            if var not in variables:
                raise ParseError(f"update for unknown variable {var!r}", line=n)
            if var in updates:
                raise ParseError(f"duplicate update for {var!r}", line=n)
            updates[var] = _poly(value, variables, n)
        elif key == "map":
            maps.append((value, n))
        elif key not in known:
            raise ParseError(f"unknown key {key!r} in [system]", line=n)
        elif key != "map" and [k for k, _, _ in sec.entries].count(key) > 1:
            raise ParseError(f"duplicate key {key!r}", line=n)
    strict = (sec.get("strict") or "no").lower() in ("yes", "true", "1")
    finite = sec.get("states") is not None
    if finite and (updates or sec.get("state") is not None):
        raise ParseError("finite tables ('states', 'map') and polynomial dynamics "
                         "('x' = ...', 'state') are mutually exclusive", line=sec.line)
    n0 = sec.line_of("initial")
    if sec.get("initial") is None:
        raise ParseError("[system] needs 'initial = ...'", line=sec.line)
    if finite:
        n_states = sec.line_of("states")
        states = parse_point_list(sec.get("states"), len(variables), n_states)
        universe = FiniteSet(variables, frozenset(states))
        table = {}
        for value, n in maps:
            for entry in split_top(value):
                if "->" not in entry:
                    raise ParseError(f"map entry {entry!r} should read 'state -> state'", line=n)
                a, b = entry.split("->", 1)
                src, dst = parse_point(a, len(variables), n), parse_point(b, len(variables), n)
                if src in table:
                    raise ParseError(f"state {format_point(src)} mapped twice", line=n)
                for p in (src, dst):
                    if p not in universe.points:
                        raise ParseError(f"{format_point(p)} is not an enumerated state", line=n)
                table[src] = dst
        missing = [s for s in sorted(universe.points) if s not in table]
        if missing:
            raise ParseError(f"no successor for state {format_point(missing[0])}", line=n_states)
        initial = parse_set(sec.get("initial"), variables, n0, universe)
        return DynamicalSystem(variables, universe, initial, table=table, strict=strict)
    missing = [v for v in variables if v not in updates]
    if missing:
        raise ParseError(f"no update line \"{missing[0]}' = ...\"", line=sec.line)
    if sec.get("state") is None:
        raise ParseError("[system] needs 'state = ...'", line=sec.line)
    state = parse_set(sec.get("state"), variables, sec.line_of("state"))
    initial = parse_set(sec.get("initial"), variables, n0)
    return DynamicalSystem(variables, state, initial, dynamics=updates, strict=strict)


def _convert(value: str, typ, line):
    typ = str(typ)
    try:
        if "bool" in typ:
            return value.lower() in ("yes", "true", "1")
        if "float" in typ:
            return None if value.lower() == "none" else float(value)
        return None if value.lower() == "none" else int(value)
    except ValueError:
        raise ParseError(f"bad value {value!r}", line=line)


def parse_problem(text: str, name: str = "") -> Problem:
    sections = split_sections(text)
    allowed = {"system", "visit", "labels", "automaton", "unsafe", "cegis", "sos"}
    for s in sections.values():
        if s.name not in allowed:
            raise ParseError(f"unknown section [{s.name}]", line=s.line)
    if "system" not in sections:
        raise ParseError("missing [system] section", line=1)
    system = _parse_system(sections["system"])
    vs = system.variables
    universe = system.state_set if system.is_finite else None
    drivers = [s for s in ("visit", "automaton", "unsafe") if s in sections]
    if len(drivers) != 1:
        line = sections[drivers[1]].line if len(drivers) > 1 else 1
        raise ParseError("exactly one of [visit], [automaton] or [unsafe] must be present", line=line)
    prob = Problem(system, name=name)

    if "visit" in sections:
        sec = sections["visit"]
        for key, _, n in sec.entries:
            if key not in ("region", "k"):
                raise ParseError(f"unknown key {key!r} in [visit]", line=n)
        if sec.get("region") is None:
            raise ParseError("[visit] needs 'region = ...'", line=sec.line)
        prob.visit = parse_set(sec.get("region"), vs, sec.line_of("region"), universe)
        if sec.get("k") is not None:
            prob.k = int(parse_number(sec.get("k"), sec.line_of("k")))
            if prob.k < 0:
                raise ParseError("k must be nonnegative", line=sec.line_of("k"))

    if "unsafe" in sections:
        sec = sections["unsafe"]
        for key, _, n in sec.entries:
            if key != "region":
                raise ParseError(f"unknown key {key!r} in [unsafe]", line=n)
        if sec.get("region") is None:
            raise ParseError("[unsafe] needs 'region = ...'", line=sec.line)
        prob.unsafe = parse_set(sec.get("region"), vs, sec.line_of("region"), universe)

    if "labels" in sections:
        sec = sections["labels"]
        regions = {}
        for key, value, n in sec.entries:
            if key in regions:
                raise ParseError(f"letter {key!r} labelled twice", line=n)
            regions[key] = parse_set(value, vs, n, universe)
        prob.labeling = Labeling(tuple(regions), regions)

    if "automaton" in sections:
        sec = sections["automaton"]
        if prob.labeling is None:
            raise ParseError("an [automaton] needs a [labels] section", line=sec.line)
        body = "\n".join(text for _, text in sec.raw)
        first = sec.raw[0][0] if sec.raw else sec.line + 1
        aut = parse_automaton(body, prob.labeling.alphabet, first_line=first)
        missing = [a for a in aut.alphabet if a not in prob.labeling.regions]
        if missing:
            raise ParseError(f"letter {missing[0]!r} has no label region", line=sec.line)
        prob.automaton = aut

    if "cegis" in sections:
        for key, value, n in sections["cegis"].entries:
            if key in _CEGIS_KEYS:
                if key == "degree" and value.lower() in ("table", "none"):
                    prob.cegis[key] = None
                else:
                    prob.cegis[key] = _convert(value, _CEGIS_KEYS[key], n)
            elif key in _EXTRA_CEGIS_KEYS:
                prob.cegis[key] = _convert(value, int, n)
            else:
                raise ParseError(f"unknown key {key!r} in [cegis]", line=n)

    if "sos" in sections:
        for key, value, n in sections["sos"].entries:
            if key not in _SOS_KEYS:
                raise ParseError(f"unknown key {key!r} in [sos]", line=n)
            prob.sos[key] = parse_description(value, vs, n)
    return prob


def load_problem(path) -> Problem:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}")
    return parse_problem(text, name=str(path))


# ---------------------------------------------------------------------------
# Certificate files
# ---------------------------------------------------------------------------


def _index_text(idx: tuple, signature: str, state_names=None) -> str:
    parts = [str(i) for i in idx]
    if signature == "product" and state_names is not None:
        parts[0] = state_names[idx[0]]
    return ", ".join(parts)


def _piece_text(piece) -> str:
    if isinstance(piece, PolyPiece):
        return str(piece.poly)
    if isinstance(piece, ExtremumPiece):
        inner = ", ".join(_piece_text(p) for p in piece.parts)
        text = f"{piece.op}({inner})"
        if piece.offset:
            sign = "-" if piece.offset < 0 else "+"
            text += f" {sign} {abs(piece.offset)}"
        return text
    if isinstance(piece, TablePiece):
        return str(piece)
    raise InputError(f"cannot write piece of type {type(piece).__name__}")


_TABLE_PIECE = re.compile(r"^table\((?P<body>.*)\)\s*(?P<off>[+-]\s*[\d./]+)?$")


def parse_table_piece(text: str, variables, line=None) -> TablePiece:
    """``table(state: value, ...) [+ c]``, the written form of a :class:`TablePiece`."""
    m = _TABLE_PIECE.match(text.strip())
    if not m:
        raise ParseError(f"bad table piece {text!r}", line=line)
    values = {}
    for entry in split_top(m.group("body")):
        state, sep, value = entry.rpartition(":")
        if not sep:
            raise ParseError(f"table entries read 'state: value', got {entry!r}", line=line)
        values[parse_point(state, len(variables), line)] = parse_number(value, line)
    offset = parse_number(m.group("off").replace(" ", ""), line) if m.group("off") else Fraction(0)
    return TablePiece(tuple(variables), tuple(sorted(values.items())), offset)


def write_certificate(cand: CertificateCandidate, state_names=None, unrolled: bool = False,
                      k: int | None = None) -> str:
    """Exact text form; ``state_names`` turns product indices into automaton state names."""
    lines = [f"certificate {CERTIFICATE_VERSION}",
             f"signature = {cand.signature}",
             f"variables = {', '.join(cand.variables)}"]
    if cand.index_names:
        lines.append(f"indices = {', '.join(cand.index_names)}")
    if k is not None:
        lines.append(f"k = {k}")
    if unrolled:
        lines.append("unrolled = yes")
    if cand.provenance:
        lines.append(f"provenance = {' '.join(cand.provenance.split())}")
    if cand.polynomial is not None:
        lines.append(f"polynomial = {cand.polynomial}")
    elif cand.pieces is not None:
        for idx in sorted(cand.pieces):
            lines.append(f"piece {_index_text(idx, cand.signature, state_names)} = "
                         f"{_piece_text(cand.pieces[idx])}")
        if cand.default is not None:
            lines.append(f"default = {_piece_text(cand.default)}")
    else:
        for (x, idx), v in sorted(cand.table.items()):
            lines.append(f"point {', '.join(format_number(c) for c in x)} | "
                         f"{_index_text(idx, cand.signature, state_names)} = {format_number(v)}")
    return "\n".join(lines) + "\n"


@dataclass
class CertificateFile:
    candidate: CertificateCandidate
    unrolled: bool = False
    uses_state_names: bool = False
    k: int | None = None


def _parse_index(text: str, signature: str, n_idx: int, automaton, line) -> tuple:
    parts = [p.strip() for p in text.split(",") if p.strip()]
    if len(parts) != n_idx:
        raise ParseError(f"index {text!r} should have {n_idx} entries", line=line)
    out = []
    for pos, p in enumerate(parts):
        if re.fullmatch(r"-?\d+", p):
            out.append(int(p))
        elif signature == "product" and pos == 0:
            if automaton is None:
                raise ParseError(f"state name {p!r} needs the problem's automaton", line=line)
            if p not in automaton.states:
                raise ParseError(f"unknown automaton state {p!r}", line=line)
            out.append(automaton.index(p))
        else:
            raise ParseError(f"bad index entry {p!r}", line=line)
    return tuple(out)


def parse_certificate(text: str, automaton: OmegaAutomaton | None = None) -> CertificateFile:
    """Parse a certificate; product state names resolve against ``automaton``.

    An ``unrolled = yes`` certificate names states of the unrolled automaton,
    so pass ``unroll(automaton)`` for those.
    """
    header, keys, pieces, points = None, {}, [], []
    for n, raw in enumerate(text.splitlines(), start=1):
        line = _strip(raw)
        if not line:
            continue
        if header is None:
            m = re.fullmatch(r"certificate\s+(\d+)", line)
            if not m:
                raise ParseError("certificate files start with 'certificate 1'", line=n)
            if int(m.group(1)) != CERTIFICATE_VERSION:
                raise ParseError(f"unsupported certificate version {m.group(1)}", line=n)
            header = n
            continue
        if "=" not in line:
            raise ParseError(f"expected 'key = value', got {line!r}", line=n)
        lhs, value = (s.strip() for s in line.rsplit("=", 1)) if line.startswith("point") \
            else (s.strip() for s in line.split("=", 1))
        if lhs.startswith("piece "):
            pieces.append((lhs[6:], value, n))
        elif lhs.startswith("point "):
            points.append((lhs[6:], value, n))
        else:
            if lhs in keys:
                raise ParseError(f"duplicate key {lhs!r}", line=n)
            keys[lhs] = (value, n)
    if header is None:
        raise ParseError("empty certificate file", line=1)
    for key, (_, n) in keys.items():
        if key not in ("signature", "variables", "indices", "unrolled", "provenance", "k",
                       "polynomial", "default"):
            raise ParseError(f"unknown key {key!r}", line=n)
    if "signature" not in keys or "variables" not in keys:
        raise ParseError("certificate needs 'signature' and 'variables'", line=header)
    signature = keys["signature"][0]
    variables = tuple(v.strip() for v in keys["variables"][0].split(",") if v.strip())
    index_names = None
    if "indices" in keys:
        index_names = tuple(v.strip() for v in keys["indices"][0].split(",") if v.strip())
    unrolled = keys.get("unrolled", ("no", 0))[0].lower() in ("yes", "true", "1")
    provenance = keys.get("provenance", ("", 0))[0]
    shapes = [("polynomial" in keys), bool(pieces), bool(points)]
    if sum(shapes) != 1:
        raise ParseError("give exactly one of 'polynomial', 'piece' lines or 'point' lines",
                         line=header)
    try:
        n_idx = len(index_names) if index_names is not None else \
            {"state": 0, "counter": 1, "product": 2}[signature]
    except KeyError:
        raise ParseError(f"unknown signature {signature!r}", line=keys["signature"][1])
    uses_names = False
    kwargs: dict = {}
    if "polynomial" in keys:
        value, n = keys["polynomial"]
        names = index_names if index_names is not None else \
            {"state": (), "counter": ("i",), "product": ("i", "l")}[signature]
        kwargs["polynomial"] = _poly(value, variables + tuple(names), n)
    elif pieces:
        table = {}
        for idx_text, value, n in pieces:
            uses_names |= bool(re.search(r"[A-Za-z]", idx_text))
            idx = _parse_index(idx_text, signature, n_idx, automaton, n)
            if idx in table:
                raise ParseError(f"index {idx_text!r} given twice", line=n)
            if value.startswith("table("):
                table[idx] = parse_table_piece(value, variables, n)
                continue
            try:
                table[idx] = parse_piece(value, variables)
            except Exception as exc:
                raise ParseError(f"bad piece {value!r}: {exc}", line=n)
        kwargs["pieces"] = table
        if "default" in keys:
            value, n = keys["default"]
            kwargs["default"] = parse_piece(value, variables)
    else:
        table = {}
        for lhs, value, n in points:
            if "|" not in lhs and n_idx:
                raise ParseError("point lines read 'point <state> | <index> = value'", line=n)
            x_text, _, idx_text = lhs.partition("|")
            x = tuple(parse_number(c, n) for c in x_text.split(","))
            if len(x) != len(variables):
                raise ParseError(f"state {x_text.strip()!r} has the wrong dimension", line=n)
            uses_names |= bool(re.search(r"[A-Za-z]", idx_text))
            idx = _parse_index(idx_text, signature, n_idx, automaton, n) if n_idx else ()
            if (x, idx) in table:
                raise ParseError("point given twice", line=n)
            table[(x, idx)] = parse_number(value, n)
        kwargs["table"] = table
    k = None
    if "k" in keys:
        k = int(parse_number(*keys["k"]))
    cand = CertificateCandidate(signature, variables, index_names, provenance=provenance, **kwargs)
    return CertificateFile(cand, unrolled, uses_names, k)


def load_certificate(path, automaton=None) -> CertificateFile:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}")
    return parse_certificate(text, automaton)


def certificate_mentions_unrolled(text: str) -> bool:
    return any(re.fullmatch(r"unrolled\s*=\s*(yes|true|1)", _strip(l)) for l in text.splitlines())


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------


def margin_table(cand: CertificateCandidate, conds: ConditionSystem, points: int = 21,
                 families=None) -> tuple[list[str], list[tuple]]:
    """Condition values on a regular grid (``None`` where a condition does not apply).

    One-dimensional systems use ``points`` grid points; finite systems use
    every enumerated state.  Only the listed families are tabulated (by
    default every family whose terms read ``f(x)``).
    """
    system = conds.system
    if system.is_finite:
        pts = np.array([[float(c) for c in s] for s in system.states()])
    else:
        box = system.state_set.bounding_box()
        if box is None:
            raise InputError("margin tables need a bounded state set")
        axes = [np.linspace(float(box[v].lower), float(box[v].upper), points)
                for v in system.variables]
        pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, len(axes))
    fpts = system.successor_array(pts)
    chosen = [c for c in conds.conditions
              if (c.family in families if families else any(t.successor for t in c.terms))]
    columns = [c.tag for c in chosen]
    values = []
    for c in chosen:
        mask = c.domain.mask(system, pts, fpts)
        vals = condition_values_array(cand, c, pts, fpts)
        values.append([float(v) if m else None for v, m in zip(vals, mask)])
    rows = [(tuple(float(v) for v in pts[r]),) + tuple(col[r] for col in values)
            for r in range(len(pts))]
    return columns, rows


def margin_table_text(columns, rows) -> str:
    lines = ["margins:", "  columns: x | " + " | ".join(columns)]
    for row in rows:
        x = ", ".join(f"{v:.6g}" for v in row[0])
        cells = ["-" if v is None else f"{v:.6g}" for v in row[1:]]
        lines.append(f"  {x} | " + " | ".join(cells))
    return "\n".join(lines) + "\n"


def report_text(title: str, fields: Mapping, check: CheckReport | None = None,
                extra: str = "") -> str:
    lines = [f"== {title} =="]
    for key, value in fields.items():
        lines.append(f"{key}: {value}")
    text = "\n".join(lines) + "\n"
    if check is not None:
        text += check.to_text()
        worst = check.worst_by_family()
        if worst:
            text += "worst by family:\n"
            for fam in sorted(worst):
                text += f"  {fam}: {worst[fam]:.12g}\n"
    return text + extra


def report_json(title: str, fields: Mapping, check: CheckReport | None = None,
                margins=None) -> str:
    doc = {"command": title}
    doc.update({k: v for k, v in fields.items()})
    if check is not None:
        doc["check"] = check.to_dict()
        doc["check"]["worst_by_family"] = check.worst_by_family()
    if margins is not None:
        columns, rows = margins
        doc["margins"] = {"columns": columns,
                          "rows": [{"x": list(r[0]), "values": list(r[1:])} for r in rows]}
    return json.dumps(doc, indent=2, sort_keys=True, default=str) + "\n"
